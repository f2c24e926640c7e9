"""
Seeded, class-stratified train/test split.
"""

from dataclasses import dataclass
from typing import Dict, Optional
import logging

import numpy as np

from src.errors import ConfigurationError, ShapeError

logger = logging.getLogger(__name__)

SPLIT_MODES = ("segment", "trial")


@dataclass(frozen=True)
class SplitIndices:
    """Disjoint, sorted sample indices covering the whole dataset."""

    train: np.ndarray
    test: np.ndarray


def train_count(total: int, ratio: float) -> int:
    """round(ratio * total), kept inside [1, total - 1]."""
    return int(min(max(np.floor(ratio * total + 0.5), 1), total - 1))


def _class_quotas(labels: np.ndarray, n_train: int) -> Dict[int, int]:
    classes, counts = np.unique(labels, return_counts=True)
    shares = n_train * counts / labels.size
    quotas = np.floor(shares).astype(np.int64)
    remainder = n_train - int(quotas.sum())
    fractions = shares - quotas
    # largest fraction first, smaller class index on ties
    order = np.lexsort((classes, -fractions))
    quotas[order[:remainder]] += 1
    return dict(zip(classes.tolist(), quotas.tolist()))


def stratified_split(labels: np.ndarray, ratio: float = 0.8, seed: int = 0) -> SplitIndices:
    """
    Split item indices so every class keeps roughly the same train share.

    Each class gets floor(n_train * n_c / n) training items; the remaining
    slots go to the classes with the largest fractional shares. Items are
    drawn from a seeded shuffle of each class.

    Args:
        labels: Class per item (>= 2 items)
        ratio: Training fraction in (0, 1)
        seed: Shuffle seed

    Returns:
        SplitIndices with |train| = round(ratio * n)
    """
    labels = np.asarray(labels)
    if labels.ndim != 1:
        raise ShapeError(f"Labels must be 1-D, got shape {labels.shape}")
    if labels.size < 2:
        raise ConfigurationError(f"Splitting needs >= 2 samples, got {labels.size}")
    if not 0 < ratio < 1:
        raise ConfigurationError(f"Split ratio must be in (0, 1), got {ratio}")

    rng = np.random.default_rng(seed)
    quotas = _class_quotas(labels, train_count(labels.size, ratio))
    train_parts = []
    for cls, quota in quotas.items():
        members = np.flatnonzero(labels == cls)
        train_parts.append(members[rng.permutation(members.size)[:quota]])

    train = np.sort(np.concatenate(train_parts))
    test = np.setdiff1d(np.arange(labels.size), train)
    return SplitIndices(train=train, test=test)


def split(
    labels: np.ndarray,
    ratio: float = 0.8,
    seed: int = 0,
    groups: Optional[np.ndarray] = None,
) -> SplitIndices:
    """
    Train/test partition of samples.

    Without ``groups`` samples are split individually. With ``groups``
    (e.g. the source trial of each segment) whole groups are assigned to
    one side, stratified by the label of each group.

    Args:
        labels: Class per sample
        ratio: Training fraction
        seed: Shuffle seed
        groups: Optional group id per sample; all samples of a group must
            share one label

    Returns:
        SplitIndices over sample indices
    """
    labels = np.asarray(labels)
    if groups is None:
        result = stratified_split(labels, ratio, seed)
    else:
        groups = np.asarray(groups)
        if groups.shape != labels.shape:
            raise ShapeError(f"groups {groups.shape} and labels {labels.shape} differ in shape")
        group_ids, first = np.unique(groups, return_index=True)
        group_labels = labels[first]
        for gid, label in zip(group_ids, group_labels):
            if np.any(labels[groups == gid] != label):
                raise ConfigurationError(f"Group {gid} mixes several labels")
        by_group = stratified_split(group_labels, ratio, seed)
        in_train = np.isin(groups, group_ids[by_group.train])
        result = SplitIndices(train=np.flatnonzero(in_train), test=np.flatnonzero(~in_train))

    logger.info(
        f"Split {labels.size} samples: {result.train.size} train / {result.test.size} test "
        f"({'trial' if groups is not None else 'segment'} level, seed {seed})"
    )
    return result
