"""
Per-feature z-scoring with statistics taken from the training split only.
"""

from dataclasses import dataclass
from typing import List, Sequence, Tuple
import logging

import numpy as np

from src.errors import ConfigurationError, ShapeError

logger = logging.getLogger(__name__)

MIN_STD = 1e-12


@dataclass(frozen=True)
class NormalizationStats:
    """Column means and population standard deviations of the training features."""

    mean: np.ndarray
    std: np.ndarray

    @property
    def constant_columns(self) -> np.ndarray:
        """Columns whose std is below the cut-off (mapped to 0)."""
        return self.std < MIN_STD

    def apply(self, x: np.ndarray) -> np.ndarray:
        """Normalize rows of ``x``; constant columns become 0."""
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.mean.size:
            raise ShapeError(f"Expected samples x {self.mean.size} features, got {x.shape}")
        keep = ~self.constant_columns
        scale = np.where(keep, self.std, 1.0)
        return np.where(keep, (x - self.mean) / scale, 0.0)


def zscore_normalize(
    train: np.ndarray, others: Sequence[np.ndarray] = ()
) -> Tuple[np.ndarray, List[np.ndarray], NormalizationStats]:
    """
    Z-score features using training statistics.

    Args:
        train: ``samples x features`` training matrix (>= 2 rows)
        others: Further matrices normalized with the training statistics

    Returns:
        (normalized train, normalized others, statistics)

    Raises:
        ConfigurationError: If fewer than two training samples are given
    """
    train = np.asarray(train, dtype=np.float64)
    if train.ndim != 2 or train.shape[0] < 2:
        raise ConfigurationError(
            f"Normalization needs >= 2 training samples, got shape {train.shape}"
        )
    stats = NormalizationStats(mean=train.mean(axis=0), std=train.std(axis=0))
    constant = int(stats.constant_columns.sum())
    if constant:
        logger.debug(f"{constant} constant feature column(s) mapped to 0")
    return stats.apply(train), [stats.apply(x) for x in others], stats
