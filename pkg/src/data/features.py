"""
Graph-signal features: one power or entropy value per (band, electrode) vertex.

Vertex order is band-major, ``v = band * num_electrodes + electrode``, the
order in which merged band graphs stack their blocks.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial
from pathlib import Path
from typing import List, Sequence, Tuple, Union
import logging

import numpy as np

from src.data.recordings import Recording, RecordingSet
from src.data.segmentation import DEFAULT_STRIDE_S, DEFAULT_WINDOW_S, segment_trials
from src.data.segmentation import segment_signal, window_samples
from src.dsp.bands import NUM_BANDS
from src.dsp.features import DEFAULT_ENTROPY_BINS, band_entropies, band_powers, decompose
from src.dsp.fir import FirFilter
from src.errors import ConfigurationError, ShapeError, UsageError
from src.graph.construction import CorrelationAccumulator
from src.graph.weighted_graph import WeightedGraph

logger = logging.getLogger(__name__)

FEATURE_KINDS = ("power", "entropy")


@dataclass
class FeatureSet:
    """
    Stacked feature samples, one row per segment.

    Attributes:
        features: ``samples x vertices`` matrix
        labels: Class per sample
        subjects: Subject id per sample
        segment_indices: Position of the segment inside its trial
        recording_indices: Index of the source recording in its RecordingSet
    """

    features: np.ndarray
    labels: np.ndarray
    subjects: np.ndarray
    segment_indices: np.ndarray
    recording_indices: np.ndarray

    def __post_init__(self) -> None:
        n = self.features.shape[0]
        for name in ("labels", "subjects", "segment_indices", "recording_indices"):
            if np.shape(getattr(self, name)) != (n,):
                raise ShapeError(f"{name} must have one entry per sample ({n})")

    def __len__(self) -> int:
        return self.features.shape[0]

    @property
    def num_vertices(self) -> int:
        return self.features.shape[1]

    def subset(self, indices: np.ndarray) -> "FeatureSet":
        """Samples at ``indices``, in that order."""
        idx = np.asarray(indices, dtype=np.int64)
        return FeatureSet(
            features=self.features[idx],
            labels=self.labels[idx],
            subjects=self.subjects[idx],
            segment_indices=self.segment_indices[idx],
            recording_indices=self.recording_indices[idx],
        )

    def save(self, path: Union[str, Path], overwrite: bool = False) -> Path:
        """Write an ``.npz`` archive."""
        output_path = Path(path)
        if output_path.exists() and not overwrite:
            raise UsageError(f"{output_path} exists; pass --overwrite to replace it")
        output_path.parent.mkdir(parents=True, exist_ok=True)
        with open(output_path, "wb") as f:
            np.savez(
                f,
                features=self.features,
                labels=self.labels,
                subjects=self.subjects,
                segment_indices=self.segment_indices,
                recording_indices=self.recording_indices,
            )
        logger.info(f"Saved {len(self)} feature samples to {output_path}")
        return output_path

    @classmethod
    def load(cls, path: Union[str, Path]) -> "FeatureSet":
        with np.load(path) as data:
            return cls(**{key: data[key] for key in data.files})


def extract_features(
    segments: np.ndarray,
    filters: Sequence[FirFilter],
    feature_kind: str = "entropy",
    bins: int = DEFAULT_ENTROPY_BINS,
) -> np.ndarray:
    """
    Vertex features of segments.

    Args:
        segments: ``segments x channels x samples`` (or one ``channels x samples``)
        filters: Canonical band filter bank
        feature_kind: ``power`` or ``entropy``
        bins: Histogram bins for entropy

    Returns:
        ``segments x (bands * channels)`` array in band-major order
    """
    if feature_kind not in FEATURE_KINDS:
        raise ConfigurationError(
            f"feature_kind must be one of {FEATURE_KINDS}, got {feature_kind!r}"
        )
    x = np.asarray(segments, dtype=np.float64)
    if x.ndim == 2:
        x = x[np.newaxis]
    if x.ndim != 3:
        raise ShapeError(f"Expected segments x channels x samples, got shape {x.shape}")

    bands = decompose(x, filters)
    if feature_kind == "power":
        values = band_powers(bands)
    else:
        values = band_entropies(bands, bins)
    # (segments, channels, bands) -> (segments, bands, channels)
    return np.ascontiguousarray(values.transpose(0, 2, 1)).reshape(x.shape[0], -1)


def baseline_features(
    recording: Recording,
    filters: Sequence[FirFilter],
    feature_kind: str,
    window_s: float = DEFAULT_WINDOW_S,
    stride_s: float = DEFAULT_STRIDE_S,
    bins: int = DEFAULT_ENTROPY_BINS,
) -> np.ndarray:
    """Mean feature vector over the windows of a recording's baseline."""
    if recording.baseline is None:
        raise ConfigurationError(
            f"Baseline subtraction requested but subject {recording.subject}, "
            f"video {recording.video_id} has no baseline signal"
        )
    window = window_samples(window_s, recording.fs)
    stride = window_samples(stride_s, recording.fs)
    windows = segment_signal(recording.baseline, window, stride)
    return extract_features(windows, filters, feature_kind, bins).mean(axis=0)


def _recording_features(
    recording: Recording,
    filters: Sequence[FirFilter],
    feature_kind: str,
    window_s: float,
    stride_s: float,
    subtract_baseline: bool,
    bins: int,
) -> np.ndarray:
    segments = segment_trials(recording, window_s, stride_s)
    features = extract_features(segments, filters, feature_kind, bins)
    if subtract_baseline:
        features = features - baseline_features(
            recording, filters, feature_kind, window_s, stride_s, bins
        )
    return features


def build_feature_set(
    recordings: RecordingSet,
    filters: Sequence[FirFilter],
    feature_kind: str = "entropy",
    window_s: float = DEFAULT_WINDOW_S,
    stride_s: float = DEFAULT_STRIDE_S,
    subtract_baseline: bool = False,
    bins: int = DEFAULT_ENTROPY_BINS,
    jobs: int = 1,
) -> FeatureSet:
    """
    Segment every recording and extract its features.

    Samples are ordered by recording (manifest order) and then by segment,
    also when ``jobs > 1`` spreads recordings over worker processes.

    Args:
        recordings: Source trials
        filters: Canonical band filter bank
        feature_kind: ``power`` or ``entropy``
        window_s: Segment length in seconds
        stride_s: Hop between segments in seconds
        subtract_baseline: Subtract each trial's baseline features
        bins: Histogram bins for entropy
        jobs: Worker processes

    Returns:
        FeatureSet with one sample per segment
    """
    if len(recordings) == 0:
        raise ConfigurationError("No recordings to extract features from")
    work = partial(
        _recording_features,
        filters=tuple(filters),
        feature_kind=feature_kind,
        window_s=window_s,
        stride_s=stride_s,
        subtract_baseline=subtract_baseline,
        bins=bins,
    )
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            per_recording = list(pool.map(work, recordings.recordings))
    else:
        per_recording = [work(rec) for rec in recordings.recordings]

    counts = [block.shape[0] for block in per_recording]
    features = np.concatenate(per_recording, axis=0)
    labels = np.repeat([r.video_id for r in recordings], counts).astype(np.int64)
    subjects = np.repeat([r.subject for r in recordings], counts).astype(np.int64)
    segment_indices = np.concatenate([np.arange(c) for c in counts]).astype(np.int64)
    recording_indices = np.repeat(np.arange(len(recordings)), counts).astype(np.int64)

    if not np.all(np.isfinite(features)):
        raise ConfigurationError("Feature extraction produced non-finite values")
    logger.info(
        f"Extracted {feature_kind} features: {features.shape[0]} samples x "
        f"{features.shape[1]} vertices from {len(recordings)} recording(s)"
    )
    return FeatureSet(features, labels, subjects, segment_indices, recording_indices)


def correlation_graphs(
    recordings: RecordingSet,
    filters: Sequence[FirFilter],
    samples: FeatureSet,
    window_s: float = DEFAULT_WINDOW_S,
    stride_s: float = DEFAULT_STRIDE_S,
) -> List[WeightedGraph]:
    """
    Per-band functional-connectivity graphs from the segments in ``samples``.

    Only the listed segments contribute, so passing the training split
    keeps test data out of graph construction. Recordings are processed
    one at a time.

    Returns:
        One dense correlation graph per band
    """
    accumulators = [CorrelationAccumulator(len(recordings.channels)) for _ in range(NUM_BANDS)]
    wanted: List[Tuple[int, np.ndarray]] = []
    for rec_index in np.unique(samples.recording_indices):
        mask = samples.recording_indices == rec_index
        wanted.append((int(rec_index), np.unique(samples.segment_indices[mask])))

    for rec_index, segment_ids in wanted:
        segments = segment_trials(recordings[rec_index], window_s, stride_s)[segment_ids]
        bands = decompose(segments.astype(np.float64), filters)
        for b, acc in enumerate(accumulators):
            acc.update(bands[:, :, b, :])

    graphs = [acc.graph() for acc in accumulators]
    logger.info(
        f"Correlation graphs from {accumulators[0].num_trials} segments "
        f"of {len(wanted)} recording(s)"
    )
    return graphs

