"""
Recording ingestion, segmentation, features, normalization and splits.
"""

from src.data.recordings import Recording, RecordingSet, load_recordings, save_recordings
from src.data.segmentation import num_segments, segment_signal, segment_trials
from src.data.features import (
    FEATURE_KINDS,
    FeatureSet,
    build_feature_set,
    correlation_graphs,
    extract_features,
)
from src.data.normalize import NormalizationStats, zscore_normalize
from src.data.split import SPLIT_MODES, SplitIndices, split, stratified_split
from src.data.synth import default_profiles, synth_dataset
from src.data.deap import convert_deap

__all__ = [
    "Recording",
    "RecordingSet",
    "load_recordings",
    "save_recordings",
    "num_segments",
    "segment_signal",
    "segment_trials",
    "FEATURE_KINDS",
    "FeatureSet",
    "build_feature_set",
    "correlation_graphs",
    "extract_features",
    "NormalizationStats",
    "zscore_normalize",
    "SPLIT_MODES",
    "SplitIndices",
    "split",
    "stratified_split",
    "default_profiles",
    "synth_dataset",
    "convert_deap",
]
