"""
Sliding-window segmentation of trials.
"""

import logging

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from src.data.recordings import Recording
from src.errors import ConfigurationError, SignalTooShortError

logger = logging.getLogger(__name__)

DEFAULT_WINDOW_S = 3.0
DEFAULT_STRIDE_S = 1.0


def num_segments(num_samples: int, window: int, stride: int) -> int:
    """floor((T - window) / stride) + 1, or 0 when the trial is shorter than a window."""
    if num_samples < window:
        return 0
    return (num_samples - window) // stride + 1


def window_samples(seconds: float, fs: float) -> int:
    """Length of a window in samples; must be a whole number."""
    samples = seconds * fs
    if samples < 1 or abs(samples - round(samples)) > 1e-9:
        raise ConfigurationError(
            f"{seconds} s at {fs} Hz is not a positive whole number of samples"
        )
    return int(round(samples))


def segment_signal(samples: np.ndarray, window: int, stride: int) -> np.ndarray:
    """
    Cut a ``channels x time`` array into windows.

    Returns:
        ``segments x channels x window`` array (a copy)

    Raises:
        SignalTooShortError: If the signal is shorter than one window
    """
    samples = np.asarray(samples)
    if window < 1 or stride < 1:
        raise ConfigurationError(f"Window and stride must be >= 1, got {window}, {stride}")
    if samples.shape[-1] < window:
        raise SignalTooShortError(
            f"Trial of {samples.shape[-1]} samples is shorter than a {window}-sample window"
        )
    views = sliding_window_view(samples, window, axis=-1)[..., ::stride, :]
    return np.ascontiguousarray(np.moveaxis(views, -2, 0))


def segment_trials(
    recording: Recording,
    window_s: float = DEFAULT_WINDOW_S,
    stride_s: float = DEFAULT_STRIDE_S,
) -> np.ndarray:
    """
    Overlapping segments of one recording.

    Args:
        recording: Trial to cut
        window_s: Window length in seconds
        stride_s: Hop between window starts in seconds

    Returns:
        ``segments x channels x (window_s * fs)`` array; a 60 s trial at
        128 Hz gives 58 segments

    Raises:
        SignalTooShortError: If the trial is shorter than one window
    """
    window = window_samples(window_s, recording.fs)
    stride = window_samples(stride_s, recording.fs)
    return segment_signal(recording.samples, window, stride)
