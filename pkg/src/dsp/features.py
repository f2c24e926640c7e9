"""
Band decomposition and per-band power / entropy features.
"""

from pathlib import Path
from typing import Mapping, Optional, Sequence, Tuple, Union
import logging

import numpy as np
from scipy import stats

from src.dsp.bands import CANONICAL_BANDS, NUM_BANDS
from src.dsp.fir import DEFAULT_ORDER, FirFilter, apply_fir, design_bandpass, load_fir_coefficients
from src.errors import ConfigurationError, DomainError

logger = logging.getLogger(__name__)

DEFAULT_ENTROPY_BINS = 16


def band_power(x: np.ndarray) -> float:
    """
    Mean-square power of a signal.

    Args:
        x: Real sequence

    Returns:
        (1/N) * sum(x^2)

    Raises:
        DomainError: If the sequence is empty
    """
    x = np.asarray(x, dtype=np.float64)
    if x.size == 0:
        raise DomainError("band_power of an empty signal is undefined")
    return float(np.mean(np.square(x)))


def band_powers(x: np.ndarray) -> np.ndarray:
    """Mean-square power along the last axis."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 0 or x.shape[-1] == 0:
        raise DomainError("band power needs at least one sample")
    return np.mean(np.square(x), axis=-1)


def band_entropy(x: np.ndarray, bins: int = DEFAULT_ENTROPY_BINS) -> float:
    """
    Shannon entropy (nats) of the amplitude histogram of a signal.

    The histogram has ``bins`` equal-width bins spanning [min(x), max(x)];
    a constant signal has entropy 0.

    Args:
        x: Real sequence
        bins: Number of histogram bins (>= 2)

    Returns:
        Entropy in [0, ln(bins)]

    Raises:
        DomainError: If the sequence is empty
        ConfigurationError: If bins < 2
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    return float(band_entropies(x, bins))


def band_entropies(x: np.ndarray, bins: int = DEFAULT_ENTROPY_BINS) -> np.ndarray:
    """Histogram entropy along the last axis, vectorised over leading axes."""
    if bins < 2:
        raise ConfigurationError(f"Entropy needs at least 2 bins, got {bins}")
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 0 or x.shape[-1] == 0:
        raise DomainError("band entropy needs at least one sample")

    lead_shape = x.shape[:-1]
    flat = x.reshape(-1, x.shape[-1])
    lo = flat.min(axis=1, keepdims=True)
    span = flat.max(axis=1, keepdims=True) - lo
    # constant rows land in bin 0
    scale = np.where(span > 0, bins / np.where(span > 0, span, 1.0), 0.0)
    idx = np.floor((flat - lo) * scale).astype(np.int64)
    np.clip(idx, 0, bins - 1, out=idx)

    rows = flat.shape[0]
    offsets = idx + (np.arange(rows, dtype=np.int64) * bins)[:, np.newaxis]
    counts = np.bincount(offsets.ravel(), minlength=rows * bins).reshape(rows, bins)
    entropy = stats.entropy(counts, axis=1)
    return entropy.reshape(lead_shape)


def decompose(segment: np.ndarray, filters: Sequence[FirFilter]) -> np.ndarray:
    """
    Split every channel into the canonical bands.

    Args:
        segment: ``channels x samples`` array, optionally with leading
            batch axes
        filters: One filter per canonical band, in canonical order

    Returns:
        Array of shape ``(..., channels, bands, samples)``

    Raises:
        ConfigurationError: If the filters do not cover the canonical bands
        SignalTooShortError: If segments are shorter than a filter
    """
    _check_filter_bank(filters)
    segment = np.asarray(segment, dtype=np.float64)
    if segment.ndim < 2 or segment.size == 0:
        raise ConfigurationError(
            f"Segment must be a non-empty channels x samples array, got shape {segment.shape}"
        )
    outputs = [apply_fir(segment, fir) for fir in filters]
    return np.stack(outputs, axis=-2)


def design_filter_bank(
    fs: float,
    order: int = DEFAULT_ORDER,
    method: str = "window",
    coefficient_files: Optional[Mapping[str, Union[str, Path]]] = None,
) -> Tuple[FirFilter, ...]:
    """
    Build the eight canonical band filters.

    Args:
        fs: Sampling rate in Hz
        order: Order of the designed filters
        method: Design method passed to :func:`design_bandpass`
        coefficient_files: Optional band name -> tap file overrides

    Returns:
        Tuple of eight filters in canonical band order
    """
    overrides = dict(coefficient_files or {})
    unknown = set(overrides) - {b.name for b in CANONICAL_BANDS}
    if unknown:
        raise ConfigurationError(f"Coefficient files given for unknown bands: {sorted(unknown)}")

    bank = []
    for band in CANONICAL_BANDS:
        if band.name in overrides:
            bank.append(load_fir_coefficients(overrides[band.name], band, fs))
        else:
            bank.append(design_bandpass(band, fs, order=order, method=method))

    logger.info(
        f"Filter bank ready: {NUM_BANDS} bands at fs={fs} Hz "
        f"({len(overrides)} loaded from file, method={method}, order={order})"
    )
    return tuple(bank)


def _check_filter_bank(filters: Sequence[FirFilter]) -> None:
    if len(filters) != NUM_BANDS:
        raise ConfigurationError(f"Expected {NUM_BANDS} band filters, got {len(filters)}")
    for fir, band in zip(filters, CANONICAL_BANDS):
        if fir.band.name != band.name:
            raise ConfigurationError(
                f"Filter bank out of order: expected {band.name}, got {fir.band.name}"
            )
