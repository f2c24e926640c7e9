"""
Linear-phase FIR band-pass filters for EEG band decomposition.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, Union
import logging

import numpy as np
from scipy import signal

from src.dsp.bands import BandDef
from src.errors import ConfigurationError, SignalTooShortError

logger = logging.getLogger(__name__)

DEFAULT_ORDER = 47
DESIGN_METHODS = ("window", "remez")
STOPBAND_GAIN = 0.1
STOPBAND_WEIGHT = 10.0


@dataclass(frozen=True, eq=False)
class FirFilter:
    """
    FIR filter taps together with the band they were designed for.

    Attributes:
        coefficients: Filter taps, ``order + 1`` of them
        order: Filter order
        band: Target band
        fs: Sampling rate in Hz
    """

    coefficients: np.ndarray
    order: int
    band: BandDef
    fs: float

    def __post_init__(self) -> None:
        taps = np.asarray(self.coefficients, dtype=np.float64)
        if taps.ndim != 1 or taps.size != self.order + 1:
            raise ConfigurationError(
                f"Filter for {self.band.name} needs {self.order + 1} taps, got {taps.size}"
            )
        if not np.all(np.isfinite(taps)):
            raise ConfigurationError(f"Filter for {self.band.name} has non-finite taps")
        taps.setflags(write=False)
        object.__setattr__(self, "coefficients", taps)

    @property
    def num_taps(self) -> int:
        """Number of filter coefficients."""
        return self.order + 1

    @property
    def delay(self) -> int:
        """Integer group delay compensated by :func:`apply_fir`."""
        return self.order // 2

    def is_symmetric(self, atol: float = 1e-12) -> bool:
        """Check linear-phase symmetry c[i] == c[order - i]."""
        return bool(np.allclose(self.coefficients, self.coefficients[::-1], rtol=0.0, atol=atol))

    def frequency_response(self, freqs_hz: Union[float, Sequence[float], np.ndarray]) -> np.ndarray:
        """
        Magnitude response at the given frequencies.

        Args:
            freqs_hz: Frequencies in Hz

        Returns:
            Array of |H(f)| values
        """
        freqs = np.atleast_1d(np.asarray(freqs_hz, dtype=np.float64))
        _, h = signal.freqz(self.coefficients, worN=freqs, fs=self.fs)
        return np.abs(h)


def design_bandpass(
    band: BandDef,
    fs: float,
    order: int = DEFAULT_ORDER,
    method: str = "window",
    transition_hz: float = 2.0,
) -> FirFilter:
    """
    Design a linear-phase band-pass filter for one band.

    The default is a Hamming-windowed sinc scaled to unit gain at the band
    centre. Bands starting at 0 Hz are realised as low-pass filters. When
    the windowed design leaks more than :data:`STOPBAND_GAIN` into the
    band's stop regions (see :func:`stopband_frequencies`), it is replaced
    by a stopband-weighted Parks-McClellan design on those stop edges.
    ``method="remez"`` uses the Parks-McClellan exchange throughout.

    Args:
        band: Band to pass
        fs: Sampling rate in Hz
        order: Filter order (taps = order + 1)
        method: ``"window"`` or ``"remez"``
        transition_hz: Transition width for the remez design

    Returns:
        Designed FirFilter

    Raises:
        ConfigurationError: If the band, order or method is invalid
    """
    band.validate(fs)
    if order < 2:
        raise ConfigurationError(f"Filter order must be >= 2, got {order}")
    if method not in DESIGN_METHODS:
        raise ConfigurationError(f"Unknown design method {method!r}, use one of {DESIGN_METHODS}")

    num_taps = order + 1
    try:
        if method == "window":
            if band.is_lowpass:
                taps = signal.firwin(num_taps, band.high_hz, window="hamming", fs=fs)
            else:
                taps = signal.firwin(
                    num_taps,
                    [band.low_hz, band.high_hz],
                    window="hamming",
                    pass_zero=False,
                    fs=fs,
                )
        else:
            taps = _design_remez(band, fs, num_taps, transition_hz)
    except ValueError as e:
        raise ConfigurationError(f"Cannot design {band.name} filter of order {order}: {e}") from e

    fir = FirFilter(coefficients=taps, order=order, band=band, fs=fs)
    leak = stopband_peak(fir)
    if method == "window" and leak > STOPBAND_GAIN:
        logger.debug(
            f"Windowed {band.name} filter leaks {leak:.3f} into its stopband, "
            f"switching to weighted remez"
        )
        try:
            taps = _design_weighted_remez(band, fs, num_taps)
        except ValueError as e:
            raise ConfigurationError(
                f"Cannot design {band.name} filter of order {order}: {e}"
            ) from e
        fir = FirFilter(coefficients=taps, order=order, band=band, fs=fs)
        leak = stopband_peak(fir)
        if leak > STOPBAND_GAIN:
            logger.warning(
                f"{band.name} filter of order {order} only reaches {leak:.3f} in its stopband"
            )

    logger.debug(
        f"Designed {method} filter for {band.name} ({band.low_hz}-{band.high_hz} Hz), "
        f"{num_taps} taps, fs={fs}"
    )
    return fir


def stopband_frequencies(band: BandDef, fs: float, points: int = 512) -> np.ndarray:
    """
    Frequencies a filter for ``band`` must reject.

    These are all frequencies from ``min(fs/2, 2 * high_hz)`` up to Nyquist
    and, for bands starting at 2 Hz or above, all frequencies up to
    ``low_hz / 2``.

    Args:
        band: Band the filter passes
        fs: Sampling rate in Hz
        points: Grid points per stop region

    Returns:
        Sorted frequency grid in Hz
    """
    nyquist = fs / 2
    upper = np.linspace(min(nyquist, 2 * band.high_hz), nyquist, points)
    if band.low_hz < 2.0:
        return upper
    lower = np.linspace(0.0, band.low_hz / 2, points)
    return np.concatenate([lower, upper])


def stopband_peak(fir: FirFilter) -> float:
    """Largest magnitude response over the band's stop regions."""
    return float(np.max(fir.frequency_response(stopband_frequencies(fir.band, fir.fs))))


def _design_weighted_remez(band: BandDef, fs: float, num_taps: int) -> np.ndarray:
    # The lower stop edge sits on the rejection limit; the upper transition
    # is no wider than the lower one.
    nyquist = fs / 2
    upper_stop = min(2 * band.high_hz, band.high_hz + (nyquist - band.high_hz) / 2)
    if band.is_lowpass:
        edges = [0.0, band.high_hz, upper_stop, nyquist]
        desired = [1.0, 0.0]
        weight = [1.0, STOPBAND_WEIGHT]
    else:
        lower_stop = band.low_hz / 2
        upper_stop = min(upper_stop, band.high_hz + band.low_hz - lower_stop)
        edges = [0.0, lower_stop, band.low_hz, band.high_hz, upper_stop, nyquist]
        desired = [0.0, 1.0, 0.0]
        weight = [STOPBAND_WEIGHT, 1.0, STOPBAND_WEIGHT]

    taps = signal.remez(num_taps, edges, desired, weight=weight, fs=fs)
    taps = 0.5 * (taps + taps[::-1])
    reference = 0.0 if band.is_lowpass else band.midpoint_hz
    _, h = signal.freqz(taps, worN=[reference], fs=fs)
    return taps / np.abs(h[0])


def _design_remez(band: BandDef, fs: float, num_taps: int, transition_hz: float) -> np.ndarray:
    nyquist = fs / 2
    upper_stop = min(band.high_hz + transition_hz, nyquist)
    if upper_stop <= band.high_hz:
        raise ValueError("no room for an upper transition band below Nyquist")
    if band.is_lowpass:
        edges = [0.0, band.high_hz, upper_stop, nyquist]
        desired = [1.0, 0.0]
    else:
        lower_stop = band.low_hz - transition_hz
        if lower_stop <= 0:
            lower_stop = band.low_hz / 2
        edges = [0.0, lower_stop, band.low_hz, band.high_hz, upper_stop, nyquist]
        desired = [0.0, 1.0, 0.0]
    if upper_stop == nyquist:
        edges = edges[:-2]
        desired = desired[:-1]
    return signal.remez(num_taps, edges, desired, fs=fs)


def apply_fir(x: np.ndarray, fir: FirFilter) -> np.ndarray:
    """
    Filter along the last axis with zero padding and delay compensation.

    Computes ``y[n] = sum_i c[i] * x[n + order//2 - i]`` so the output has
    the same length as the input.

    Args:
        x: Real signal(s); time is the last axis
        fir: Filter to apply

    Returns:
        Filtered signal(s) of the same shape

    Raises:
        SignalTooShortError: If the signal is not longer than the filter order
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 0:
        raise SignalTooShortError("Cannot filter a scalar")
    length = x.shape[-1]
    if length <= fir.order:
        raise SignalTooShortError(
            f"Signal of {length} samples is too short for order-{fir.order} "
            f"{fir.band.name} filter"
        )

    kernel = fir.coefficients.reshape((1,) * (x.ndim - 1) + (-1,))
    full = signal.convolve(x, kernel, mode="full", method="direct")
    start = fir.delay
    return full[..., start:start + length]


def load_fir_coefficients(path: Union[str, Path], band: BandDef, fs: float) -> FirFilter:
    """
    Load externally designed taps (one real value per line).

    Args:
        path: UTF-8 text file
        band: Band the taps were designed for
        fs: Sampling rate in Hz

    Returns:
        FirFilter with order = line count - 1

    Raises:
        FileNotFoundError: If the file does not exist
        ConfigurationError: If the file content is not a valid tap list
    """
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except FileNotFoundError:
        logger.error(f"Coefficient file not found: {path}")
        raise

    values = []
    for lineno, line in enumerate(lines, start=1):
        text = line.strip()
        if not text:
            continue
        try:
            values.append(float(text))
        except ValueError as e:
            raise ConfigurationError(f"{path}:{lineno}: not a real number: {text!r}") from e

    if len(values) < 3:
        raise ConfigurationError(f"{path}: need at least 3 taps, got {len(values)}")

    band.validate(fs)
    fir = FirFilter(coefficients=np.array(values), order=len(values) - 1, band=band, fs=fs)
    if not fir.is_symmetric(atol=1e-9):
        logger.warning(f"Coefficients in {path} are not symmetric; filter is not linear-phase")
    logger.info(f"Loaded {fir.num_taps} taps for {band.name} from {path}")
    return fir
