"""
Frequency band definitions used to decompose EEG channels.
"""

from dataclasses import dataclass
from typing import Tuple

from src.errors import ConfigurationError


@dataclass(frozen=True)
class BandDef:
    """
    A named frequency band.

    Attributes:
        name: Band label (e.g. ``"theta"``)
        low_hz: Lower edge in Hz (0 means low-pass)
        high_hz: Upper edge in Hz
    """

    name: str
    low_hz: float
    high_hz: float

    @property
    def midpoint_hz(self) -> float:
        """Centre of the band."""
        return 0.5 * (self.low_hz + self.high_hz)

    @property
    def is_lowpass(self) -> bool:
        """True when the band starts at DC."""
        return self.low_hz == 0

    def validate(self, fs: float) -> None:
        """
        Check the band edges against a sampling rate.

        Args:
            fs: Sampling rate in Hz

        Raises:
            ConfigurationError: If 0 <= low < high <= fs/2 does not hold
        """
        if fs <= 0:
            raise ConfigurationError(f"Sampling rate must be positive, got {fs}")
        if self.low_hz < 0:
            raise ConfigurationError(f"Band {self.name}: low edge {self.low_hz} Hz is negative")
        if self.low_hz >= self.high_hz:
            raise ConfigurationError(
                f"Band {self.name}: low edge {self.low_hz} Hz must be below "
                f"high edge {self.high_hz} Hz"
            )
        if self.high_hz > fs / 2:
            raise ConfigurationError(
                f"Band {self.name}: high edge {self.high_hz} Hz exceeds Nyquist {fs / 2} Hz"
            )


CANONICAL_BANDS: Tuple[BandDef, ...] = (
    BandDef("delta", 0.0, 3.0),
    BandDef("theta", 4.0, 7.0),
    BandDef("low-alpha", 8.0, 10.0),
    BandDef("high-alpha", 10.0, 12.0),
    BandDef("low-beta", 13.0, 16.0),
    BandDef("mid-beta", 17.0, 20.0),
    BandDef("high-beta", 21.0, 29.0),
    BandDef("gamma", 31.0, 50.0),
)

NUM_BANDS = len(CANONICAL_BANDS)


def band_by_name(name: str) -> BandDef:
    """
    Look up a canonical band.

    Args:
        name: Band label

    Returns:
        Matching BandDef

    Raises:
        ConfigurationError: If no canonical band has that name
    """
    for band in CANONICAL_BANDS:
        if band.name == name:
            return band
    known = ", ".join(b.name for b in CANONICAL_BANDS)
    raise ConfigurationError(f"Unknown band {name!r} (known: {known})")
