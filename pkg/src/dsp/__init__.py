"""
Band decomposition of EEG channels and band-wise vertex features.
"""

from src.dsp.bands import BandDef, CANONICAL_BANDS, NUM_BANDS, band_by_name
from src.dsp.fir import (
    FirFilter,
    apply_fir,
    design_bandpass,
    load_fir_coefficients,
    stopband_frequencies,
    stopband_peak,
)
from src.dsp.features import (
    band_entropies,
    band_entropy,
    band_power,
    band_powers,
    decompose,
    design_filter_bank,
)

__all__ = [
    "BandDef",
    "CANONICAL_BANDS",
    "NUM_BANDS",
    "band_by_name",
    "FirFilter",
    "apply_fir",
    "design_bandpass",
    "load_fir_coefficients",
    "stopband_frequencies",
    "stopband_peak",
    "band_entropies",
    "band_entropy",
    "band_power",
    "band_powers",
    "decompose",
    "design_filter_bank",
]
