"""
Synthetic EEG-like recordings with class-specific band oscillations.

A class profile assigns an oscillation amplitude to every (electrode group,
band) pair. Each trial adds, for every channel and band, a sinusoid near
the band centre scaled by the profile, on top of white noise. Classes that
differ in their profiles are separable by band power and by band entropy.
"""

from typing import Iterator, Optional
import logging

import numpy as np

from src.data.recordings import BASELINE_SECONDS, MAX_CLASSES, Recording, RecordingSet
from src.dsp.bands import CANONICAL_BANDS, NUM_BANDS
from src.errors import ConfigurationError
from src.graph.electrodes import DEAP_CHANNELS, NUM_ELECTRODES

logger = logging.getLogger(__name__)

NUM_GROUPS = 4
ACTIVE_AMPLITUDE = 1.5
NOISE_STD = 1.0
ACTIVE_BANDS_PER_GROUP = 2


def default_profiles(num_classes: int, seed: int = 0) -> np.ndarray:
    """
    Distinct random class profiles.

    Every class activates ``ACTIVE_BANDS_PER_GROUP`` bands in each electrode
    group at ``ACTIVE_AMPLITUDE``; all other entries are 0.

    Returns:
        ``classes x groups x bands`` amplitude array
    """
    rng = np.random.default_rng(seed)
    profiles = np.zeros((num_classes, NUM_GROUPS, NUM_BANDS))
    seen = set()
    for c in range(num_classes):
        while True:
            profile = np.zeros((NUM_GROUPS, NUM_BANDS))
            for g in range(NUM_GROUPS):
                active = rng.choice(NUM_BANDS, size=ACTIVE_BANDS_PER_GROUP, replace=False)
                profile[g, active] = ACTIVE_AMPLITUDE
            key = profile.tobytes()
            if key not in seen:
                seen.add(key)
                profiles[c] = profile
                break
    return profiles


def _band_frequency(band_index: int, rng: np.random.Generator, fs: float) -> float:
    band = CANONICAL_BANDS[band_index]
    low = max(band.low_hz, 0.5)
    high = min(band.high_hz, fs / 2 - 1.0)
    centre = 0.5 * (low + high)
    return float(centre + rng.uniform(-0.25, 0.25) * (high - low))


def _trial(
    profile: np.ndarray,
    num_samples: int,
    fs: float,
    rng: np.random.Generator,
) -> np.ndarray:
    t = np.arange(num_samples) / fs
    signal = rng.normal(0.0, NOISE_STD, size=(NUM_ELECTRODES, num_samples))
    group_size = NUM_ELECTRODES // NUM_GROUPS
    for g in range(NUM_GROUPS):
        for b in range(NUM_BANDS):
            if profile[g, b] == 0:
                continue
            freq = _band_frequency(b, rng, fs)
            rows = slice(g * group_size, (g + 1) * group_size)
            gain = profile[g, b] * rng.uniform(0.8, 1.2, size=(group_size, 1))
            phase = rng.uniform(0.0, 2 * np.pi, size=(group_size, 1))
            signal[rows] += gain * np.sin(2 * np.pi * freq * t + phase)
    return signal


def iter_synth_recordings(
    num_classes: int,
    trials_per_class: int,
    fs: float = 128.0,
    seed: int = 0,
    duration_s: float = 60.0,
    profiles: Optional[np.ndarray] = None,
    with_baseline: bool = True,
    subject: int = 1,
) -> Iterator[Recording]:
    """Generate the recordings of :func:`synth_dataset` one at a time."""
    if num_classes < 2:
        raise ConfigurationError(f"Need >= 2 classes, got {num_classes}")
    if num_classes > MAX_CLASSES:
        raise ConfigurationError(f"At most {MAX_CLASSES} classes, got {num_classes}")
    if trials_per_class < 1:
        raise ConfigurationError(f"Need >= 1 trial per class, got {trials_per_class}")
    if profiles is None:
        profiles = default_profiles(num_classes, seed)
    profiles = np.asarray(profiles, dtype=np.float64)
    if profiles.shape != (num_classes, NUM_GROUPS, NUM_BANDS):
        raise ConfigurationError(
            f"Profiles must have shape {(num_classes, NUM_GROUPS, NUM_BANDS)}, "
            f"got {profiles.shape}"
        )

    rng = np.random.default_rng(seed)
    num_samples = int(round(duration_s * fs))
    baseline_samples = int(round(BASELINE_SECONDS * fs))
    for c in range(num_classes):
        for _ in range(trials_per_class):
            samples = _trial(profiles[c], num_samples, fs, rng).astype(np.float32)
            baseline = None
            if with_baseline:
                baseline = rng.normal(
                    0.0, NOISE_STD, size=(NUM_ELECTRODES, baseline_samples)
                ).astype(np.float32)
            yield Recording(
                subject=subject, video_id=c, samples=samples, fs=fs, baseline=baseline
            )


def synth_dataset(
    num_classes: int,
    trials_per_class: int,
    fs: float = 128.0,
    seed: int = 0,
    duration_s: float = 60.0,
    profiles: Optional[np.ndarray] = None,
    with_baseline: bool = True,
) -> RecordingSet:
    """
    Deterministic synthetic dataset.

    Args:
        num_classes: Number of classes (2..40)
        trials_per_class: Trials generated per class
        fs: Sampling rate in Hz
        seed: Seed of profiles, oscillations and noise
        duration_s: Trial length in seconds
        profiles: Optional ``classes x 4 x 8`` amplitude table; electrode
            group g covers channels 8g..8g+7
        with_baseline: Attach a 3 s noise-only baseline to every trial

    Returns:
        RecordingSet of ``num_classes * trials_per_class`` 32-channel
        trials, grouped by class
    """
    recordings = list(
        iter_synth_recordings(
            num_classes, trials_per_class, fs, seed, duration_s, profiles, with_baseline
        )
    )
    logger.info(
        f"Synthesized {len(recordings)} recording(s): {num_classes} classes x "
        f"{trials_per_class} trials, {duration_s} s at {fs} Hz (seed {seed})"
    )
    return RecordingSet(recordings=recordings, channels=DEAP_CHANNELS, fs=fs)
