"""
Recording container: a directory with ``manifest.json`` and one raw file
per trial (little-endian float32, channel-major).

Manifest layout::

    {"sampling_rate_hz": 128,
     "channels": ["Fp1", ...],
     "trials": [{"subject": 1, "video_id": 0, "file": "s01_t00.f32",
                 "num_samples": 7680, "baseline_file": "s01_t00_base.f32"}]}
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, Iterator, List, Optional, Sequence, Tuple, Union
import json
import logging

import numpy as np

from src.errors import RecordingLoadError, UsageError
from src.graph.electrodes import DEAP_CHANNELS

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"
SAMPLE_DTYPE = np.dtype("<f4")
MAX_CLASSES = 40
BASELINE_SECONDS = 3


@dataclass(frozen=True, eq=False)
class Recording:
    """
    One trial of one subject.

    Attributes:
        subject: Subject id
        video_id: Class label
        samples: ``channels x time`` signal
        fs: Sampling rate in Hz
        baseline: Optional ``channels x time`` pre-trial signal
    """

    subject: int
    video_id: int
    samples: np.ndarray
    fs: float = 128.0
    baseline: Optional[np.ndarray] = None

    @property
    def num_channels(self) -> int:
        return self.samples.shape[0]

    @property
    def num_samples(self) -> int:
        return self.samples.shape[1]

    @property
    def duration_s(self) -> float:
        return self.num_samples / self.fs


@dataclass
class RecordingSet:
    """Recordings sharing one channel list and sampling rate, in manifest order."""

    recordings: List[Recording] = field(default_factory=list)
    channels: Tuple[str, ...] = DEAP_CHANNELS
    fs: float = 128.0

    def __len__(self) -> int:
        return len(self.recordings)

    def __iter__(self) -> Iterator[Recording]:
        return iter(self.recordings)

    def __getitem__(self, index: int) -> Recording:
        return self.recordings[index]

    @property
    def subjects(self) -> List[int]:
        """Distinct subject ids in first-appearance order."""
        return list(dict.fromkeys(r.subject for r in self.recordings))

    @property
    def num_classes(self) -> int:
        """Largest label + 1."""
        return max((r.video_id for r in self.recordings), default=-1) + 1

    def select_subjects(self, subjects: Sequence[int]) -> "RecordingSet":
        """Recordings of the given subjects, order preserved."""
        wanted = set(subjects)
        return RecordingSet(
            recordings=[r for r in self.recordings if r.subject in wanted],
            channels=self.channels,
            fs=self.fs,
        )


def _read_trial_file(path: Path, num_channels: int, trial: int) -> np.ndarray:
    try:
        raw = np.fromfile(path, dtype=SAMPLE_DTYPE)
    except FileNotFoundError as e:
        raise RecordingLoadError(f"Trial {trial}: file not found: {path}") from e
    except OSError as e:
        raise RecordingLoadError(f"Trial {trial}: cannot read {path}: {e}") from e
    if raw.size % num_channels:
        raise RecordingLoadError(
            f"Trial {trial}: {path.name} holds {raw.size} floats, "
            f"not a multiple of {num_channels} channels"
        )
    return raw.reshape(num_channels, -1)


def _require(entry: Dict[str, Any], key: str, trial: int) -> Any:
    if key not in entry:
        raise RecordingLoadError(f"Trial {trial}: manifest entry lacks '{key}'")
    return entry[key]


def load_recordings(path: Union[str, Path]) -> RecordingSet:
    """
    Load a recording container.

    Channels are reordered into the standard electrode order when the
    manifest lists them differently.

    Args:
        path: Container directory (or its manifest file)

    Returns:
        RecordingSet in manifest order

    Raises:
        RecordingLoadError: On a missing or malformed manifest, unknown
            channel names, missing files, sample-count mismatches or labels
            out of range; the message names the trial
    """
    root = Path(path)
    manifest_path = root if root.is_file() else root / MANIFEST_NAME
    root = manifest_path.parent
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except FileNotFoundError as e:
        raise RecordingLoadError(f"Manifest not found: {manifest_path}") from e
    except json.JSONDecodeError as e:
        raise RecordingLoadError(f"Invalid JSON in {manifest_path}: {e}") from e

    try:
        fs = float(manifest["sampling_rate_hz"])
        channels = [str(name) for name in manifest["channels"]]
        trials = list(manifest["trials"])
    except (KeyError, TypeError, ValueError) as e:
        raise RecordingLoadError(f"Manifest {manifest_path} is malformed: {e}") from e
    if fs <= 0:
        raise RecordingLoadError(f"Sampling rate must be positive, got {fs}")

    unknown = [name for name in channels if name not in DEAP_CHANNELS]
    if unknown:
        raise RecordingLoadError(f"Unknown channel names in {manifest_path}: {unknown}")
    if sorted(channels) != sorted(DEAP_CHANNELS):
        raise RecordingLoadError(
            f"Manifest lists {len(channels)} channels, need the {len(DEAP_CHANNELS)} "
            f"standard electrodes exactly once"
        )
    order = [channels.index(name) for name in DEAP_CHANNELS]
    reorder = order != list(range(len(channels)))
    if reorder:
        logger.info("Reordering manifest channels into standard electrode order")

    recordings: List[Recording] = []
    for i, entry in enumerate(trials):
        subject = int(_require(entry, "subject", i))
        video_id = int(_require(entry, "video_id", i))
        num_samples = int(_require(entry, "num_samples", i))
        if not 0 <= video_id < MAX_CLASSES:
            raise RecordingLoadError(
                f"Trial {i}: video_id {video_id} outside [0, {MAX_CLASSES})"
            )
        samples = _read_trial_file(root / str(_require(entry, "file", i)), len(channels), i)
        if samples.shape[1] != num_samples:
            raise RecordingLoadError(
                f"Trial {i} ({entry['file']}): manifest claims {num_samples} samples per "
                f"channel, file holds {samples.shape[1]}"
            )
        baseline = None
        if entry.get("baseline_file"):
            baseline = _read_trial_file(root / str(entry["baseline_file"]), len(channels), i)
            if reorder:
                baseline = baseline[order]
        if reorder:
            samples = samples[order]
        recordings.append(
            Recording(subject=subject, video_id=video_id, samples=samples, fs=fs,
                      baseline=baseline)
        )

    logger.info(
        f"Loaded {len(recordings)} recording(s) from {root} "
        f"({len(set(r.subject for r in recordings))} subjects, fs={fs} Hz)"
    )
    return RecordingSet(recordings=recordings, channels=DEAP_CHANNELS, fs=fs)


def save_recordings(
    recordings: Iterable[Recording],
    directory: Union[str, Path],
    fs: float = 128.0,
    channels: Sequence[str] = DEAP_CHANNELS,
    overwrite: bool = False,
) -> Path:
    """
    Write recordings as a container; the manifest is written last.

    Recordings are consumed one at a time, so a generator keeps memory flat.

    Args:
        recordings: Recordings to store
        directory: Output directory
        fs: Sampling rate recorded in the manifest
        channels: Channel names in row order
        overwrite: Replace an existing manifest

    Returns:
        Path of the manifest

    Raises:
        UsageError: If a manifest exists and ``overwrite`` is False
    """
    root = Path(directory)
    manifest_path = root / MANIFEST_NAME
    if manifest_path.exists() and not overwrite:
        raise UsageError(f"{manifest_path} exists; pass --overwrite to replace it")
    root.mkdir(parents=True, exist_ok=True)

    entries = []
    for i, rec in enumerate(recordings):
        if rec.num_channels != len(channels):
            raise RecordingLoadError(
                f"Trial {i}: {rec.num_channels} channels, manifest lists {len(channels)}"
            )
        stem = f"s{rec.subject:02d}_t{i:04d}"
        np.ascontiguousarray(rec.samples, dtype=SAMPLE_DTYPE).tofile(root / f"{stem}.f32")
        baseline_file = None
        if rec.baseline is not None:
            baseline_file = f"{stem}_baseline.f32"
            np.ascontiguousarray(rec.baseline, dtype=SAMPLE_DTYPE).tofile(root / baseline_file)
        entries.append({
            "subject": rec.subject,
            "video_id": rec.video_id,
            "file": f"{stem}.f32",
            "num_samples": rec.num_samples,
            "baseline_file": baseline_file,
        })

    manifest = {"sampling_rate_hz": fs, "channels": list(channels), "trials": entries}
    manifest_path.write_text(json.dumps(manifest, indent=1), encoding="utf-8")
    logger.info(f"Saved {len(entries)} recording(s) to {root}")
    return manifest_path
