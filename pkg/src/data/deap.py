"""
Converter from the preprocessed DEAP Python release into the recording container.

Each ``sXX.dat`` file is a pickled dict with ``data`` of shape
40 trials x 40 channels x 8064 samples at 128 Hz. The first 32 channels are
EEG in the standard electrode order and the first 3 s of every trial are
the pre-trial baseline.
"""

from pathlib import Path
from typing import Iterator, List, Optional, Sequence, Union
import logging
import pickle
import re

import numpy as np

from src.data.recordings import BASELINE_SECONDS, Recording, save_recordings
from src.errors import RecordingLoadError
from src.graph.electrodes import DEAP_CHANNELS, NUM_ELECTRODES

logger = logging.getLogger(__name__)

DEAP_FS = 128.0
DEAP_TRIALS = 40
DEAP_SAMPLES = 8064
_SUBJECT_FILE = re.compile(r"s(\d+)\.dat$")


def subject_files(source: Union[str, Path]) -> List[Path]:
    """``sXX.dat`` files of a DEAP directory, sorted by subject id."""
    root = Path(source)
    if not root.is_dir():
        raise RecordingLoadError(f"DEAP directory not found: {root}")
    files = [p for p in root.iterdir() if _SUBJECT_FILE.search(p.name)]
    return sorted(files, key=lambda p: int(_SUBJECT_FILE.search(p.name).group(1)))


def read_subject(path: Union[str, Path]) -> np.ndarray:
    """
    Trial array of one subject file.

    Raises:
        RecordingLoadError: If the file cannot be unpickled or has the wrong shape
    """
    file_path = Path(path)
    try:
        with open(file_path, "rb") as f:
            content = pickle.load(f, encoding="latin1")
        data = np.asarray(content["data"])
    except (OSError, pickle.UnpicklingError, KeyError, TypeError, EOFError) as e:
        raise RecordingLoadError(f"Cannot read DEAP file {file_path}: {e}") from e
    if data.ndim != 3 or data.shape[1] < NUM_ELECTRODES:
        raise RecordingLoadError(
            f"{file_path.name}: expected trials x channels x samples with >= "
            f"{NUM_ELECTRODES} channels, got {data.shape}"
        )
    return data


def iter_deap_recordings(
    source: Union[str, Path], subjects: Optional[Sequence[int]] = None
) -> Iterator[Recording]:
    """Recordings of every (selected) subject, trial index as video id."""
    baseline_samples = int(BASELINE_SECONDS * DEAP_FS)
    for path in subject_files(source):
        subject = int(_SUBJECT_FILE.search(path.name).group(1))
        if subjects is not None and subject not in subjects:
            continue
        data = read_subject(path)
        if data.shape[2] <= baseline_samples:
            raise RecordingLoadError(f"{path.name}: trials are shorter than the baseline")
        logger.info(f"Converting {path.name}: {data.shape[0]} trials")
        for trial in range(data.shape[0]):
            eeg = data[trial, :NUM_ELECTRODES].astype(np.float32)
            yield Recording(
                subject=subject,
                video_id=trial,
                samples=eeg[:, baseline_samples:],
                fs=DEAP_FS,
                baseline=eeg[:, :baseline_samples],
            )


def convert_deap(
    source: Union[str, Path],
    destination: Union[str, Path],
    subjects: Optional[Sequence[int]] = None,
    overwrite: bool = False,
) -> Path:
    """
    Write DEAP subject files as a recording container.

    Args:
        source: Directory holding ``sXX.dat`` files
        destination: Output container directory
        subjects: Optional subject ids to convert
        overwrite: Replace an existing container

    Returns:
        Path of the written manifest
    """
    if not subject_files(source):
        raise RecordingLoadError(f"No sXX.dat files in {source}")
    return save_recordings(
        iter_deap_recordings(source, subjects),
        destination,
        fs=DEAP_FS,
        channels=DEAP_CHANNELS,
        overwrite=overwrite,
    )
