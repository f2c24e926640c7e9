"""
Electrode positions of the 32-channel 10-10 montage on the unit sphere.

Positions are derived from standard spherical montage angles (polar angle
from the vertex, signed for the left hemisphere, and azimuth from the
right-ear axis). They approximate real head geometry; only relative
distances matter for graph construction.
"""

from dataclasses import dataclass
from typing import Dict, Sequence, Tuple

import numpy as np
from scipy.spatial import distance

from src.errors import ValidationError

# Channel order of the preprocessed DEAP recordings.
DEAP_CHANNELS: Tuple[str, ...] = (
    "Fp1", "AF3", "F3", "F7", "FC5", "FC1", "C3", "T7",
    "CP5", "CP1", "P3", "P7", "PO3", "O1", "Oz", "Pz",
    "Fp2", "AF4", "Fz", "F4", "F8", "FC6", "FC2", "Cz",
    "C4", "T8", "CP6", "CP2", "P4", "P8", "PO4", "O2",
)

# (theta, phi) in degrees
_SPHERICAL_ANGLES: Dict[str, Tuple[float, float]] = {
    "Fp1": (-92, -72), "AF3": (-74, -65), "F3": (-60, -51), "F7": (-92, -36),
    "FC5": (-72, -21), "FC1": (-32, -45), "C3": (-46, 0), "T7": (-92, 0),
    "CP5": (-72, 21), "CP1": (-32, 45), "P3": (-60, 51), "P7": (-92, 36),
    "PO3": (-74, 65), "O1": (-92, 72), "Oz": (92, -90), "Pz": (46, -90),
    "Fp2": (92, 72), "AF4": (74, 65), "Fz": (46, 90), "F4": (60, 51),
    "F8": (92, 36), "FC6": (72, 21), "FC2": (32, 45), "Cz": (0, 0),
    "C4": (46, 0), "T8": (92, 0), "CP6": (72, -21), "CP2": (32, -45),
    "P4": (60, -51), "P8": (92, -36), "PO4": (74, -65), "O2": (92, -72),
}

NUM_ELECTRODES = len(DEAP_CHANNELS)


@dataclass(frozen=True, eq=False)
class ElectrodeLayout:
    """
    Electrode labels and unit-sphere coordinates.

    Attributes:
        names: Electrode labels in channel order
        positions: ``len(names) x 3`` coordinates with unit norm
    """

    names: Tuple[str, ...]
    positions: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "names", tuple(self.names))
        duplicates = sorted({name for name in self.names if self.names.count(name) > 1})
        if duplicates:
            raise ValidationError(f"Duplicated electrode names: {duplicates}")
        pos = np.asarray(self.positions, dtype=np.float64)
        if pos.shape != (len(self.names), 3):
            raise ValidationError(
                f"Layout needs {len(self.names)} x 3 positions, got {pos.shape}"
            )
        norms = np.linalg.norm(pos, axis=1)
        bad = np.flatnonzero(np.abs(norms - 1.0) > 1e-6)
        if bad.size:
            raise ValidationError(
                f"Electrode {self.names[bad[0]]} is not on the unit sphere (norm {norms[bad[0]]})"
            )
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)

    @property
    def size(self) -> int:
        """Number of electrodes."""
        return len(self.names)

    def index(self, name: str) -> int:
        """Channel index of an electrode label."""
        return self.names.index(name)

    def pairwise_distances(self) -> np.ndarray:
        """Euclidean distance matrix between electrodes."""
        return distance.squareform(distance.pdist(self.positions))

    def mean_pairwise_distance(self) -> float:
        """Mean distance over distinct electrode pairs."""
        return float(np.mean(distance.pdist(self.positions)))

    def subset(self, names: Sequence[str]) -> "ElectrodeLayout":
        """
        Layout restricted to (and ordered like) the given labels.

        Raises:
            ValidationError: If a label is not part of this layout
        """
        missing = [name for name in names if name not in self.names]
        if missing:
            raise ValidationError(f"Unknown electrode names: {missing}")
        rows = [self.index(name) for name in names]
        return ElectrodeLayout(names=tuple(names), positions=self.positions[rows])


def _to_cartesian(theta_deg: float, phi_deg: float) -> Tuple[float, float, float]:
    theta = np.deg2rad(theta_deg)
    phi = np.deg2rad(phi_deg)
    return (
        float(np.sin(theta) * np.cos(phi)),
        float(np.sin(theta) * np.sin(phi)),
        float(np.cos(theta)),
    )


def standard_layout() -> ElectrodeLayout:
    """The built-in 32-electrode layout in DEAP channel order."""
    positions = np.array([_to_cartesian(*_SPHERICAL_ANGLES[name]) for name in DEAP_CHANNELS])
    return ElectrodeLayout(names=DEAP_CHANNELS, positions=positions)
