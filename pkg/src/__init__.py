"""
EEG graph-signal GCNN toolkit

Band-decomposed EEG features classified by Chebyshev graph convolutional
networks on electrode-band graphs.
"""

__version__ = "0.1.0"

from src.core.config import ExperimentConfig, load_config
from src.core.experiment import run_experiment, run_grid
from src.nn.model import GraphConvNet

__all__ = [
    "ExperimentConfig",
    "GraphConvNet",
    "load_config",
    "run_experiment",
    "run_grid",
]
