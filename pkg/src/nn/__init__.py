"""
Chebyshev GCNN with manual backpropagation, training loop and baselines.
"""

from src.nn.network_spec import (
    NETWORK_PRESETS,
    FullyConnected,
    GraphConv,
    GraphPool,
    NetworkSpec,
    parse_network_spec,
    resolve_network,
)
from src.nn.layers import (
    ChebConv,
    Dense,
    FakeMask,
    GraphMaxPool2,
    ReLU,
    fc_backward,
    fc_forward,
    graph_maxpool2,
    relu,
    relu_backward,
)
from src.nn.losses import l2_penalty, softmax, softmax_cross_entropy
from src.nn.optim import AdamState, adam_step, learning_rate
from src.nn.model import GraphConvNet, count_parameters
from src.nn.training import EpochMetrics, TrainConfig, TrainResult, evaluate, train
from src.nn.gradcheck import GradCheckReport, entry_errors, grad_check, relative_error
from src.nn.knn import knn_baseline, knn_predict
from src.nn.checkpoint import Checkpoint, load_checkpoint, save_checkpoint

__all__ = [
    "NETWORK_PRESETS",
    "FullyConnected",
    "GraphConv",
    "GraphPool",
    "NetworkSpec",
    "parse_network_spec",
    "resolve_network",
    "ChebConv",
    "Dense",
    "FakeMask",
    "GraphMaxPool2",
    "ReLU",
    "fc_backward",
    "fc_forward",
    "graph_maxpool2",
    "relu",
    "relu_backward",
    "l2_penalty",
    "softmax",
    "softmax_cross_entropy",
    "AdamState",
    "adam_step",
    "learning_rate",
    "GraphConvNet",
    "count_parameters",
    "EpochMetrics",
    "TrainConfig",
    "TrainResult",
    "evaluate",
    "train",
    "GradCheckReport",
    "entry_errors",
    "grad_check",
    "relative_error",
    "knn_baseline",
    "knn_predict",
    "Checkpoint",
    "load_checkpoint",
    "save_checkpoint",
]
