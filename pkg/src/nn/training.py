"""
Mini-batch training with Adam and accuracy evaluation.
"""

from dataclasses import asdict, dataclass, field
from typing import Callable, Dict, List, Optional
import logging

import numpy as np

from src.errors import ConfigurationError, NumericError, ShapeError
from src.nn.losses import l2_penalty, softmax_cross_entropy
from src.nn.model import GraphConvNet
from src.nn.optim import AdamState, adam_step, learning_rate

logger = logging.getLogger(__name__)

PRECISIONS = ("float64", "float32")


@dataclass(frozen=True)
class TrainConfig:
    """
    Optimization settings.

    Attributes:
        epochs: Passes over the training set
        initial_lr: Learning rate of epoch 0
        lr_decay: Multiplicative decay applied every epoch
        l2_coef: Weight decay strength (biases excluded)
        batch_size: Samples per Adam step
        seed: Seed of the per-epoch shuffles
        precision: ``float64`` or ``float32``
    """

    epochs: int = 30
    initial_lr: float = 0.001
    lr_decay: float = 0.95
    l2_coef: float = 5e-4
    batch_size: int = 64
    seed: int = 0
    precision: str = "float64"

    def __post_init__(self) -> None:
        if self.epochs < 1:
            raise ConfigurationError(f"epochs must be >= 1, got {self.epochs}")
        if self.initial_lr <= 0:
            raise ConfigurationError(f"initial_lr must be positive, got {self.initial_lr}")
        if not 0 < self.lr_decay <= 1:
            raise ConfigurationError(f"lr_decay must be in (0, 1], got {self.lr_decay}")
        if self.l2_coef < 0:
            raise ConfigurationError(f"l2_coef must be >= 0, got {self.l2_coef}")
        if self.batch_size < 1:
            raise ConfigurationError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.precision not in PRECISIONS:
            raise ConfigurationError(
                f"precision must be one of {PRECISIONS}, got {self.precision!r}"
            )

    def learning_rate(self, epoch: int) -> float:
        """Learning rate used during ``epoch`` (0-based)."""
        return learning_rate(self.initial_lr, self.lr_decay, epoch)


@dataclass
class EpochMetrics:
    """Per-epoch training record (one JSON-lines entry)."""

    epoch: int
    learning_rate: float
    train_loss: float
    train_accuracy: float
    test_accuracy: Optional[float] = None

    def to_dict(self) -> Dict[str, object]:
        """Serializable form."""
        return asdict(self)


@dataclass
class TrainResult:
    """Final parameters and the metrics history."""

    params: Dict[str, np.ndarray]
    history: List[EpochMetrics] = field(default_factory=list)
    optimizer: Optional[AdamState] = None


def _check_samples(x: np.ndarray, y: np.ndarray) -> None:
    if x.shape[0] < 1:
        raise ConfigurationError("Need at least one sample")
    if y.shape != (x.shape[0],):
        raise ShapeError(f"{x.shape[0]} samples but labels of shape {y.shape}")


def train(
    model: GraphConvNet,
    train_x: np.ndarray,
    train_y: np.ndarray,
    config: TrainConfig,
    eval_x: Optional[np.ndarray] = None,
    eval_y: Optional[np.ndarray] = None,
    on_epoch: Optional[Callable[[EpochMetrics], None]] = None,
) -> TrainResult:
    """
    Train a network with shuffled mini-batches and Adam.

    The loss is the batch-mean cross entropy plus the L2 penalty; the
    learning rate of epoch e is initial_lr * lr_decay**e.

    Args:
        model: Network, updated in place
        train_x: Padded, permuted training signals (``samples x vertices``)
        train_y: Integer labels
        config: Optimization settings
        eval_x: Optional held-out signals for per-epoch accuracy
        eval_y: Labels of ``eval_x``
        on_epoch: Called with the metrics of every finished epoch

    Returns:
        TrainResult with copies of the final parameters

    Raises:
        NumericError: If gradients become non-finite (names epoch and batch)
    """
    train_x = np.asarray(train_x)
    train_y = np.asarray(train_y, dtype=np.int64)
    _check_samples(train_x, train_y)

    rng = np.random.default_rng(config.seed)
    params = model.parameters()
    state = AdamState.zeros_like(params)
    num_samples = train_x.shape[0]
    history: List[EpochMetrics] = []

    logger.info(
        f"Training on {num_samples} samples for {config.epochs} epochs "
        f"(batch {config.batch_size}, lr {config.initial_lr}, decay {config.lr_decay}, "
        f"l2 {config.l2_coef})"
    )

    for epoch in range(config.epochs):
        lr = config.learning_rate(epoch)
        order = rng.permutation(num_samples)
        loss_sum = 0.0
        correct = 0

        for batch_index, start in enumerate(range(0, num_samples, config.batch_size)):
            idx = order[start:start + config.batch_size]
            logits = model.forward(train_x[idx])
            data_loss, grad_logits = softmax_cross_entropy(logits, train_y[idx])
            model.backward(grad_logits)

            penalty, penalty_grads = l2_penalty(params, config.l2_coef)
            grads = model.gradients()
            for name, extra in penalty_grads.items():
                grads[name] = grads[name] + extra

            try:
                adam_step(params, grads, state, lr)
            except NumericError as e:
                raise NumericError(f"epoch {epoch}, batch {batch_index}: {e}") from e

            loss_sum += (data_loss + penalty) * idx.size
            correct += int(np.sum(np.argmax(logits, axis=1) == train_y[idx]))

        metrics = EpochMetrics(
            epoch=epoch,
            learning_rate=lr,
            train_loss=loss_sum / num_samples,
            train_accuracy=correct / num_samples,
        )
        if eval_x is not None and eval_y is not None:
            metrics.test_accuracy = evaluate(model, eval_x, eval_y, config.batch_size)

        if not np.isfinite(metrics.train_loss):
            raise NumericError(f"epoch {epoch}: training loss is {metrics.train_loss}")

        history.append(metrics)
        test_text = ""
        if metrics.test_accuracy is not None:
            test_text = f", test acc {metrics.test_accuracy:.4f}"
        logger.info(
            f"Epoch {epoch + 1}/{config.epochs}: loss {metrics.train_loss:.4f}, "
            f"train acc {metrics.train_accuracy:.4f}{test_text}"
        )
        if on_epoch is not None:
            on_epoch(metrics)

    final = {name: value.copy() for name, value in params.items()}
    return TrainResult(params=final, history=history, optimizer=state)


def evaluate(
    model: GraphConvNet, x: np.ndarray, y: np.ndarray, batch_size: int = 256
) -> float:
    """
    Classification accuracy.

    Args:
        model: Network
        x: Padded, permuted signals
        y: Integer labels
        batch_size: Forward-pass chunk size

    Returns:
        Fraction of samples whose argmax logit (smallest index on ties)
        equals the label
    """
    x = np.asarray(x)
    y = np.asarray(y, dtype=np.int64)
    _check_samples(x, y)
    predictions = np.concatenate(
        [model.predict(x[start:start + batch_size]) for start in range(0, x.shape[0], batch_size)]
    )
    return float(np.mean(predictions == y))
