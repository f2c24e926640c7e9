"""
Finite-difference verification of the analytic gradients of a network.
"""

from dataclasses import dataclass, field
from typing import Callable, Dict, Optional
import logging

import numpy as np

from src.errors import ConfigurationError
from src.nn.losses import softmax_cross_entropy
from src.nn.model import GraphConvNet

logger = logging.getLogger(__name__)

DEFAULT_TOLERANCE = 1e-5
DEFAULT_STEP = 1e-6
KINK_THRESHOLD = 1e-5
INPUT_TENSOR = "input"

GradientHook = Callable[[Dict[str, np.ndarray]], None]


@dataclass
class GradCheckReport:
    """
    Outcome of a gradient check.

    Attributes:
        errors: Relative error per tensor (parameters and ``input``)
        worst_entries: Flat index of the worst entry per tensor
        checked: Number of entries compared per tensor
        tolerance: Pass threshold
        attempts: Forward passes tried before the kink margin was acceptable
        kink_margin: Distance of the checked point to the closest ReLU or
            pooling kink
    """

    errors: Dict[str, float] = field(default_factory=dict)
    worst_entries: Dict[str, int] = field(default_factory=dict)
    checked: Dict[str, int] = field(default_factory=dict)
    tolerance: float = DEFAULT_TOLERANCE
    attempts: int = 1
    kink_margin: float = float("inf")

    @property
    def max_relative_error(self) -> float:
        """Largest per-tensor error."""
        return max(self.errors.values(), default=0.0)

    @property
    def worst_tensor(self) -> Optional[str]:
        """Name of the tensor with the largest error."""
        if not self.errors:
            return None
        return max(self.errors, key=lambda name: self.errors[name])

    @property
    def passed(self) -> bool:
        """True iff every tensor is within tolerance."""
        return self.max_relative_error <= self.tolerance


def entry_errors(analytic: np.ndarray, numeric: np.ndarray) -> np.ndarray:
    """
    Entry-wise errors |a_i - n_i| / (max|a| + max|n|).

    Every entry is measured against the gradient scale of its tensor; all
    errors are 0 when both gradients vanish.
    """
    a = np.ravel(analytic)
    n = np.ravel(numeric)
    scale = np.max(np.abs(a), initial=0.0) + np.max(np.abs(n), initial=0.0)
    if scale < 1e-10:
        return np.zeros(a.shape)
    return np.abs(a - n) / scale


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """Largest entry-wise error, see :func:`entry_errors`."""
    return float(np.max(entry_errors(analytic, numeric), initial=0.0))


def _loss(model: GraphConvNet, x: np.ndarray, label: int) -> float:
    loss, _ = softmax_cross_entropy(model.forward(x)[0], label)
    return loss


def grad_check(
    model: GraphConvNet,
    sample: np.ndarray,
    label: int,
    tolerance: float = DEFAULT_TOLERANCE,
    step: float = DEFAULT_STEP,
    max_entries: Optional[int] = None,
    seed: int = 0,
    max_attempts: int = 5,
    kink_threshold: float = KINK_THRESHOLD,
    gradient_hook: Optional[GradientHook] = None,
) -> GradCheckReport:
    """
    Compare backprop gradients with central finite differences.

    The loss is the cross entropy of one sample. Every entry of every
    parameter tensor and of the input is perturbed by +-step and compared
    with its analytic gradient. If the sample lies within
    ``kink_threshold`` of a ReLU or pooling kink, the input is jittered and
    the check restarts.

    Args:
        model: Network in double precision
        sample: One padded input signal
        label: Target class
        tolerance: Pass threshold on the relative error
        step: Finite-difference step
        max_entries: Compare only this many seeded entries per tensor;
            None checks all of them
        seed: Seed for entry sampling and jitter
        max_attempts: Forward passes tried to escape kinks
        kink_threshold: Minimum accepted kink margin
        gradient_hook: Optional callback that may alter the analytic
            gradients before comparison

    Returns:
        GradCheckReport
    """
    if max_entries is not None and max_entries < 1:
        raise ConfigurationError(f"max_entries must be >= 1, got {max_entries}")
    rng = np.random.default_rng(seed)
    x = model.prepare_input(sample)[:1].astype(np.float64)

    attempts = 0
    margin = 0.0
    for attempts in range(1, max_attempts + 1):
        model.forward(x)
        margin = model.kink_margin()
        if margin >= kink_threshold:
            break
        logger.debug(f"Kink margin {margin:.2e} below {kink_threshold:.0e}, jittering input")
        x = x + rng.normal(scale=1e-2, size=x.shape)
    else:
        logger.warning(f"Gradient check point stays within {margin:.2e} of a kink")

    logits = model.forward(x)
    _, grad_logits = softmax_cross_entropy(logits[0], label)
    grad_input = model.backward(grad_logits[np.newaxis])
    analytic = {name: g.copy() for name, g in model.gradients().items()}
    analytic[INPUT_TENSOR] = grad_input
    if gradient_hook is not None:
        gradient_hook(analytic)

    tensors = dict(model.parameters())
    tensors[INPUT_TENSOR] = x
    report = GradCheckReport(tolerance=tolerance, attempts=attempts, kink_margin=margin)

    for name, tensor in tensors.items():
        if max_entries is None or max_entries >= tensor.size:
            entries = np.arange(tensor.size)
        else:
            entries = np.sort(rng.choice(tensor.size, size=max_entries, replace=False))
        numeric = np.empty(entries.size)
        flat = tensor.reshape(-1)
        for k, entry in enumerate(entries):
            original = flat[entry]
            flat[entry] = original + step
            loss_plus = _loss(model, x, label)
            flat[entry] = original - step
            loss_minus = _loss(model, x, label)
            flat[entry] = original
            numeric[k] = (loss_plus - loss_minus) / (2.0 * step)

        errors = entry_errors(analytic[name].reshape(-1)[entries], numeric)
        worst = int(np.argmax(errors))
        report.errors[name] = float(errors[worst])
        report.worst_entries[name] = int(entries[worst])
        report.checked[name] = int(entries.size)
        logger.debug(
            f"{name}: relative error {report.errors[name]:.3e} at entry "
            f"{report.worst_entries[name]} over {entries.size} entries"
        )

    status = "passed" if report.passed else "FAILED"
    logger.info(
        f"Gradient check {status}: max relative error {report.max_relative_error:.3e} "
        f"({report.worst_tensor}), tolerance {tolerance:.0e}"
    )
    return report
