"""
Adam optimizer state and update, plus the per-epoch learning-rate schedule.
"""

from dataclasses import dataclass, field
from typing import Dict, Mapping, MutableMapping
import logging

import numpy as np

from src.errors import NumericError, ShapeError

logger = logging.getLogger(__name__)


@dataclass
class AdamState:
    """
    Moment estimates of every parameter.

    Attributes:
        first_moment: Running mean of gradients
        second_moment: Running mean of squared gradients
        step: Number of updates applied
    """

    first_moment: Dict[str, np.ndarray] = field(default_factory=dict)
    second_moment: Dict[str, np.ndarray] = field(default_factory=dict)
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros_like(cls, params: Mapping[str, np.ndarray]) -> "AdamState":
        """Fresh state with zero moments shaped like ``params``."""
        return cls(
            first_moment={name: np.zeros_like(p) for name, p in params.items()},
            second_moment={name: np.zeros_like(p) for name, p in params.items()},
        )


def adam_step(
    params: MutableMapping[str, np.ndarray],
    grads: Mapping[str, np.ndarray],
    state: AdamState,
    lr: float,
) -> None:
    """
    Apply one bias-corrected Adam update in place.

    Args:
        params: Parameters, updated in place
        grads: Gradients with the same keys and shapes
        state: Optimizer state, updated in place
        lr: Learning rate

    Raises:
        NumericError: If a gradient is not finite (nothing is updated)
        ShapeError: If keys or shapes do not match
    """
    if set(grads) != set(params):
        raise ShapeError(
            f"Gradient keys {sorted(grads)} do not match parameters {sorted(params)}"
        )
    for name, grad in grads.items():
        if grad.shape != params[name].shape:
            raise ShapeError(f"{name}: gradient {grad.shape} vs parameter {params[name].shape}")
        if not np.all(np.isfinite(grad)):
            raise NumericError(f"Non-finite gradient for {name} at optimizer step {state.step + 1}")

    state.step += 1
    correction1 = 1.0 - state.beta1**state.step
    correction2 = 1.0 - state.beta2**state.step
    for name, grad in grads.items():
        m = state.first_moment.setdefault(name, np.zeros_like(grad))
        v = state.second_moment.setdefault(name, np.zeros_like(grad))
        m *= state.beta1
        m += (1.0 - state.beta1) * grad
        v *= state.beta2
        v += (1.0 - state.beta2) * np.square(grad)
        params[name] -= lr * (m / correction1) / (np.sqrt(v / correction2) + state.eps)


def learning_rate(initial_lr: float, decay: float, epoch: int) -> float:
    """Exponentially decayed rate initial_lr * decay**epoch (epoch counts from 0)."""
    return initial_lr * decay**epoch
