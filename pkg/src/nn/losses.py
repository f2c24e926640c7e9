"""
Softmax cross-entropy and L2 weight penalty.
"""

from typing import Dict, Mapping, Tuple, Union

import numpy as np

from src.errors import ConfigurationError, DomainError, NumericError

Labels = Union[int, np.ndarray]


def _is_weight(name: str) -> bool:
    return not name.endswith("bias")


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax with max subtraction."""
    z = np.asarray(logits, dtype=np.float64)
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_cross_entropy(logits: np.ndarray, labels: Labels) -> Tuple[float, np.ndarray]:
    """
    Cross-entropy of softmax(logits) against integer labels.

    For a single logit vector the loss and gradient are per sample; for a
    ``batch x classes`` matrix they are batch means.

    Args:
        logits: ``classes`` or ``batch x classes`` scores
        labels: Class index, or one index per row

    Returns:
        (loss, gradient w.r.t. logits)

    Raises:
        DomainError: If a label is outside [0, classes)
        NumericError: If the logits are not finite
    """
    z = np.asarray(logits, dtype=np.float64)
    single = z.ndim == 1
    z = np.atleast_2d(z)
    y = np.atleast_1d(np.asarray(labels))
    if y.shape[0] != z.shape[0]:
        raise DomainError(f"{y.shape[0]} labels for {z.shape[0]} logit rows")
    num_classes = z.shape[1]
    if np.any(y < 0) or np.any(y >= num_classes):
        raise DomainError(f"Labels must lie in [0, {num_classes}), got {y.tolist()}")
    if not np.all(np.isfinite(z)):
        raise NumericError("Non-finite logits")

    shifted = z - z.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1))
    rows = np.arange(z.shape[0])
    losses = log_norm - shifted[rows, y]

    grad = np.exp(shifted - log_norm[:, np.newaxis])
    grad[rows, y] -= 1.0

    if single:
        return float(losses[0]), grad[0]
    batch = z.shape[0]
    return float(losses.mean()), grad / batch


def l2_penalty(
    params: Mapping[str, np.ndarray], l2_coef: float
) -> Tuple[float, Dict[str, np.ndarray]]:
    """
    L2 penalty 0.5 * coef * sum ||w||^2 over weight tensors (biases excluded).

    Args:
        params: Named parameters; names ending in ``bias`` are skipped
        l2_coef: Regularization strength

    Returns:
        (penalty, gradient per weight tensor)
    """
    if l2_coef < 0:
        raise ConfigurationError(f"l2_coef must be >= 0, got {l2_coef}")
    loss = 0.0
    grads: Dict[str, np.ndarray] = {}
    for name, value in params.items():
        if not _is_weight(name):
            continue
        loss += 0.5 * l2_coef * float(np.sum(np.square(value)))
        grads[name] = l2_coef * value
    return loss, grads
