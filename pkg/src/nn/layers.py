"""
GCNN layers with hand-written forward and backward passes.

Activations are batched ``(batch, vertices, features)`` arrays. Layers
cache what their backward pass needs during ``forward``; calling
``backward`` without a preceding ``forward`` raises UsageError.
"""

from abc import ABC, abstractmethod
from typing import Dict, Optional, Tuple
import logging

import numpy as np
import scipy.sparse as sp

from src.errors import NumericError, ShapeError, UsageError
from src.graph.laplacian import cheb_basis

logger = logging.getLogger(__name__)


def _as_batch(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x)
    if x.ndim == 2:
        return x[np.newaxis]
    if x.ndim != 3:
        raise ShapeError(f"Expected (batch, vertices, features), got shape {x.shape}")
    return x


class Layer(ABC):
    """Base class of all layers."""

    def parameters(self) -> Dict[str, np.ndarray]:
        """Trainable tensors by local name (live references)."""
        return {}

    def gradients(self) -> Dict[str, np.ndarray]:
        """Gradients of the last backward pass, same keys as parameters()."""
        return {}

    @abstractmethod
    def forward(self, x: np.ndarray) -> np.ndarray:
        """Compute the layer output and cache backward inputs."""

    @abstractmethod
    def backward(self, grad: np.ndarray) -> np.ndarray:
        """Propagate an upstream gradient; returns the input gradient."""

    def _require_cache(self, cache: Optional[object]) -> None:
        if cache is None:
            raise UsageError(f"{type(self).__name__}.backward called before forward")


class ChebConv(Layer):
    """
    Chebyshev spectral graph convolution.

    Y[:, v, o] = sum_m sum_i theta[m, i, o] * (T_m(L_s) X)[:, v, i] + bias[o]
    """

    def __init__(
        self,
        in_features: int,
        out_features: int,
        order: int,
        scaled_laplacian: sp.spmatrix,
        dtype: type = np.float64,
    ) -> None:
        """
        Args:
            in_features: Input feature count F_in
            out_features: Filter count F_out
            order: Number of Chebyshev terms M
            scaled_laplacian: L_s of the graph the layer runs on
            dtype: Parameter precision
        """
        if min(in_features, out_features, order) < 1:
            raise ShapeError(
                f"ChebConv needs positive sizes, got F_in={in_features}, "
                f"F_out={out_features}, M={order}"
            )
        self.in_features = in_features
        self.out_features = out_features
        self.order = order
        self.laplacian = sp.csr_matrix(scaled_laplacian, dtype=dtype)
        self.theta = np.zeros((order, in_features, out_features), dtype=dtype)
        self.bias = np.zeros(out_features, dtype=dtype)
        self.grad_theta = np.zeros_like(self.theta)
        self.grad_bias = np.zeros_like(self.bias)
        self._basis: Optional[np.ndarray] = None

    @property
    def num_vertices(self) -> int:
        """Vertex count of the layer's graph."""
        return self.laplacian.shape[0]

    def parameters(self) -> Dict[str, np.ndarray]:
        return {"theta": self.theta, "bias": self.bias}

    def gradients(self) -> Dict[str, np.ndarray]:
        return {"theta": self.grad_theta, "bias": self.grad_bias}

    def forward(self, x: np.ndarray) -> np.ndarray:
        x = _as_batch(x)
        if x.shape[1:] != (self.num_vertices, self.in_features):
            raise ShapeError(
                f"ChebConv expects (*, {self.num_vertices}, {self.in_features}), got {x.shape}"
            )
        if not (np.all(np.isfinite(self.theta)) and np.all(np.isfinite(self.bias))):
            raise NumericError("ChebConv parameters contain non-finite values")

        # vertices first so the sparse products see one (n, batch * F_in) block
        basis = cheb_basis(self.laplacian, x.transpose(1, 0, 2), self.order)
        self._basis = basis
        return np.einsum("mvbi,mio->bvo", basis, self.theta, optimize=True) + self.bias

    def backward(self, grad: np.ndarray) -> np.ndarray:
        self._require_cache(self._basis)
        basis = self._basis
        grad = _as_batch(grad)

        self.grad_theta = np.einsum("mvbi,bvo->mio", basis, grad, optimize=True)
        self.grad_bias = grad.sum(axis=(0, 1))

        # sum_m T_m(L_s) (grad theta_m^T) by Clenshaw's recurrence
        n, batch = self.num_vertices, grad.shape[0]
        projected = np.einsum("bvo,mio->mvbi", grad, self.theta, optimize=True)
        projected = projected.reshape(self.order, n, -1)
        b_next = np.zeros_like(projected[0])
        b_next2 = np.zeros_like(projected[0])
        for m in range(self.order - 1, 0, -1):
            b_m = projected[m] + 2.0 * (self.laplacian @ b_next) - b_next2
            b_next2, b_next = b_next, b_m
        grad_x = projected[0] + self.laplacian @ b_next - b_next2
        return grad_x.reshape(n, batch, self.in_features).transpose(1, 0, 2)


class FakeMask(Layer):
    """Zeroes the rows of fake (padding) vertices."""

    def __init__(self, fake: np.ndarray) -> None:
        self.fake = np.asarray(fake, dtype=bool)
        self._keep = (~self.fake).astype(np.float64)[np.newaxis, :, np.newaxis]

    def forward(self, x: np.ndarray) -> np.ndarray:
        x = _as_batch(x)
        if x.shape[1] != self.fake.size:
            raise ShapeError(f"FakeMask covers {self.fake.size} vertices, got {x.shape}")
        return x * self._keep.astype(x.dtype)

    def backward(self, grad: np.ndarray) -> np.ndarray:
        return _as_batch(grad) * self._keep.astype(grad.dtype)


class ReLU(Layer):
    """Elementwise max(0, x); the subgradient at 0 is 0."""

    def __init__(self) -> None:
        self._input: Optional[np.ndarray] = None

    @property
    def last_input(self) -> Optional[np.ndarray]:
        """Pre-activation values of the last forward pass."""
        return self._input

    def forward(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x)
        self._input = x
        return np.maximum(x, 0.0)

    def backward(self, grad: np.ndarray) -> np.ndarray:
        self._require_cache(self._input)
        return grad * (self._input > 0)


def relu(x: np.ndarray) -> np.ndarray:
    """Elementwise max(0, x)."""
    return np.maximum(np.asarray(x), 0.0)


def relu_backward(grad: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Upstream gradient masked by x > 0."""
    return np.asarray(grad) * (np.asarray(x) > 0)


class GraphMaxPool2(Layer):
    """Max over consecutive vertex pairs (2j, 2j + 1); ties go to the even index."""

    def __init__(self) -> None:
        self._take_odd: Optional[np.ndarray] = None
        self._input: Optional[np.ndarray] = None

    @property
    def last_input(self) -> Optional[np.ndarray]:
        """Input of the last forward pass."""
        return self._input

    def forward(self, x: np.ndarray) -> np.ndarray:
        x = _as_batch(x)
        if x.shape[1] % 2:
            raise ShapeError(f"Pooling needs an even vertex count, got {x.shape[1]}")
        even = x[:, 0::2]
        odd = x[:, 1::2]
        self._take_odd = odd > even
        self._input = x
        return np.where(self._take_odd, odd, even)

    def backward(self, grad: np.ndarray) -> np.ndarray:
        self._require_cache(self._take_odd)
        take_odd = self._take_odd
        grad = _as_batch(grad)
        out = np.zeros(
            (grad.shape[0], grad.shape[1] * 2, grad.shape[2]), dtype=grad.dtype
        )
        out[:, 0::2] = np.where(take_odd, 0.0, grad)
        out[:, 1::2] = np.where(take_odd, grad, 0.0)
        return out


def graph_maxpool2(x: np.ndarray) -> np.ndarray:
    """Functional form of :class:`GraphMaxPool2` for a single ``vertices x F`` array."""
    return GraphMaxPool2().forward(x)[0]


class Dense(Layer):
    """Fully connected output layer: logits = x_flat W + b."""

    def __init__(self, in_features: int, out_features: int, dtype: type = np.float64) -> None:
        """
        Args:
            in_features: Flattened input size (vertices * features)
            out_features: Number of logits
            dtype: Parameter precision
        """
        self.in_features = in_features
        self.out_features = out_features
        self.weight = np.zeros((in_features, out_features), dtype=dtype)
        self.bias = np.zeros(out_features, dtype=dtype)
        self.grad_weight = np.zeros_like(self.weight)
        self.grad_bias = np.zeros_like(self.bias)
        self._input: Optional[np.ndarray] = None
        self._input_shape: Optional[tuple] = None

    def parameters(self) -> Dict[str, np.ndarray]:
        return {"weight": self.weight, "bias": self.bias}

    def gradients(self) -> Dict[str, np.ndarray]:
        return {"weight": self.grad_weight, "bias": self.grad_bias}

    def forward(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x)
        if x.ndim == 1:
            x = x[np.newaxis]
        flat = x.reshape(x.shape[0], -1)
        if flat.shape[1] != self.in_features:
            raise ShapeError(
                f"Dense layer expects {self.in_features} inputs, got {flat.shape[1]}"
            )
        if not (np.all(np.isfinite(self.weight)) and np.all(np.isfinite(self.bias))):
            raise NumericError("Dense parameters contain non-finite values")
        self._input = flat
        self._input_shape = x.shape
        return flat @ self.weight + self.bias

    def backward(self, grad: np.ndarray) -> np.ndarray:
        self._require_cache(self._input)
        grad = np.atleast_2d(grad)
        self.grad_weight = self._input.T @ grad
        self.grad_bias = grad.sum(axis=0)
        return (grad @ self.weight.T).reshape(self._input_shape)


def fc_forward(x_flat: np.ndarray, weight: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """logits = W^T x + b for one flattened sample."""
    return np.asarray(weight).T @ np.asarray(x_flat) + bias


def fc_backward(
    grad_logits: np.ndarray, x_flat: np.ndarray, weight: np.ndarray
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Gradients of :func:`fc_forward`.

    Returns:
        (grad_x, grad_weight, grad_bias)
    """
    grad_logits = np.asarray(grad_logits)
    x_flat = np.asarray(x_flat)
    return np.asarray(weight) @ grad_logits, np.outer(x_flat, grad_logits), grad_logits.copy()
