"""
Graph convolutional network assembled from a NetworkSpec.

Execution order per GC layer: Chebyshev convolution, fake-vertex mask,
ReLU. Pooling layers move to the next coarsening level. The output FC
layer produces logits without activation.
"""

from collections import OrderedDict
from typing import Dict, List, Optional, Sequence, Tuple
import logging

import numpy as np
import scipy.sparse as sp

from src.errors import ConfigurationError, ShapeError
from src.graph.coarsening import CoarseningHierarchy
from src.nn.layers import ChebConv, Dense, FakeMask, GraphMaxPool2, Layer, ReLU
from src.nn.network_spec import FullyConnected, GraphConv, GraphPool, NetworkSpec

logger = logging.getLogger(__name__)


def count_parameters(
    spec: NetworkSpec, padded_vertex_counts: Sequence[int], in_features: int = 1
) -> int:
    """
    Number of trainable scalars of a network.

    Sum over GC layers of M * F_in * F_out + F_out, plus D * h + h for the
    FC layer, D being the flattened size after the last pooling layer.

    Args:
        spec: Network structure
        padded_vertex_counts: Padded vertex count per coarsening level
        in_features: Features per input vertex

    Returns:
        Parameter count
    """
    if len(padded_vertex_counts) < spec.num_pools + 1:
        raise ConfigurationError(
            f"Network pools {spec.num_pools} times, only "
            f"{len(padded_vertex_counts)} vertex counts given"
        )
    total = 0
    features = in_features
    level = 0
    for layer in spec.layers:
        if isinstance(layer, GraphConv):
            total += layer.order * features * layer.filters + layer.filters
            features = layer.filters
        elif isinstance(layer, GraphPool):
            level += 1
        else:
            flat = padded_vertex_counts[level] * features
            total += flat * layer.units + layer.units
    return total


class GraphConvNet:
    """
    Trainable GCNN with manual backpropagation.

    Parameters are exposed by name (``gc0.theta``, ``gc0.bias``, ...,
    ``fc.weight``, ``fc.bias``) in declaration order.
    """

    def __init__(
        self,
        spec: NetworkSpec,
        scaled_laplacians: Sequence[sp.spmatrix],
        fake: Optional[Sequence[np.ndarray]] = None,
        in_features: int = 1,
        seed: int = 0,
        dtype: type = np.float64,
    ) -> None:
        """
        Build the layers and initialize parameters.

        Args:
            spec: Network structure
            scaled_laplacians: L_s per coarsening level, finest first; at
                least ``spec.num_pools + 1`` of them
            fake: Fake-vertex flags per level (``None`` when nothing is padded)
            in_features: Features per input vertex
            seed: Initialization seed
            dtype: Parameter precision
        """
        if len(scaled_laplacians) < spec.num_pools + 1:
            raise ConfigurationError(
                f"Network pools {spec.num_pools} times but only "
                f"{len(scaled_laplacians)} graph levels are available"
            )
        self.spec = spec
        self.in_features = in_features
        self.seed = seed
        self.dtype = np.dtype(dtype)
        self.vertex_counts = [lap.shape[0] for lap in scaled_laplacians[: spec.num_pools + 1]]
        for level in range(1, len(self.vertex_counts)):
            if self.vertex_counts[level - 1] != 2 * self.vertex_counts[level]:
                raise ShapeError(
                    f"Level sizes {self.vertex_counts} do not halve from level to level"
                )

        self.layers: List[Layer] = []
        self._named: List[Tuple[str, Layer]] = []
        self._activations: List[Tuple[ReLU, np.ndarray]] = []
        self._pools: List[GraphMaxPool2] = []

        features = in_features
        level = 0
        gc_index = 0
        for layer_spec in spec.layers:
            if isinstance(layer_spec, GraphConv):
                conv = ChebConv(
                    features, layer_spec.filters, layer_spec.order,
                    scaled_laplacians[level], dtype=dtype,
                )
                self.layers.append(conv)
                self._named.append((f"gc{gc_index}", conv))
                level_fake = self._fake_flags(fake, level)
                if level_fake.any():
                    self.layers.append(FakeMask(level_fake))
                activation = ReLU()
                self.layers.append(activation)
                self._activations.append((activation, level_fake))
                features = layer_spec.filters
                gc_index += 1
            elif isinstance(layer_spec, GraphPool):
                pool = GraphMaxPool2()
                self.layers.append(pool)
                self._pools.append(pool)
                level += 1
            elif isinstance(layer_spec, FullyConnected):
                dense = Dense(self.vertex_counts[level] * features, layer_spec.units, dtype=dtype)
                self.layers.append(dense)
                self._named.append(("fc", dense))

        self.initialize(seed)
        logger.info(
            f"Built network {spec} on levels {self.vertex_counts}: "
            f"{self.num_parameters} parameters"
        )

    def _fake_flags(self, fake: Optional[Sequence[np.ndarray]], level: int) -> np.ndarray:
        n = self.vertex_counts[level]
        if fake is None:
            return np.zeros(n, dtype=bool)
        flags = np.asarray(fake[level], dtype=bool)
        if flags.shape != (n,):
            raise ShapeError(f"Fake flags for level {level} have shape {flags.shape}, need {n}")
        return flags

    @classmethod
    def from_hierarchy(
        cls,
        spec: NetworkSpec,
        hierarchy: CoarseningHierarchy,
        in_features: int = 1,
        seed: int = 0,
        dtype: type = np.float64,
    ) -> "GraphConvNet":
        """Network on the padded levels of a coarsening hierarchy."""
        if hierarchy.num_levels < spec.num_pools:
            raise ConfigurationError(
                f"Network pools {spec.num_pools} times, hierarchy has "
                f"{hierarchy.num_levels} levels"
            )
        count = spec.num_pools + 1
        return cls(
            spec,
            hierarchy.scaled_laplacians(count),
            fake=hierarchy.fake[:count],
            in_features=in_features,
            seed=seed,
            dtype=dtype,
        )

    @property
    def input_vertices(self) -> int:
        """Padded vertex count expected at the input."""
        return self.vertex_counts[0]

    @property
    def num_parameters(self) -> int:
        """Number of trainable scalars."""
        return sum(p.size for p in self.parameters().values())

    def initialize(self, seed: int) -> None:
        """
        Seeded uniform initialization; biases start at zero.

        theta ~ U(+-sqrt(6 / (M F_in + F_out))), FC ~ U(+-sqrt(6 / (D + h))).
        """
        rng = np.random.default_rng(seed)
        for _, layer in self._named:
            if isinstance(layer, ChebConv):
                bound = np.sqrt(6.0 / (layer.order * layer.in_features + layer.out_features))
                layer.theta[...] = rng.uniform(-bound, bound, size=layer.theta.shape)
            elif isinstance(layer, Dense):
                bound = np.sqrt(6.0 / (layer.in_features + layer.out_features))
                layer.weight[...] = rng.uniform(-bound, bound, size=layer.weight.shape)
            for name, value in layer.parameters().items():
                if name == "bias":
                    value[...] = 0.0

    def parameters(self) -> "OrderedDict[str, np.ndarray]":
        """Live parameter arrays by qualified name, in declaration order."""
        params: "OrderedDict[str, np.ndarray]" = OrderedDict()
        for prefix, layer in self._named:
            for name, value in layer.parameters().items():
                params[f"{prefix}.{name}"] = value
        return params

    def gradients(self) -> Dict[str, np.ndarray]:
        """Gradients of the last backward pass by qualified name."""
        grads: Dict[str, np.ndarray] = OrderedDict()
        for prefix, layer in self._named:
            for name, value in layer.gradients().items():
                grads[f"{prefix}.{name}"] = value
        return grads

    def load_parameters(self, values: Dict[str, np.ndarray]) -> None:
        """
        Copy parameter values into the network.

        Raises:
            ShapeError: If names or shapes differ
        """
        params = self.parameters()
        if list(values) != list(params):
            raise ShapeError(f"Parameter names {list(values)} do not match {list(params)}")
        for name, target in params.items():
            source = np.asarray(values[name])
            if source.shape != target.shape:
                raise ShapeError(f"{name}: shape {source.shape}, expected {target.shape}")
            target[...] = source

    def prepare_input(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=self.dtype)
        if x.ndim == 1:
            x = x[np.newaxis, :, np.newaxis]
        elif x.ndim == 2:
            x = x[:, :, np.newaxis] if self.in_features == 1 else x[np.newaxis]
        if x.ndim != 3 or x.shape[1:] != (self.input_vertices, self.in_features):
            raise ShapeError(
                f"Network expects (batch, {self.input_vertices}, {self.in_features}) input, "
                f"got {x.shape}"
            )
        return x

    def forward(self, x: np.ndarray) -> np.ndarray:
        """
        Logits for a batch of padded, permuted graph signals.

        Args:
            x: ``batch x vertices`` (single input feature),
                ``batch x vertices x features`` or a single ``vertices`` signal

        Returns:
            ``batch x classes`` logits
        """
        out = self.prepare_input(x)
        for layer in self.layers:
            out = layer.forward(out)
        return out

    def backward(self, grad_logits: np.ndarray) -> np.ndarray:
        """
        Backpropagate a logit gradient; fills :meth:`gradients`.

        Returns:
            Gradient w.r.t. the network input, ``batch x vertices x features``
        """
        grad = np.atleast_2d(np.asarray(grad_logits, dtype=self.dtype))
        for layer in reversed(self.layers):
            grad = layer.backward(grad)
        return grad

    def predict(self, x: np.ndarray) -> np.ndarray:
        """Class with the largest logit; ties go to the smaller index."""
        return np.argmax(self.forward(x), axis=1)

    def kink_margin(self) -> float:
        """
        Distance of the last forward pass to a non-differentiable point.

        Considers ReLU inputs on real vertices and the gap between the two
        positive candidates of every pooling pair.
        """
        margin = np.inf
        for activation, fake in self._activations:
            z = activation.last_input
            if z is None:
                continue
            real = z[:, ~fake, :]
            if real.size:
                margin = min(margin, float(np.min(np.abs(real))))
        for pool in self._pools:
            x = pool.last_input
            if x is None:
                continue
            even, odd = x[:, 0::2], x[:, 1::2]
            both_positive = (even > 0) & (odd > 0)
            if both_positive.any():
                margin = min(margin, float(np.min(np.abs(even - odd)[both_positive])))
        return margin
