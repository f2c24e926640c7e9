"""
Intra-band graph construction (correlation, distance, random), top-k
sparsification and merging of band graphs into one vertex set.

Merged graphs use band-major vertex numbering: ``v = band * n_e + electrode``.
"""

from dataclasses import dataclass
from typing import List, Optional, Sequence
import logging

import numpy as np
import scipy.sparse as sp

from src.dsp.bands import NUM_BANDS
from src.errors import ConfigurationError, DegenerateChannelError, ShapeError, ValidationError
from src.graph.electrodes import ElectrodeLayout
from src.graph.weighted_graph import WeightedGraph

logger = logging.getLogger(__name__)

GRAPH_METHODS = ("corr", "dist", "rand")


@dataclass(frozen=True)
class GraphConfig:
    """
    Parameters of the merged EEG graph.

    Attributes:
        method: ``corr``, ``dist`` or ``rand``
        k: Top-k degree for corr/dist graphs
        p: Edge probability for random graphs
        sigma: Distance scale; ``None`` uses the mean electrode distance
        inter_band: Connect the vertices of each electrode across bands
        seed: Seed for random graphs
    """

    method: str = "dist"
    k: int = 4
    p: float = 0.3
    sigma: Optional[float] = None
    inter_band: bool = True
    seed: int = 0

    def __post_init__(self) -> None:
        if self.method not in GRAPH_METHODS:
            raise ConfigurationError(
                f"Unknown graph method {self.method!r}, use one of {GRAPH_METHODS}"
            )
        if self.k < 1:
            raise ConfigurationError(f"k must be >= 1, got {self.k}")
        if not 0.0 <= self.p <= 1.0:
            raise ConfigurationError(f"p must be in [0, 1], got {self.p}")
        if self.sigma is not None and self.sigma <= 0:
            raise ConfigurationError(f"sigma must be positive, got {self.sigma}")

    @property
    def density_label(self) -> str:
        """Density parameter as printed in reports (``k=4`` or ``p=0.3``)."""
        return f"p={self.p:g}" if self.method == "rand" else f"k={self.k}"


class CorrelationAccumulator:
    """
    Running mean of absolute Pearson correlation between channels.

    Trials are added one batch at a time; a pair only averages over the
    trials in which both channels have non-zero variance.
    """

    def __init__(self, num_channels: int) -> None:
        """
        Args:
            num_channels: Number of channels (graph vertices)
        """
        if num_channels < 2:
            raise ConfigurationError(f"Correlation needs >= 2 channels, got {num_channels}")
        self.num_channels = num_channels
        self._sum = np.zeros((num_channels, num_channels))
        self._count = np.zeros((num_channels, num_channels), dtype=np.int64)
        self._seen = np.zeros(num_channels, dtype=bool)
        self.num_trials = 0

    def update(self, trials: np.ndarray) -> None:
        """
        Add trials.

        Args:
            trials: ``trials x channels x samples`` (or a single
                ``channels x samples`` trial)
        """
        x = np.asarray(trials, dtype=np.float64)
        if x.ndim == 2:
            x = x[np.newaxis]
        if x.ndim != 3 or x.shape[1] != self.num_channels:
            raise ShapeError(
                f"Expected trials x {self.num_channels} x samples, got shape {x.shape}"
            )

        centered = x - x.mean(axis=2, keepdims=True)
        norms = np.sqrt(np.einsum("sct,sct->sc", centered, centered))
        valid = norms > 0
        gram = np.einsum("sct,sdt->scd", centered, centered)
        safe = np.where(valid, norms, 1.0)
        corr = np.abs(gram / (safe[:, :, np.newaxis] * safe[:, np.newaxis, :]))
        pair_valid = valid[:, :, np.newaxis] & valid[:, np.newaxis, :]

        self._sum += np.where(pair_valid, corr, 0.0).sum(axis=0)
        self._count += pair_valid.sum(axis=0)
        self._seen |= valid.any(axis=0)
        self.num_trials += x.shape[0]

        if not valid.all():
            logger.debug(f"{int((~valid).sum())} zero-variance channel(s) in this batch")

    def graph(self) -> WeightedGraph:
        """
        Averaged |correlation| graph.

        Raises:
            DegenerateChannelError: If a channel had zero variance in every trial
            ConfigurationError: If no trial was added
        """
        if self.num_trials == 0:
            raise ConfigurationError("Correlation graph needs at least one trial")
        degenerate = np.flatnonzero(~self._seen)
        if degenerate.size:
            raise DegenerateChannelError(int(degenerate[0]))

        weights = np.divide(
            self._sum, self._count, out=np.zeros_like(self._sum), where=self._count > 0
        )
        np.clip(weights, 0.0, 1.0, out=weights)
        np.fill_diagonal(weights, 0.0)
        weights = 0.5 * (weights + weights.T)
        return WeightedGraph(weights)


def corr_graph(band_signals: np.ndarray) -> WeightedGraph:
    """
    Functional-connectivity graph from one band's signals.

    Args:
        band_signals: ``trials x channels x samples``

    Returns:
        Graph with W[i][j] = mean over trials of |Pearson(i, j)|

    Raises:
        DegenerateChannelError: If a channel is constant in every trial
    """
    x = np.asarray(band_signals, dtype=np.float64)
    if x.ndim != 3 or x.shape[0] < 1:
        raise ShapeError(f"Expected trials x channels x samples, got shape {x.shape}")
    acc = CorrelationAccumulator(x.shape[1])
    acc.update(x)
    return acc.graph()


def distance_weight(d: np.ndarray, sigma: float) -> np.ndarray:
    """Gaussian kernel exp(-d^2 / sigma^2)."""
    if sigma <= 0:
        raise ConfigurationError(f"sigma must be positive, got {sigma}")
    d = np.asarray(d, dtype=np.float64)
    return np.exp(-np.square(d) / sigma**2)


def dist_graph(layout: ElectrodeLayout, sigma: Optional[float] = None) -> WeightedGraph:
    """
    Complete graph weighted by electrode proximity.

    Args:
        layout: Electrode positions
        sigma: Distance scale; defaults to the mean pairwise distance

    Returns:
        Graph with W[i][j] = exp(-d(i,j)^2 / sigma^2)

    Raises:
        ValidationError: If two electrodes share a position
    """
    d = layout.pairwise_distances()
    off_diag = ~np.eye(layout.size, dtype=bool)
    if np.any(d[off_diag] == 0):
        i, j = np.argwhere((d == 0) & off_diag)[0]
        raise ValidationError(
            f"Electrodes {layout.names[i]} and {layout.names[j]} share the same position"
        )
    if sigma is None:
        sigma = layout.mean_pairwise_distance()
    weights = distance_weight(d, sigma)
    np.fill_diagonal(weights, 0.0)
    logger.debug(f"Distance graph on {layout.size} electrodes, sigma={sigma:.4f}")
    return WeightedGraph(weights)


def rand_graph(n: int, p: float, seed: int) -> WeightedGraph:
    """
    Erdos-Renyi graph with unit weights.

    Args:
        n: Vertex count
        p: Independent edge probability
        seed: Random seed

    Returns:
        Random graph, identical for identical seeds
    """
    if n < 1:
        raise ConfigurationError(f"Random graph needs n >= 1, got {n}")
    if not 0.0 <= p <= 1.0:
        raise ConfigurationError(f"p must be in [0, 1], got {p}")
    rng = np.random.default_rng(seed)
    draws = rng.random((n, n))
    upper = np.triu(draws < p, k=1).astype(np.float64)
    return WeightedGraph(upper + upper.T)


def sparsify_topk(g: WeightedGraph, k: int) -> WeightedGraph:
    """
    Keep the k strongest edges of every vertex (union over endpoints).

    An edge survives when it ranks among the k largest weights of either
    endpoint; ties go to the smaller neighbour index.

    Args:
        g: Input graph
        k: Edges kept per vertex

    Returns:
        Sparsified symmetric graph with unchanged retained weights
    """
    if k < 1:
        raise ConfigurationError(f"k must be >= 1, got {k}")
    w = g.weights
    rows: List[np.ndarray] = []
    cols: List[np.ndarray] = []
    for i in range(g.n):
        start, end = w.indptr[i], w.indptr[i + 1]
        neighbours = w.indices[start:end]
        if neighbours.size == 0:
            continue
        order = np.lexsort((neighbours, -w.data[start:end]))[:k]
        rows.append(np.full(order.size, i))
        cols.append(neighbours[order])

    if not rows:
        return WeightedGraph.empty(g.n)

    r = np.concatenate(rows)
    c = np.concatenate(cols)
    mask = sp.csr_matrix((np.ones(r.size), (r, c)), shape=w.shape)
    mask = ((mask + mask.T) > 0).astype(np.float64)
    kept = w.multiply(mask).tocsr()
    logger.debug(f"Top-{k} sparsification: {g.num_edges} -> {kept.nnz // 2} edges")
    return WeightedGraph(kept)


def merge_bands(graphs: Sequence[WeightedGraph], inter_band: bool) -> WeightedGraph:
    """
    Join per-band graphs into one graph over all (band, electrode) vertices.

    Args:
        graphs: One graph per band, all with the same vertex count
        inter_band: Add unit edges between the vertices of the same
            electrode in every pair of bands

    Returns:
        Block-diagonal graph (plus inter-band edges when requested)

    Raises:
        ConfigurationError: If the vertex counts differ
    """
    if not graphs:
        raise ConfigurationError("merge_bands needs at least one band graph")
    n_e = graphs[0].n
    sizes = [g.n for g in graphs]
    if any(size != n_e for size in sizes):
        raise ConfigurationError(f"Band graphs have different vertex counts: {sizes}")

    num_bands = len(graphs)
    merged = sp.block_diag([g.weights for g in graphs], format="csr")
    if inter_band:
        band_pairs = np.ones((num_bands, num_bands)) - np.eye(num_bands)
        merged = merged + sp.kron(band_pairs, sp.identity(n_e), format="csr")

    result = WeightedGraph(merged)
    logger.info(
        f"Merged {num_bands} band graphs: {result.n} vertices, {result.num_edges} edges, "
        f"inter_band={inter_band}"
    )
    return result


def build_band_graphs(
    config: GraphConfig,
    layout: ElectrodeLayout,
    correlation_graphs: Optional[Sequence[WeightedGraph]] = None,
    num_bands: int = NUM_BANDS,
) -> List[WeightedGraph]:
    """
    Intra-band graphs for every band according to a GraphConfig.

    Args:
        config: Graph parameters
        layout: Electrode layout (vertex count and positions)
        correlation_graphs: Dense correlation graphs per band, required
            for ``method="corr"``
        num_bands: Number of bands

    Returns:
        One sparsified graph per band
    """
    if config.method == "corr":
        if correlation_graphs is None or len(correlation_graphs) != num_bands:
            raise ConfigurationError(
                f"Correlation method needs {num_bands} correlation graphs from training data"
            )
        return [sparsify_topk(g, config.k) for g in correlation_graphs]
    if config.method == "dist":
        g = sparsify_topk(dist_graph(layout, config.sigma), config.k)
        return [g] * num_bands
    return [rand_graph(layout.size, config.p, config.seed + band) for band in range(num_bands)]


def build_merged_graph(
    config: GraphConfig,
    layout: ElectrodeLayout,
    correlation_graphs: Optional[Sequence[WeightedGraph]] = None,
    num_bands: int = NUM_BANDS,
) -> WeightedGraph:
    """Band graphs per :func:`build_band_graphs`, merged per the config."""
    bands = build_band_graphs(config, layout, correlation_graphs, num_bands)
    return merge_bands(bands, config.inter_band)
