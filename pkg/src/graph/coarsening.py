"""
Multilevel Graclus-style coarsening with fake-vertex padding.

Each level greedily matches vertex pairs with the normalized-cut score
w_ij (1/d_i + 1/d_j). Singletons are padded with fake (edgeless) children
so every coarse vertex has exactly two children, and the vertices of
every level are reordered so that the children of coarse vertex c sit at
positions 2c and 2c + 1. Graph pooling then becomes a stride-2 scan.
"""

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union
import logging

import numpy as np
import scipy.sparse as sp

from src.errors import ConfigurationError, ShapeError, ValidationError
from src.graph.laplacian import normalized_laplacian, scale_laplacian
from src.graph.weighted_graph import WeightedGraph

logger = logging.getLogger(__name__)

MAX_COARSEN_LEVELS = 12


@dataclass(frozen=True, eq=False)
class CoarseningHierarchy:
    """
    Coarsened graphs plus the orderings that make pooling a pair scan.

    Attributes:
        levels: Padded, reordered graphs; level 0 is the finest
        parents: Raw parent maps; ``parents[l][v]`` is the level ``l + 1``
            cluster of raw vertex ``v`` at level ``l``
        orderings: Per level, raw vertex id at every padded position;
            ids >= the raw vertex count denote fake vertices
        fake: Per level, boolean fake flags at padded positions
        matched_weight: Per coarsening step, total weight of the merged pairs
    """

    levels: Tuple[WeightedGraph, ...]
    parents: Tuple[np.ndarray, ...]
    orderings: Tuple[np.ndarray, ...]
    fake: Tuple[np.ndarray, ...]
    matched_weight: Tuple[float, ...]

    @property
    def num_levels(self) -> int:
        """Number of coarsening steps (graphs minus one)."""
        return len(self.parents)

    @property
    def num_vertices(self) -> int:
        """Vertex count of the input graph."""
        return len(self.parents[0]) if self.parents else self.levels[0].n

    @property
    def perm(self) -> np.ndarray:
        """Level-0 ordering used by :func:`perm_data`."""
        return self.orderings[0]

    @property
    def padded_sizes(self) -> List[int]:
        """Padded vertex count of every level."""
        return [g.n for g in self.levels]

    def num_fake(self, level: int) -> int:
        """Number of fake vertices at a level."""
        return int(self.fake[level].sum())

    def scaled_laplacians(self, count: Optional[int] = None) -> List[sp.csr_matrix]:
        """
        Scaled Laplacians of the first ``count`` padded levels.

        Args:
            count: Number of levels (defaults to all)

        Returns:
            List of L_s matrices, finest first
        """
        count = len(self.levels) if count is None else count
        if not 0 < count <= len(self.levels):
            raise ConfigurationError(
                f"Hierarchy has {len(self.levels)} graphs, requested {count} Laplacians"
            )
        return [scale_laplacian(normalized_laplacian(g)) for g in self.levels[:count]]


def _match_one_level(w: sp.csr_matrix, rng: np.random.Generator) -> Tuple[np.ndarray, float]:
    """
    Greedy pairwise matching of one level.

    Returns:
        (cluster id per vertex, total weight of matched pairs)
    """
    n = w.shape[0]
    degrees = np.asarray(w.sum(axis=1)).ravel()
    marked = np.zeros(n, dtype=bool)
    cluster = np.full(n, -1, dtype=np.int64)
    matched_weight = 0.0
    count = 0

    for v in rng.permutation(n):
        if marked[v]:
            continue
        marked[v] = True
        start, end = w.indptr[v], w.indptr[v + 1]
        neighbours = w.indices[start:end]
        free = ~marked[neighbours]

        cluster[v] = count
        if free.any():
            candidates = neighbours[free]
            weights = w.data[start:end][free]
            score = weights * (1.0 / degrees[v] + 1.0 / degrees[candidates])
            # indices are sorted, so argmax picks the smallest index on ties
            best = int(np.argmax(score))
            partner = candidates[best]
            cluster[partner] = count
            marked[partner] = True
            matched_weight += float(weights[best])
        count += 1

    return cluster, matched_weight


def _coarse_graph(w: sp.csr_matrix, cluster: np.ndarray) -> sp.csr_matrix:
    n_coarse = int(cluster.max()) + 1
    coo = w.tocoo()
    rows = cluster[coo.row]
    cols = cluster[coo.col]
    # edges inside a matched pair vanish
    keep = rows != cols
    coarse = sp.csr_matrix(
        (coo.data[keep], (rows[keep], cols[keep])), shape=(n_coarse, n_coarse)
    )
    coarse.eliminate_zeros()
    return coarse


def _level_orderings(parents: Sequence[np.ndarray]) -> List[np.ndarray]:
    """
    Padded orderings of every level, coarsest first resolved.

    Raises:
        ValidationError: If a parent map is malformed
    """
    parents = [np.asarray(p) for p in parents]
    if not parents:
        raise ValidationError("Hierarchy needs at least one parent map")

    sizes = [p.size for p in parents]
    if parents[-1].size == 0:
        raise ValidationError("Empty parent map at the last level")
    sizes.append(int(parents[-1].max()) + 1)

    for level, parent in enumerate(parents):
        if parent.ndim != 1 or not np.issubdtype(parent.dtype, np.integer):
            raise ValidationError(f"Parent map at level {level} must be a 1-D integer array")
        if parent.size and (parent.min() < 0 or parent.max() >= sizes[level + 1]):
            raise ValidationError(
                f"Parent map at level {level} points outside the {sizes[level + 1]} coarse vertices"
            )
        child_counts = np.bincount(parent, minlength=sizes[level + 1])
        if np.any(child_counts > 2):
            bad = int(np.argmax(child_counts > 2))
            raise ValidationError(
                f"Coarse vertex {bad} at level {level + 1} has {child_counts[bad]} children"
            )
        if np.any(child_counts == 0):
            bad = int(np.argmax(child_counts == 0))
            raise ValidationError(f"Coarse vertex {bad} at level {level + 1} has no children")

    orderings = [np.arange(sizes[-1])]
    for level in reversed(range(len(parents))):
        parent = parents[level]
        n_coarse = sizes[level + 1]
        by_cluster = np.argsort(parent, kind="stable")
        starts = np.searchsorted(parent[by_cluster], np.arange(n_coarse + 1))
        next_fake = sizes[level]
        order: List[int] = []
        for c in orderings[-1]:
            if c < n_coarse:
                children = [int(v) for v in by_cluster[starts[c]:starts[c + 1]]]
            else:
                children = []
            while len(children) < 2:
                children.append(next_fake)
                next_fake += 1
            order.extend(children)
        orderings.append(np.asarray(order, dtype=np.int64))

    orderings.reverse()
    return orderings


def build_perm(source: Union[CoarseningHierarchy, Sequence[np.ndarray]]) -> np.ndarray:
    """
    Level-0 ordering that turns pooling into a scan over index pairs.

    Position ``p`` holds raw vertex ``perm[p]``; values >= the raw vertex
    count are fake vertices. After ``l`` rounds of pairing positions
    (2c, 2c + 1), position ``c`` holds the level-``l`` vertex with the same
    subtree.

    Args:
        source: Hierarchy or its sequence of parent maps

    Returns:
        Bijection over the padded level-0 positions

    Raises:
        ValidationError: If a parent map is malformed
    """
    parents = source.parents if isinstance(source, CoarseningHierarchy) else source
    return _level_orderings(parents)[0]


def _padded_graph(w: sp.csr_matrix, ordering: np.ndarray) -> Tuple[WeightedGraph, np.ndarray]:
    n_raw = w.shape[0]
    fake = ordering >= n_raw
    positions = np.flatnonzero(~fake)
    selection = sp.csr_matrix(
        (np.ones(positions.size), (positions, ordering[positions])),
        shape=(ordering.size, n_raw),
    )
    padded = (selection @ w @ selection.T).tocsr()
    return WeightedGraph(padded), fake


def graclus_coarsen(
    g: WeightedGraph,
    num_levels: Optional[int],
    seed: int,
    min_levels: int = 1,
    max_levels: int = MAX_COARSEN_LEVELS,
) -> CoarseningHierarchy:
    """
    Coarsen a graph by repeated greedy pair matching.

    Automatic depth (``num_levels=None``) ignores how many levels the
    network pools over; it keeps matching until the coarsest graph has no
    edges. Every level is padded to twice the size of the next one, so the
    extra levels also grow level 0: the 256-vertex merged graph coarsened
    three times is padded to 512 vertices, 256 of them fake, whether the
    network pools once or twice. Pass an explicit ``num_levels`` to bound
    the padding.

    Args:
        g: Input graph
        num_levels: Number of coarsening steps; ``None`` coarsens until no
            edge remains (at least ``min_levels``, at most ``max_levels``)
        seed: Seed of the per-level visit orders
        min_levels: Lower bound for the automatic depth
        max_levels: Upper bound for the automatic depth

    Returns:
        CoarseningHierarchy, identical for identical (graph, seed)
    """
    if g.n < 1:
        raise ConfigurationError("Cannot coarsen an empty graph")
    if num_levels is not None and num_levels < 1:
        raise ConfigurationError(f"num_levels must be >= 1, got {num_levels}")
    if min_levels > max_levels:
        raise ConfigurationError(
            f"Network needs {min_levels} coarsening levels, limit is {max_levels}"
        )

    rng = np.random.default_rng(seed)
    graphs = [g.weights]
    parents: List[np.ndarray] = []
    matched: List[float] = []

    while True:
        level = len(parents)
        if num_levels is not None:
            if level == num_levels:
                break
        elif level >= max_levels or (level >= min_levels and graphs[-1].nnz == 0):
            break
        cluster, weight = _match_one_level(graphs[-1], rng)
        parents.append(cluster)
        matched.append(weight)
        graphs.append(_coarse_graph(graphs[-1], cluster))
        logger.debug(
            f"Level {level + 1}: {graphs[-2].shape[0]} -> {graphs[-1].shape[0]} vertices, "
            f"{graphs[-1].nnz // 2} edges"
        )

    orderings = _level_orderings(parents)
    levels = []
    fakes = []
    for w, ordering in zip(graphs, orderings):
        padded, fake = _padded_graph(w, ordering)
        levels.append(padded)
        fakes.append(fake)

    hierarchy = CoarseningHierarchy(
        levels=tuple(levels),
        parents=tuple(parents),
        orderings=tuple(orderings),
        fake=tuple(fakes),
        matched_weight=tuple(matched),
    )
    logger.info(
        f"Coarsened {g.n} vertices over {hierarchy.num_levels} levels, "
        f"padded sizes {hierarchy.padded_sizes}"
    )
    return hierarchy


def perm_data(x: np.ndarray, perm: np.ndarray, padded_n: int, vertex_axis: int = 0) -> np.ndarray:
    """
    Scatter vertex data into padded, permuted order.

    Fake positions are filled with 0.

    Args:
        x: Data with the real vertices along ``vertex_axis``
        perm: Level-0 ordering from :func:`build_perm`
        padded_n: Padded vertex count
        vertex_axis: Axis of x holding vertices

    Returns:
        Array with ``padded_n`` entries along ``vertex_axis``

    Raises:
        ShapeError: If perm, padded_n and x disagree
    """
    perm = np.asarray(perm)
    if perm.shape != (padded_n,):
        raise ShapeError(f"Permutation of length {perm.size} does not cover {padded_n} vertices")
    data = np.moveaxis(np.asarray(x, dtype=np.float64), vertex_axis, 0)
    n = data.shape[0]
    real = perm < n
    if int(real.sum()) != n:
        raise ShapeError(
            f"Permutation places {int(real.sum())} real vertices, data has {n}"
        )
    out = np.zeros((padded_n,) + data.shape[1:])
    out[real] = data[perm[real]]
    return np.moveaxis(out, 0, vertex_axis)


def coarsening_depth(coarsen_levels: int, num_pools: int) -> Optional[int]:
    """
    Resolve the configured depth against a network.

    Args:
        coarsen_levels: Configured value; 0 means automatic
        num_pools: Number of pooling layers in the network

    Returns:
        Explicit level count, or ``None`` for automatic depth
    """
    if coarsen_levels < 0:
        raise ConfigurationError(f"coarsen_levels must be >= 0, got {coarsen_levels}")
    if coarsen_levels == 0:
        return None
    if coarsen_levels < num_pools:
        raise ConfigurationError(
            f"Network pools {num_pools} times but only {coarsen_levels} levels are configured"
        )
    return coarsen_levels
