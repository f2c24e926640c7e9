"""
Undirected weighted graph stored as a symmetric sparse matrix.
"""

from typing import List, Tuple, Union

import numpy as np
import scipy.sparse as sp
from scipy.sparse import csgraph

from src.errors import ValidationError

MatrixLike = Union[np.ndarray, sp.spmatrix]


class WeightedGraph:
    """
    Immutable undirected graph with non-negative edge weights.

    Vertices are the indices ``0..n-1``; edges are the non-zero entries of
    the weight matrix. The matrix is symmetric with a zero diagonal.

    Attributes:
        n: Vertex count
        weights: Symmetric CSR weight matrix
    """

    __slots__ = ("_weights",)

    def __init__(self, weights: MatrixLike, symmetry_atol: float = 1e-12) -> None:
        """
        Validate and wrap a weight matrix.

        Args:
            weights: Square matrix of non-negative weights
            symmetry_atol: Allowed asymmetry |W - W^T|

        Raises:
            ValidationError: If the matrix is not square, symmetric,
                non-negative, finite, or has a non-zero diagonal
        """
        w = sp.csr_matrix(weights, dtype=np.float64)
        if w.shape[0] != w.shape[1]:
            raise ValidationError(f"Weight matrix must be square, got {w.shape}")
        w.eliminate_zeros()
        w.sort_indices()

        if w.nnz:
            if not np.all(np.isfinite(w.data)):
                raise ValidationError("Weight matrix has non-finite entries")
            if w.data.min() < 0:
                raise ValidationError(f"Negative edge weight {w.data.min()}")
            if np.any(w.diagonal() != 0):
                raise ValidationError("Weight matrix has self-loops (non-zero diagonal)")
            asym = abs(w - w.T)
            if asym.nnz and asym.max() > symmetry_atol:
                raise ValidationError(
                    f"Weight matrix is not symmetric (max |W-W^T| = {asym.max()})"
                )

        self._weights = w

    @classmethod
    def empty(cls, n: int) -> "WeightedGraph":
        """Graph with ``n`` vertices and no edges."""
        return cls(sp.csr_matrix((n, n), dtype=np.float64))

    @classmethod
    def from_edges(cls, n: int, edges: List[Tuple[int, int, float]]) -> "WeightedGraph":
        """
        Build a graph from an undirected edge list.

        Args:
            n: Vertex count
            edges: ``(i, j, w)`` triples; each pair listed once

        Returns:
            WeightedGraph
        """
        if not edges:
            return cls.empty(n)
        rows, cols, vals = zip(*edges)
        upper = sp.coo_matrix((vals, (rows, cols)), shape=(n, n))
        return cls(upper + upper.T)

    @property
    def n(self) -> int:
        """Vertex count."""
        return self._weights.shape[0]

    @property
    def weights(self) -> sp.csr_matrix:
        """Symmetric weight matrix; treat as read-only."""
        return self._weights

    @property
    def num_edges(self) -> int:
        """Number of undirected edges."""
        return self._weights.nnz // 2

    @property
    def degrees(self) -> np.ndarray:
        """Weighted degree of every vertex."""
        return np.asarray(self._weights.sum(axis=1)).ravel()

    @property
    def total_weight(self) -> float:
        """Sum of weights over undirected edges."""
        return float(sp.triu(self._weights, k=1).sum())

    def edges(self) -> List[Tuple[int, int, float]]:
        """Undirected edges as ``(i, j, w)`` with ``i < j``, sorted by (i, j)."""
        upper = sp.triu(self._weights, k=1).tocoo()
        order = np.lexsort((upper.col, upper.row))
        return [
            (int(upper.row[k]), int(upper.col[k]), float(upper.data[k])) for k in order
        ]

    def connected_components(self) -> int:
        """Number of connected components (isolated vertices count)."""
        count, _ = csgraph.connected_components(self._weights, directed=False)
        return int(count)

    def dense(self) -> np.ndarray:
        """Weight matrix as a dense array."""
        return self._weights.toarray()

    def permuted(self, perm: np.ndarray) -> "WeightedGraph":
        """
        Relabel vertices so that new vertex ``p`` is old vertex ``perm[p]``.

        Args:
            perm: Permutation of ``0..n-1``

        Returns:
            Relabelled graph
        """
        perm = np.asarray(perm)
        return WeightedGraph(self._weights[perm][:, perm])

    def __repr__(self) -> str:
        """String representation."""
        return f"WeightedGraph(n={self.n}, edges={self.num_edges})"

    def __eq__(self, other: object) -> bool:
        """Exact equality of vertex count and weights."""
        if not isinstance(other, WeightedGraph):
            return NotImplemented
        if self.n != other.n:
            return False
        diff = self._weights != other._weights
        return diff.nnz == 0

    __hash__ = None  # type: ignore[assignment]
