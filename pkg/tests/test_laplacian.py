"""
Unit tests for the normalized Laplacian and Chebyshev filtering.
"""

import pytest
import numpy as np
import scipy.sparse as sp

from src.errors import OracleScopeError, ShapeError
from src.graph.construction import rand_graph
from src.graph.laplacian import (
    LAMBDA_MAX_FALLBACK,
    cheb_basis,
    graph_fourier_transform,
    inverse_graph_fourier_transform,
    lambda_max,
    normalized_laplacian,
    power_iteration,
    scale_laplacian,
    spectral_decomposition,
    spectral_filter_oracle,
)
from src.graph.weighted_graph import WeightedGraph


def random_weighted_graph(rng: np.random.Generator, n: int, p: float) -> WeightedGraph:
    mask = np.triu(rng.random((n, n)) < p, k=1)
    w = np.where(mask, rng.uniform(0.1, 2.0, size=(n, n)), 0.0)
    return WeightedGraph(w + w.T)


def single_edge() -> WeightedGraph:
    return WeightedGraph.from_edges(2, [(0, 1, 1.0)])


def triangle() -> WeightedGraph:
    return WeightedGraph.from_edges(3, [(0, 1, 1.0), (0, 2, 1.0), (1, 2, 1.0)])


class TestNormalizedLaplacian:
    """Test L = I - D^-1/2 W D^-1/2."""

    def test_single_edge(self):
        """Test the 2-vertex Laplacian and its spectrum."""
        lap = normalized_laplacian(single_edge())
        np.testing.assert_allclose(lap.matrix.toarray(), [[1, -1], [-1, 1]], atol=1e-15)
        np.testing.assert_allclose(np.linalg.eigvalsh(lap.matrix.toarray()), [0, 2], atol=1e-12)

    def test_triangle(self):
        """Test the triangle Laplacian is I - A/2."""
        lap = normalized_laplacian(triangle())
        expected = np.eye(3) - (np.ones((3, 3)) - np.eye(3)) / 2
        np.testing.assert_allclose(lap.matrix.toarray(), expected, atol=1e-15)
        np.testing.assert_allclose(
            np.linalg.eigvalsh(expected), [0.0, 1.5, 1.5], atol=1e-12
        )
        assert lap.lambda_max == pytest.approx(1.5, abs=1e-5)

    def test_zero_degree_vertex(self):
        """Test isolated vertices get diagonal 1."""
        g = WeightedGraph.from_edges(3, [(0, 1, 2.0)])
        dense = normalized_laplacian(g).matrix.toarray()
        assert dense[2, 2] == 1.0
        assert np.all(dense[2, :2] == 0.0)
        assert np.all(dense[:2, 2] == 0.0)

    def test_edgeless_fallback(self):
        """Test edgeless graphs use lambda_max = 2."""
        lap = normalized_laplacian(WeightedGraph.empty(4))
        assert lap.lambda_max == LAMBDA_MAX_FALLBACK
        np.testing.assert_array_equal(lap.matrix.toarray(), np.eye(4))

    def test_matches_formula_entrywise(self):
        """Test entries against the dense formula."""
        rng = np.random.default_rng(0)
        g = random_weighted_graph(rng, 10, 0.5)
        w = g.dense()
        d = w.sum(axis=1)
        expected = np.eye(10)
        for i in range(10):
            for j in range(10):
                if i != j and d[i] > 0 and d[j] > 0:
                    expected[i, j] = -w[i, j] / np.sqrt(d[i] * d[j])
        np.testing.assert_allclose(
            normalized_laplacian(g).matrix.toarray(), expected, atol=1e-14
        )

    def test_spectrum_bounds(self):
        """Test all eigenvalues lie in [0, 2] for 1000 random graphs."""
        rng = np.random.default_rng(1)
        for _ in range(1000):
            n = int(rng.integers(2, 21))
            g = random_weighted_graph(rng, n, float(rng.uniform(0.1, 0.9)))
            dense = normalized_laplacian(g).matrix.toarray()
            np.testing.assert_allclose(dense, dense.T, atol=0)
            eigenvalues = np.linalg.eigvalsh(dense)
            assert eigenvalues.min() >= -1e-9
            assert eigenvalues.max() <= 2.0 + 1e-9
            assert np.all(np.diag(dense) >= 0.0) and np.all(np.diag(dense) <= 1.0)


class TestLambdaMax:
    """Test the dominant eigenvalue estimate."""

    def test_single_edge(self):
        """Test [[1, -1], [-1, 1]] gives 2."""
        matrix = sp.csr_matrix(np.array([[1.0, -1.0], [-1.0, 1.0]]))
        assert lambda_max(matrix) == pytest.approx(2.0, abs=1e-9)

    def test_zero_matrix_fallback(self):
        """Test a zero matrix falls back to 2."""
        assert lambda_max(sp.csr_matrix((3, 3))) == LAMBDA_MAX_FALLBACK

    def test_non_convergence_fallback(self):
        """Test an iteration cap falls back to 2."""
        rng = np.random.default_rng(2)
        lap = normalized_laplacian(random_weighted_graph(rng, 30, 0.3)).matrix
        _, converged = power_iteration(lap, tol=0.0, max_iter=3)
        assert not converged

    @pytest.mark.parametrize("n", [2, 30])
    def test_iteration_cap_uses_eigsh(self, n):
        """Test a capped power iteration still returns the exact largest eigenvalue."""
        rng = np.random.default_rng(5)
        lap = normalized_laplacian(random_weighted_graph(rng, n, 1.0)).matrix
        expected = np.linalg.eigvalsh(lap.toarray()).max()
        assert lambda_max(lap, max_iter=1) == pytest.approx(expected, rel=1e-9)

    def test_against_dense(self):
        """Test agreement with the dense spectrum."""
        rng = np.random.default_rng(3)
        for _ in range(20):
            lap = normalized_laplacian(random_weighted_graph(rng, 16, 0.5))
            expected = np.linalg.eigvalsh(lap.matrix.toarray()).max()
            assert lap.lambda_max == pytest.approx(expected, rel=1e-5)


class TestScaleLaplacian:
    """Test spectrum scaling into [-1, 1]."""

    def test_single_edge(self):
        """Test the 2-vertex scaled Laplacian."""
        scaled = scale_laplacian(normalized_laplacian(single_edge()))
        np.testing.assert_allclose(scaled.toarray(), [[0, -1], [-1, 0]], atol=1e-9)

    def test_scaled_spectrum(self):
        """Test scaled eigenvalues stay in [-1, 1]."""
        rng = np.random.default_rng(4)
        for _ in range(100):
            g = random_weighted_graph(rng, int(rng.integers(2, 25)), 0.5)
            eigenvalues = np.linalg.eigvalsh(scale_laplacian(normalized_laplacian(g)).toarray())
            assert np.abs(eigenvalues).max() <= 1.0 + 1e-6


class TestChebBasis:
    """Test the Chebyshev recurrence."""

    scaled = sp.csr_matrix(np.array([[0.0, -1.0], [-1.0, 0.0]]))

    def test_order_one(self):
        """Test M = 1 returns the input."""
        x = np.array([[1.0], [2.0]])
        np.testing.assert_array_equal(cheb_basis(self.scaled, x, 1), [x])

    def test_order_two(self):
        """Test T_1 x = L_s x."""
        basis = cheb_basis(self.scaled, np.array([1.0, 0.0]), 2)
        np.testing.assert_allclose(basis, [[1.0, 0.0], [0.0, -1.0]])

    def test_order_three(self):
        """Test T_2 x = 2 L_s T_1 x - x."""
        basis = cheb_basis(self.scaled, np.array([1.0, 0.0]), 3)
        np.testing.assert_allclose(basis[2], [1.0, 0.0])

    def test_feature_matrix(self):
        """Test several feature columns at once."""
        rng = np.random.default_rng(5)
        x = rng.normal(size=(2, 3))
        basis = cheb_basis(self.scaled, x, 4)
        assert basis.shape == (4, 2, 3)
        for f in range(3):
            np.testing.assert_allclose(basis[:, :, f], cheb_basis(self.scaled, x[:, f], 4))

    def test_shape_mismatch(self):
        """Test a wrong row count raises ShapeError."""
        with pytest.raises(ShapeError):
            cheb_basis(self.scaled, np.ones(3), 2)

    def test_invalid_order(self):
        """Test M < 1 raises ShapeError."""
        with pytest.raises(ShapeError):
            cheb_basis(self.scaled, np.ones(2), 0)


class TestSpectralOracle:
    """Test Chebyshev filtering against the eigendecomposition."""

    def test_identity_filter(self):
        """Test theta = (1, 0, ...) leaves x unchanged."""
        rng = np.random.default_rng(6)
        lap = normalized_laplacian(random_weighted_graph(rng, 8, 0.6))
        x = rng.normal(size=8)
        np.testing.assert_allclose(spectral_filter_oracle(lap, [1.0, 0.0, 0.0], x), x, atol=1e-12)

    def test_first_order_filter(self):
        """Test theta = (0, 1) gives L_s x."""
        rng = np.random.default_rng(7)
        lap = normalized_laplacian(random_weighted_graph(rng, 8, 0.6))
        x = rng.normal(size=8)
        np.testing.assert_allclose(
            spectral_filter_oracle(lap, [0.0, 1.0], x), scale_laplacian(lap) @ x, atol=1e-12
        )

    def test_chebyshev_equivalence(self):
        """Test recurrence filtering matches the oracle on 100 random graphs."""
        rng = np.random.default_rng(8)
        for trial in range(100):
            n = int(rng.integers(4, 33))
            g = rand_graph(n, float(rng.uniform(0.3, 0.9)), seed=trial)
            lap = normalized_laplacian(g)
            order = int(rng.choice([1, 4, 9, 16]))
            theta = rng.normal(size=order)
            x = rng.normal(size=n)
            basis = cheb_basis(scale_laplacian(lap), x, order)
            filtered = np.tensordot(theta, basis, axes=1)
            expected = spectral_filter_oracle(lap, theta, x)
            error = np.linalg.norm(filtered - expected) / np.linalg.norm(expected)
            assert error <= 1e-10, f"graph {trial}: n={n}, M={order}, error={error}"

    def test_scope_limit(self):
        """Test graphs above 64 vertices are refused."""
        lap = normalized_laplacian(rand_graph(65, 0.1, seed=0))
        with pytest.raises(OracleScopeError):
            spectral_filter_oracle(lap, [1.0], np.ones(65))


class TestGraphFourierTransform:
    """Test the eigenbasis helpers."""

    def test_orthogonal_decomposition(self):
        """Test U^T U = I and L = U diag U^T."""
        rng = np.random.default_rng(9)
        lap = normalized_laplacian(random_weighted_graph(rng, 12, 0.5))
        dec = spectral_decomposition(lap)
        u = dec.eigenvectors
        np.testing.assert_allclose(u.T @ u, np.eye(12), atol=1e-9)
        np.testing.assert_allclose(
            u @ np.diag(dec.eigenvalues) @ u.T, lap.matrix.toarray(), atol=1e-9
        )
        assert np.all(np.diff(dec.eigenvalues) >= 0)

    def test_round_trip(self):
        """Test the inverse transform recovers the signal."""
        rng = np.random.default_rng(10)
        dec = spectral_decomposition(normalized_laplacian(random_weighted_graph(rng, 9, 0.5)))
        x = rng.normal(size=9)
        np.testing.assert_allclose(
            inverse_graph_fourier_transform(dec, graph_fourier_transform(dec, x)), x, atol=1e-12
        )
