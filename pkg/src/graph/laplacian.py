"""
Normalized Laplacian, spectrum scaling and Chebyshev polynomial machinery.

Spectral filtering is done with the Chebyshev recurrence on the scaled
Laplacian. The dense eigendecomposition helpers in this module exist for
inspection and as a test oracle; they are not used during training.
"""

from dataclasses import dataclass
from typing import Sequence, Tuple, Union
import logging

import numpy as np
import scipy.sparse as sp
from numpy.polynomial import chebyshev
from scipy.sparse.linalg import ArpackError, eigsh

from src.errors import OracleScopeError, ShapeError
from src.graph.weighted_graph import WeightedGraph

logger = logging.getLogger(__name__)

LAMBDA_MAX_FALLBACK = 2.0
POWER_ITERATION_TOL = 1e-6
POWER_ITERATION_MAX_ITER = 1000
MAX_ORACLE_VERTICES = 64

MatrixLike = Union[np.ndarray, sp.spmatrix]


@dataclass(frozen=True, eq=False)
class NormalizedLaplacian:
    """
    L = I - D^-1/2 W D^-1/2 together with its largest eigenvalue.

    Attributes:
        matrix: Symmetric CSR matrix
        lambda_max: Largest eigenvalue used for spectrum scaling
    """

    matrix: sp.csr_matrix
    lambda_max: float

    @property
    def n(self) -> int:
        """Matrix size."""
        return self.matrix.shape[0]


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    """
    Dense eigendecomposition L = U diag(eigenvalues) U^T.

    Attributes:
        eigenvectors: Orthogonal matrix U, one eigenvector per column
        eigenvalues: Eigenvalues in non-decreasing order
    """

    eigenvectors: np.ndarray
    eigenvalues: np.ndarray


def power_iteration(
    matrix: MatrixLike,
    tol: float = POWER_ITERATION_TOL,
    max_iter: int = POWER_ITERATION_MAX_ITER,
    seed: int = 0,
) -> Tuple[float, bool]:
    """
    Dominant eigenvalue of a symmetric positive semi-definite matrix.

    Iterates x <- Lx / |Lx| and stops once the residual |Lx - rho x| is
    at most ``tol * |rho|``, rho being the Rayleigh quotient.

    Args:
        matrix: Symmetric PSD matrix (dense or sparse)
        tol: Relative residual tolerance
        max_iter: Iteration cap
        seed: Seed of the start vector

    Returns:
        (estimate, converged). A zero matrix gives (0.0, True).
    """
    n = matrix.shape[0]
    if n == 0:
        return 0.0, True

    rng = np.random.default_rng(seed)
    x = rng.standard_normal(n)
    x /= np.linalg.norm(x)

    rho = 0.0
    for iteration in range(1, max_iter + 1):
        y = matrix @ x
        y_norm = np.linalg.norm(y)
        if y_norm == 0.0:
            return 0.0, True
        rho = float(x @ y)
        residual = np.linalg.norm(y - rho * x)
        if residual <= tol * abs(rho):
            logger.debug(f"Power iteration converged after {iteration} iterations: {rho:.8f}")
            return rho, True
        x = y / y_norm

    logger.debug(f"Power iteration stopped after {max_iter} iterations at {rho:.8f}")
    return rho, False


def lambda_max(matrix: MatrixLike, max_iter: int = POWER_ITERATION_MAX_ITER) -> float:
    """
    Largest eigenvalue of a normalized Laplacian, for spectrum scaling.

    Power iteration comes first. When it hits the iteration cap (close top
    eigenvalues), the value is taken from ARPACK instead; 2.0, the upper
    bound of any normalized Laplacian spectrum, is used when that fails
    too or the estimate is non-positive.

    Args:
        matrix: Symmetric normalized Laplacian
        max_iter: Power iteration cap

    Returns:
        Positive eigenvalue estimate
    """
    estimate, converged = power_iteration(matrix, max_iter=max_iter)
    if not converged:
        logger.debug(f"Power iteration did not converge in {max_iter} iterations, using eigsh")
        try:
            estimate = _largest_eigenvalue(matrix)
        except ArpackError as e:
            logger.warning(f"eigsh failed ({e}), using lambda_max = {LAMBDA_MAX_FALLBACK}")
            return LAMBDA_MAX_FALLBACK
    if estimate <= 0.0:
        logger.debug(f"Non-positive lambda_max estimate {estimate}, using {LAMBDA_MAX_FALLBACK}")
        return LAMBDA_MAX_FALLBACK
    return estimate


def _largest_eigenvalue(matrix: MatrixLike) -> float:
    # ARPACK needs k < n
    if matrix.shape[0] < 3:
        dense = matrix.toarray() if sp.issparse(matrix) else np.asarray(matrix)
        return float(np.linalg.eigvalsh(dense)[-1])
    values = eigsh(matrix, k=1, which="LA", return_eigenvectors=False)
    return float(values[0])


def normalized_laplacian(g: WeightedGraph) -> NormalizedLaplacian:
    """
    Normalized Laplacian of a graph.

    Zero-degree vertices get a diagonal entry of 1 and no off-diagonal
    entries. Edgeless graphs use lambda_max = 2.0.

    Args:
        g: Input graph

    Returns:
        NormalizedLaplacian
    """
    degrees = g.degrees
    inv_sqrt = np.zeros_like(degrees)
    positive = degrees > 0
    inv_sqrt[positive] = 1.0 / np.sqrt(degrees[positive])
    d_half = sp.diags(inv_sqrt)

    lap = sp.identity(g.n, format="csr") - d_half @ g.weights @ d_half
    lap = ((lap + lap.T) * 0.5).tocsr()
    lap.eliminate_zeros()

    lmax = LAMBDA_MAX_FALLBACK if g.num_edges == 0 else lambda_max(lap)
    logger.debug(f"Normalized Laplacian n={g.n}, lambda_max={lmax:.6f}")
    return NormalizedLaplacian(matrix=lap, lambda_max=lmax)


def scale_laplacian(lap: NormalizedLaplacian) -> sp.csr_matrix:
    """
    Rescale the spectrum into [-1, 1]: L_s = 2 L / lambda_max - I.

    Args:
        lap: Normalized Laplacian with positive lambda_max

    Returns:
        Scaled Laplacian (CSR)
    """
    lmax = lap.lambda_max if lap.lambda_max > 0 else LAMBDA_MAX_FALLBACK
    scaled = lap.matrix * (2.0 / lmax) - sp.identity(lap.n, format="csr")
    scaled = scaled.tocsr()
    scaled.eliminate_zeros()
    return scaled


def cheb_basis(scaled: MatrixLike, x: np.ndarray, order: int) -> np.ndarray:
    """
    Chebyshev basis [T_0(L_s) x, ..., T_{M-1}(L_s) x].

    Uses T_0 x = x, T_1 x = L_s x, T_m x = 2 L_s T_{m-1} x - T_{m-2} x.

    Args:
        scaled: Scaled Laplacian L_s (n x n)
        x: Signal with vertices on the first axis (``n`` or ``n x F``)
        order: Number of polynomial terms M

    Returns:
        Array of shape ``(M,) + x.shape``

    Raises:
        ShapeError: If x does not have n rows or M < 1
    """
    n = scaled.shape[0]
    x = np.asarray(x)
    x = x.astype(np.result_type(x.dtype, np.float32), copy=False)
    if order < 1:
        raise ShapeError(f"Chebyshev order must be >= 1, got {order}")
    if x.ndim == 0 or x.shape[0] != n:
        raise ShapeError(f"Signal has shape {x.shape}, expected {n} rows")

    flat = x.reshape(n, -1)
    basis = np.empty((order, n, flat.shape[1]), dtype=np.result_type(flat.dtype, scaled.dtype))
    basis[0] = flat
    if order > 1:
        basis[1] = scaled @ flat
    for m in range(2, order):
        basis[m] = 2.0 * (scaled @ basis[m - 1]) - basis[m - 2]
    return basis.reshape((order,) + x.shape)


def spectral_decomposition(lap: NormalizedLaplacian) -> SpectralDecomposition:
    """Dense eigendecomposition of a Laplacian."""
    eigenvalues, eigenvectors = np.linalg.eigh(lap.matrix.toarray())
    return SpectralDecomposition(eigenvectors=eigenvectors, eigenvalues=eigenvalues)


def graph_fourier_transform(decomposition: SpectralDecomposition, x: np.ndarray) -> np.ndarray:
    """Graph Fourier coefficients U^T x."""
    return decomposition.eigenvectors.T @ np.asarray(x, dtype=np.float64)


def inverse_graph_fourier_transform(
    decomposition: SpectralDecomposition, coefficients: np.ndarray
) -> np.ndarray:
    """Vertex-domain signal U x_hat."""
    return decomposition.eigenvectors @ np.asarray(coefficients, dtype=np.float64)


def spectral_filter_oracle(
    lap: NormalizedLaplacian, theta: Sequence[float], x: np.ndarray
) -> np.ndarray:
    """
    Chebyshev filter evaluated through the eigendecomposition.

    Computes U g(Lambda) U^T x with g(lambda) = sum_m theta_m T_m(2 lambda / lambda_max - 1).

    Args:
        lap: Normalized Laplacian with at most 64 vertices
        theta: Chebyshev coefficients
        x: Vertex signal (``n`` or ``n x F``)

    Returns:
        Filtered signal, same shape as x

    Raises:
        OracleScopeError: If the graph has more than 64 vertices
    """
    if lap.n > MAX_ORACLE_VERTICES:
        raise OracleScopeError(
            f"Spectral oracle is limited to {MAX_ORACLE_VERTICES} vertices, got {lap.n}"
        )
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 0 or x.shape[0] != lap.n:
        raise ShapeError(f"Signal has shape {x.shape}, expected {lap.n} rows")

    decomposition = spectral_decomposition(lap)
    lmax = lap.lambda_max if lap.lambda_max > 0 else LAMBDA_MAX_FALLBACK
    scaled_eigenvalues = 2.0 * decomposition.eigenvalues / lmax - 1.0
    response = chebyshev.chebval(scaled_eigenvalues, np.asarray(theta, dtype=np.float64))

    coefficients = graph_fourier_transform(decomposition, x)
    if coefficients.ndim == 1:
        filtered = response * coefficients
    else:
        filtered = response[:, np.newaxis] * coefficients
    return inverse_graph_fourier_transform(decomposition, filtered)
