import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple, Union

import numpy as np
import scipy.linalg

from sensipy.exceptions import ValidationError
from sensipy.grid import Field, Grid
from sensipy.grf.matern import GaussianFieldModel, build_cov_matrix
from sensipy.parallel import innovations

logger = logging.getLogger(__name__)

# eigenvalues below this fraction of the largest one are set to zero
EIGENVALUE_CLAMP = 1e-12


@dataclass(frozen=True, eq=False)
class KLBasis:
    """Eigenpairs of a discretized covariance operator.

    Attributes:
        eigenvalues: sigma_k^2, nonincreasing and nonnegative, a size of (K,)
        vectors: eigenfields as columns with a size of (N, K),
            orthonormal in the weighted inner product
        weights: quadrature weights with a size of (N,)
        grid: mesh of the eigenfields, if known
    """
    eigenvalues: np.ndarray
    vectors: np.ndarray
    weights: np.ndarray
    grid: Optional[Grid] = None

    def __post_init__(self) -> None:
        eigenvalues = np.asarray(self.eigenvalues, dtype=float).reshape(-1)
        vectors = np.asarray(self.vectors, dtype=float)
        weights = np.asarray(self.weights, dtype=float).reshape(-1)
        if vectors.ndim != 2 or vectors.shape != (weights.size, eigenvalues.size):
            raise ValidationError(
                f"eigenfields must have a size of ({weights.size}, {eigenvalues.size}), "
                f"got {vectors.shape}")
        if np.any(eigenvalues < 0):
            raise ValidationError("eigenvalues must be nonnegative")
        if np.any(np.diff(eigenvalues) > 0):
            raise ValidationError("eigenvalues must be nonincreasing")
        if np.any(weights <= 0):
            raise ValidationError("quadrature weights must be positive")
        if self.grid is not None and self.grid.size != weights.size:
            raise ValidationError("basis and grid have different node counts")
        object.__setattr__(self, "eigenvalues", eigenvalues)
        object.__setattr__(self, "vectors", vectors)
        object.__setattr__(self, "weights", weights)

    @property
    def rank(self) -> int:
        """Number of eigenpairs, the largest admissible truncation level."""
        return self.eigenvalues.size

    @property
    def sigmas(self) -> np.ndarray:
        return np.sqrt(self.eigenvalues)

    @property
    def trace(self) -> float:
        return float(np.sum(self.eigenvalues))

    @property
    def eigenfields(self) -> List[Field]:
        if self.grid is None:
            raise ValidationError("basis has no grid attached")
        return [Field(self.grid, self.vectors[:, k]) for k in range(self.rank)]

    def factor(self) -> np.ndarray:
        """Square root Phi Lambda^(1/2) of the covariance matrix; the full-rank
        KL draw with innovations xi is m + xi @ factor().T."""
        return self.vectors * self.sigmas

    def tail_sum(self, K: int) -> float:
        """Sum of the eigenvalues dropped by truncation at level K."""
        self._check_level(K)
        return float(np.sum(self.eigenvalues[K:]))

    def gram(self) -> np.ndarray:
        """Weighted Gram matrix of the eigenfields, the identity up to round-off."""
        return self.vectors.T @ (self.weights[:, np.newaxis] * self.vectors)

    def reconstruct(self, K: Optional[int] = None) -> np.ndarray:
        """Covariance matrix sum_{k<=K} sigma_k^2 f_k f_k^T."""
        K = self.rank if K is None else K
        self._check_level(K)
        vectors = self.vectors[:, :K]
        return (vectors * self.eigenvalues[:K]) @ vectors.T

    def sup_norms(self) -> np.ndarray:
        """Max-abs nodal values of the eigenfields."""
        return np.max(np.abs(self.vectors), axis=0)

    def _check_level(self, K: int) -> None:
        if not 0 <= K <= self.rank:
            raise ValidationError(f"truncation level must lie in [0, {self.rank}], got {K}")


def kl_decompose(
    cov: np.ndarray,
    quadrature: np.ndarray,
    grid: Optional[Grid] = None) -> KLBasis:
    """Solves the weighted eigenproblem C W f = lambda f of the discretized
    covariance operator through the symmetric matrix W^1/2 C W^1/2.
    Args:
        cov: symmetric covariance matrix with a size of (N, N)
        quadrature: positive node weights with a size of (N,)
        grid: mesh to attach to the basis
    Returns:
        basis sorted by nonincreasing eigenvalue
    Raises:
        ValidationError: `cov` is not symmetric or a weight is not positive
    Examples:
    >>> basis = kl_decompose(np.eye(3), np.full(3, 0.25))
    >>> bool(np.allclose(basis.eigenvalues, 0.25))
    True
    >>> f = np.array([1.0, 2.0, 2.0])
    >>> int(np.count_nonzero(kl_decompose(np.outer(f, f), np.ones(3)).eigenvalues))
    1
    """
    cov = np.asarray(cov, dtype=float)
    weights = np.asarray(quadrature, dtype=float).reshape(-1)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1] or cov.shape[0] != weights.size:
        raise ValidationError(
            f"covariance of size {cov.shape} does not match {weights.size} weights")
    scale = max(float(np.max(np.abs(cov))), np.finfo(float).tiny)
    if not np.allclose(cov, cov.T, rtol=0, atol=1e-12 * scale):
        raise ValidationError("covariance matrix must be symmetric")
    if np.any(weights <= 0):
        raise ValidationError("quadrature weights must be positive")

    root = np.sqrt(weights)
    symmetric = root[:, np.newaxis] * cov * root[np.newaxis, :]
    eigenvalues, eigenvectors = scipy.linalg.eigh(0.5 * (symmetric + symmetric.T))
    order = np.argsort(eigenvalues)[::-1]
    eigenvalues = eigenvalues[order]
    eigenvectors = eigenvectors[:, order]

    largest = max(eigenvalues[0], 0.0)
    eigenvalues = np.where(eigenvalues < EIGENVALUE_CLAMP * largest, 0.0, eigenvalues)
    logger.debug("KL basis with %d eigenpairs, %d numerically nonzero",
                 eigenvalues.size, np.count_nonzero(eigenvalues))
    return KLBasis(eigenvalues, eigenvectors / root[:, np.newaxis], weights, grid)


def kl_from_model(model: GaussianFieldModel) -> KLBasis:
    """KL basis of the model covariance on the model grid
    with the trapezoid weights of the grid."""
    grid = model.grid
    return kl_decompose(build_cov_matrix(model, grid), grid.weights, grid)


def truncated_values(
    basis: KLBasis,
    mean: np.ndarray,
    K: int,
    xi: np.ndarray) -> np.ndarray:
    """f_0 + sum_{k<=K} sigma_k xi_k f_k for innovations with a size of (n, rank)."""
    basis._check_level(K)
    coefficients = xi[:, :K] * basis.sigmas[:K]
    return mean + coefficients @ basis.vectors[:, :K].T


def sample_truncated(
    basis: KLBasis,
    mean: Field,
    K: int,
    rng: Union[int, np.random.Generator],
    n: int = 1,
    transform: str = "identity") -> List[Field]:
    """Draws `n` fields from the KL expansion truncated after K terms.
    Innovations are drawn for all eigenpairs and the first K are used,
    so draws with the same seed at different K share xi_1, ..., xi_K.
    Args:
        basis: KL basis on the grid of `mean`
        mean: mean field f_0
        K: truncation level, 0 <= K <= basis.rank
        rng: seed of per-sample streams, or a Generator
        n: number of samples
        transform: "identity" or "exponential"
    Returns:
        list of fields
    Examples:
    >>> grid = Grid(n=4)
    >>> basis = kl_decompose(np.eye(4), grid.weights, grid)
    >>> fields = sample_truncated(basis, Field.constant(grid, 1.0), 0, rng=0, n=2)
    >>> [f.values.tolist() for f in fields]
    [[1.0, 1.0, 1.0, 1.0], [1.0, 1.0, 1.0, 1.0]]
    """
    basis._check_level(K)
    if mean.values.size != basis.weights.size:
        raise ValidationError("mean field does not match the basis")
    xi = innovations(rng, n, basis.rank)
    values = truncated_values(basis, mean.values, K, xi)
    if transform == "exponential":
        values = np.exp(values)
    elif transform != "identity":
        raise ValidationError(f"unknown transform {transform!r}")
    return [Field(mean.grid, v) for v in values]


def sample_coupled_truncated(
    basis: KLBasis,
    mean: np.ndarray,
    K: int,
    rng: Union[int, np.random.Generator],
    n: int) -> Tuple[np.ndarray, np.ndarray]:
    """Coupled draws (full, K-truncated) sharing their innovations.
    Returns:
        two arrays with a size of (n, N)
    """
    xi = innovations(rng, n, basis.rank)
    return (truncated_values(basis, mean, basis.rank, xi),
            truncated_values(basis, mean, K, xi))


if __name__ == "__main__":
    import doctest
    doctest.testmod()
