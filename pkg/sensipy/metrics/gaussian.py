from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg

from sensipy.exceptions import DecompositionError, ValidationError

# eigenvalues below this fraction of the largest one count as zero
PSD_CLAMP = 1e-12
PSD_JITTER = 1e-10


@dataclass(frozen=True, eq=False)
class GaussianSpec:
    """Gaussian measure N(mean, cov) on R^n.

    Attributes:
        mean: mean vector with a size of (n,)
        cov: symmetric positive semidefinite matrix with a size of (n, n)
    """
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self) -> None:
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        cov = np.atleast_2d(np.asarray(self.cov, dtype=float))
        if cov.shape != (mean.size, mean.size):
            raise ValidationError(
                f"covariance must have a size of ({mean.size}, {mean.size}), got {cov.shape}")
        scale = max(float(np.max(np.abs(cov))), 1.0)
        if not np.allclose(cov, cov.T, rtol=0, atol=1e-12 * scale):
            raise ValidationError("covariance matrix must be symmetric")
        if scipy.linalg.eigvalsh(cov)[0] < -PSD_JITTER * scale:
            raise ValidationError("covariance matrix must be positive semidefinite")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", 0.5 * (cov + cov.T))

    @classmethod
    def diagonal(cls, variances: np.ndarray, mean: Optional[np.ndarray] = None) -> "GaussianSpec":
        variances = np.asarray(variances, dtype=float).reshape(-1)
        mean = np.zeros(variances.size) if mean is None else mean
        return cls(mean, np.diag(variances))

    @classmethod
    def from_kl(cls, eigenvalues: np.ndarray, K: Optional[int] = None) -> "GaussianSpec":
        """Centered law of the KL coefficients sigma_k xi_k, k <= K.
        The L2 geometry of fields equals the Euclidean geometry of these
        coefficients, so 2-Wasserstein distances carry over unchanged."""
        eigenvalues = np.asarray(eigenvalues, dtype=float).reshape(-1)
        if K is not None:
            if not 0 <= K <= eigenvalues.size:
                raise ValidationError(f"truncation level must lie in [0, {eigenvalues.size}]")
            eigenvalues = np.where(np.arange(eigenvalues.size) < K, eigenvalues, 0.0)
        return cls.diagonal(eigenvalues)

    @property
    def dim(self) -> int:
        return self.mean.size

    @property
    def is_diagonal(self) -> bool:
        return np.count_nonzero(self.cov - np.diag(np.diag(self.cov))) == 0


def psd_sqrt(matrix: np.ndarray) -> np.ndarray:
    """Square root of a symmetric PSD matrix by eigendecomposition,
    with eigenvalues below 1e-12 times the largest set to zero.
    Raises:
        DecompositionError: an eigenvalue is clearly negative
    >>> bool(np.allclose(psd_sqrt(np.diag([4.0, 9.0])), np.diag([2.0, 3.0])))
    True
    """
    eigenvalues, vectors = scipy.linalg.eigh(0.5 * (matrix + matrix.T))
    largest = max(float(eigenvalues[-1]), 0.0)
    if eigenvalues[0] < -PSD_JITTER * max(largest, 1.0):
        raise DecompositionError(
            f"matrix is not positive semidefinite, smallest eigenvalue {eigenvalues[0]:.3g}")
    eigenvalues = np.where(eigenvalues < PSD_CLAMP * largest, 0.0, eigenvalues)
    return (vectors * np.sqrt(eigenvalues)) @ vectors.T


def bures_squared(first: np.ndarray, second: np.ndarray) -> float:
    """tr(C1) + tr(C2) - 2 tr((C2^1/2 C1 C2^1/2)^1/2), exact for diagonal
    or identical arguments."""
    if np.array_equal(first, second):
        return 0.0
    if (np.count_nonzero(first - np.diag(np.diag(first))) == 0
            and np.count_nonzero(second - np.diag(np.diag(second))) == 0):
        return float(np.sum((np.sqrt(np.clip(np.diag(first), 0, None))
                             - np.sqrt(np.clip(np.diag(second), 0, None))) ** 2))
    root = psd_sqrt(second)
    cross = psd_sqrt(root @ first @ root)
    return max(float(np.trace(first) + np.trace(second) - 2 * np.trace(cross)), 0.0)


def gelbrich_gaussian(first: GaussianSpec, second: GaussianSpec) -> float:
    """Closed-form 2-Wasserstein distance of two Gaussian measures,
    sqrt(|m1 - m2|^2 + tr C1 + tr C2 - 2 tr((C2^1/2 C1 C2^1/2)^1/2)).
    Examples:
    >>> gelbrich_gaussian(GaussianSpec([0.0], [[1.0]]), GaussianSpec([1.5], [[1.0]]))
    1.5
    >>> full = GaussianSpec.from_kl([3.0, 2.0, 1.0])
    >>> round(gelbrich_gaussian(full, GaussianSpec.from_kl([3.0, 2.0, 1.0], K=1)), 12)
    1.732050807569
    """
    if first.dim != second.dim:
        raise ValidationError(f"dimensions differ: {first.dim} and {second.dim}")
    shift = float(np.sum((first.mean - second.mean) ** 2))
    return float(np.sqrt(shift + bures_squared(first.cov, second.cov)))


if __name__ == "__main__":
    import doctest
    doctest.testmod()
