import logging
from dataclasses import dataclass, replace
from math import factorial
from typing import List, Optional, Union

import numpy as np
import scipy.linalg
from scipy.spatial.distance import cdist

from sensipy.exceptions import DecompositionError, ValidationError
from sensipy.grid import Field, Grid
from sensipy.parallel import innovations

logger = logging.getLogger(__name__)

TRANSFORMS = ("identity", "exponential")

# relative jitter levels tried before giving up on a Cholesky factor
JITTERS = (1e-12, 1e-11, 1e-10, 1e-9, 1e-8)


@dataclass(frozen=True)
class MaternParams:
    """Parameters of the half-integer Matern covariance.

    Attributes:
        sigma: standard deviation of the field
        rho: correlation length
        k: nonnegative integer, the smoothness is nu = k + 1/2
    """
    sigma: float = 1.0
    rho: float = 0.5
    k: int = 0

    def __post_init__(self) -> None:
        if not self.sigma > 0:
            raise ValidationError(f"sigma must be positive, got {self.sigma}")
        if not self.rho > 0:
            raise ValidationError(f"rho must be positive, got {self.rho}")
        if int(self.k) != self.k or self.k < 0:
            raise ValidationError(f"k must be a nonnegative integer, got {self.k}")
        object.__setattr__(self, "k", int(self.k))

    @property
    def nu(self) -> float:
        return self.k + 0.5

    @property
    def variance(self) -> float:
        return self.sigma ** 2


def matern_cov(
    params: MaternParams,
    d: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """Half-integer Matern covariance as a function of distance.
    Args:
        params: covariance parameters
        d: nonnegative distance(s)
    Returns:
        covariance value(s), with the shape of `d`
    Examples:
    >>> matern_cov(MaternParams(sigma=3.0, rho=2.0, k=5), 0.0)
    9.0
    >>> round(matern_cov(MaternParams(sigma=1.0, rho=1.0, k=0), 1.0), 7)
    0.3678794
    >>> round(matern_cov(MaternParams(sigma=1.0, rho=1.0, k=1), 1.0), 7)
    0.4833577
    """
    scalar = np.ndim(d) == 0
    d = np.asarray(d, dtype=float)
    if np.any(d < 0):
        raise ValidationError("distances must be nonnegative")
    k = params.k
    scaled = np.sqrt(2 * k + 1) * d / params.rho
    polynomial = np.zeros_like(scaled)
    for i in range(k + 1):
        coefficient = factorial(k + i) / (factorial(i) * factorial(k - i))
        polynomial = polynomial + coefficient * (2 * scaled) ** (k - i)
    value = (params.variance * factorial(k) / factorial(2 * k)
             * polynomial * np.exp(-scaled))
    value = np.where(d == 0, params.variance, value)
    return float(value) if scalar else value


@dataclass(frozen=True, eq=False)
class GaussianFieldModel:
    """Gaussian measure N(m, c) on fields, optionally mapped through exp.
    With transform "exponential" the model describes the lognormal
    coefficient a = exp(g).

    Attributes:
        mean: mean field m
        cov: Matern covariance parameters
        transform: "identity" or "exponential"
    """
    mean: Field
    cov: MaternParams
    transform: str = "identity"

    def __post_init__(self) -> None:
        if self.transform not in TRANSFORMS:
            raise ValidationError(
                f"transform must be one of {TRANSFORMS}, got {self.transform!r}")

    @classmethod
    def centered(
        cls,
        grid: Grid,
        cov: MaternParams,
        transform: str = "identity") -> "GaussianFieldModel":
        return cls(Field.zeros(grid), cov, transform)

    @property
    def grid(self) -> Grid:
        return self.mean.grid

    def with_mean(self, mean: Field) -> "GaussianFieldModel":
        return replace(self, mean=mean)

    def with_cov(self, **changes) -> "GaussianFieldModel":
        """Copy of the model with some covariance parameters changed.
        >>> model = GaussianFieldModel.centered(Grid(n=4), MaternParams())
        >>> model.with_cov(sigma=2.0).cov.sigma
        2.0
        """
        return replace(self, cov=replace(self.cov, **changes))

    def apply_transform(self, values: np.ndarray) -> np.ndarray:
        if self.transform == "exponential":
            return np.exp(values)
        return values


def build_cov_matrix(
    model: Union[GaussianFieldModel, MaternParams],
    grid: Union[Grid, np.ndarray]) -> np.ndarray:
    """Discretizes the covariance function on the nodes of `grid`.
    Args:
        model: field model or bare covariance parameters
        grid: a Grid, or node coordinates with a size of (N,) or (N, dim)
    Returns:
        symmetric matrix with a size of (N, N)
    Examples:
    >>> C = build_cov_matrix(MaternParams(1.0, 1.0, 0), np.array([0.0, 0.5, 1.0]))
    >>> bool(np.isclose(C[0, 1], np.exp(-0.5)) and np.isclose(C[0, 2], np.exp(-1.0)))
    True
    >>> build_cov_matrix(MaternParams(2.0, 1.0, 0), np.array([0.3])).tolist()
    [[4.0]]
    """
    params = model.cov if isinstance(model, GaussianFieldModel) else model
    if isinstance(grid, Grid):
        points = grid.coordinates
    else:
        points = np.asarray(grid, dtype=float)
        if points.ndim == 1:
            points = points[:, np.newaxis]
    if points.shape[0] < 1:
        raise ValidationError("covariance needs at least one node")
    cov = matern_cov(params, cdist(points, points))
    # exact symmetry and diagonal
    cov = 0.5 * (cov + cov.T)
    np.fill_diagonal(cov, params.variance)
    return cov


def cholesky_factor(cov: np.ndarray, variance: Optional[float] = None) -> np.ndarray:
    """Lower Cholesky factor of `cov`, adding the jitter eps * variance * I
    with eps escalating from 1e-12 to 1e-8 when the plain factorization fails.
    Raises:
        DecompositionError: the jittered matrix is still not positive definite
    """
    if variance is None:
        variance = float(np.max(np.diag(cov)))
    identity = np.eye(cov.shape[0])
    for eps in JITTERS:
        try:
            factor = scipy.linalg.cholesky(
                cov + eps * variance * identity, lower=True, check_finite=True)
        except np.linalg.LinAlgError:
            logger.debug("cholesky failed with jitter %.0e, escalating", eps)
            continue
        return factor
    raise DecompositionError(
        f"covariance matrix is not positive definite after jitter {JITTERS[-1]:.0e}")


def sample_values(
    model: GaussianFieldModel,
    rng: Union[int, np.random.Generator],
    n: int,
    factor: Optional[np.ndarray] = None,
    tag: int = 0,
    start: int = 0) -> np.ndarray:
    """Samples as an array with a size of (n, grid.size).
    `factor` may carry a precomputed Cholesky factor of the model."""
    if factor is None:
        factor = cholesky_factor(build_cov_matrix(model, model.grid), model.cov.variance)
    xi = innovations(rng, n, model.grid.size, tag=tag, start=start)
    return fields_from_innovations(model, factor, xi)


def fields_from_innovations(
    model: GaussianFieldModel,
    factor: np.ndarray,
    xi: np.ndarray) -> np.ndarray:
    """Maps innovations xi with a size of (n, N) to m + L xi, transformed."""
    return model.apply_transform(model.mean.values + xi @ factor.T)


def sample_field(
    model: GaussianFieldModel,
    grid: Grid,
    rng: Union[int, np.random.Generator],
    n: int = 1,
    factor: Optional[np.ndarray] = None) -> List[Field]:
    """Draws `n` fields from the model as m + F xi. F is the Cholesky factor of
    the covariance matrix unless `factor` is given; passing the square root
    `KLBasis.factor()` makes the draws equal to the full-rank KL draws with
    the same seed.
    Args:
        model: field model whose mean lives on `grid`
        grid: spatial mesh
        rng: seed of per-sample streams, or a Generator
        n: number of samples
        factor: square root of the covariance matrix with a size of (N, N)
    Returns:
        list of fields
    Raises:
        DecompositionError: Cholesky fails after maximal jitter
    Examples:
    >>> grid = Grid(n=8)
    >>> model = GaussianFieldModel.centered(grid, MaternParams(), "exponential")
    >>> fields = sample_field(model, grid, rng=0, n=3)
    >>> len(fields), all(bool(np.all(f.values > 0)) for f in fields)
    (3, True)
    """
    if model.grid != grid:
        raise ValidationError("model mean is not defined on the sampling grid")
    if factor is not None and factor.shape != (grid.size, grid.size):
        raise ValidationError(f"factor has a shape of {factor.shape}, expected {(grid.size, grid.size)}")
    return [Field(grid, values) for values in sample_values(model, rng, n, factor=factor)]


if __name__ == "__main__":
    import doctest
    doctest.testmod()
