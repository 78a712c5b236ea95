import logging
from typing import Callable, Optional, Tuple, Union

import numpy as np
import ot
from scipy.spatial.distance import cdist

from sensipy.exceptions import ConvergenceError, ValidationError
from sensipy.metrics.measure import CouplingPlan, EmpiricalMeasure
from sensipy.stats import power_mean

logger = logging.getLogger(__name__)

# largest support handed to the exact transport solver
MAX_EXACT_ATOMS = 256

MeasureLike = Union[EmpiricalMeasure, np.ndarray]


def _as_scalar_measure(samples: MeasureLike, weights: Optional[np.ndarray]) -> EmpiricalMeasure:
    if isinstance(samples, EmpiricalMeasure):
        measure = samples
    else:
        samples = np.asarray(samples, dtype=float).reshape(-1)
        if samples.size == 0:
            raise ValidationError("samples must not be empty")
        measure = (EmpiricalMeasure.uniform(samples) if weights is None
                   else EmpiricalMeasure.from_weights(samples, weights))
    if not measure.is_scalar:
        raise ValidationError("one-dimensional transport needs scalar atoms")
    return measure.sorted()


def quantile_refinement(
    first: EmpiricalMeasure,
    second: EmpiricalMeasure) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Common refinement of two quantile functions.
    Returns:
        interval masses du and the quantiles of both measures on each interval
    """
    first, second = first.sorted(), second.sorted()
    cum_first = np.cumsum(first.weights)
    cum_second = np.cumsum(second.weights)
    cum_first[-1] = cum_second[-1] = 1.0
    edges = np.union1d(np.concatenate([[0.0], cum_first]), cum_second)
    du = np.diff(edges)
    middle = edges[:-1] + 0.5 * du
    keep = du > 0
    i = np.minimum(np.searchsorted(cum_first, middle[keep], side="left"), first.size - 1)
    j = np.minimum(np.searchsorted(cum_second, middle[keep], side="left"), second.size - 1)
    return du[keep], first.atoms[i], second.atoms[j]


def wasserstein_1d(
    p_samples: MeasureLike,
    q_samples: MeasureLike,
    p: float = 2,
    p_weights: Optional[np.ndarray] = None,
    q_weights: Optional[np.ndarray] = None) -> float:
    """Exact p-Wasserstein distance of two scalar empirical measures.
    The monotone (quantile) coupling is optimal on the line; unequal sample
    counts and weights are handled through the common refinement of the
    quantile functions.
    Args:
        p_samples: samples or a scalar measure
        q_samples: samples or a scalar measure
        p: order, at least 1, inf allowed
        p_weights: weights of `p_samples`, uniform if None
        q_weights: weights of `q_samples`, uniform if None
    Returns:
        d_p
    Examples:
    >>> wasserstein_1d([0.0, 1.0], [1.0, 2.0], p=1)
    1.0
    >>> wasserstein_1d([0.0], [3.0])
    3.0
    >>> round(wasserstein_1d([0.0, 0.0, 1.0], [0.0, 1.0], p=1), 12)
    0.166666666667
    """
    if not p >= 1:
        raise ValidationError(f"order must be at least 1, got {p}")
    first = _as_scalar_measure(p_samples, p_weights)
    second = _as_scalar_measure(q_samples, q_weights)
    du, x, y = quantile_refinement(first, second)
    gaps = np.abs(x - y)
    if np.isinf(p):
        return float(np.max(gaps))
    return float(np.sum(du * gaps ** p) ** (1.0 / p))


def ground_cost(
    first: EmpiricalMeasure,
    second: EmpiricalMeasure,
    weights: Optional[np.ndarray] = None) -> np.ndarray:
    """Pairwise distances of the atoms: absolute differences for scalars,
    Euclidean distances for vectors, weighted L2 distances of fields when
    quadrature `weights` are given."""
    x = first.atoms.reshape(first.size, -1)
    y = second.atoms.reshape(second.size, -1)
    if weights is not None:
        root = np.sqrt(np.asarray(weights, dtype=float))
        x, y = x * root, y * root
    return cdist(x, y)


def wasserstein_discrete_exact(
    P: EmpiricalMeasure,
    Q: EmpiricalMeasure,
    cost: Optional[np.ndarray] = None,
    p: float = 2) -> Tuple[float, CouplingPlan]:
    """Exact p-Wasserstein distance of two finite measures by the network
    simplex, together with an optimal coupling.
    Args:
        P: first measure, at most 256 atoms
        Q: second measure, at most 256 atoms
        cost: ground distances d(x_i, y_j), `ground_cost` if None
        p: order, at least 1
    Returns:
        (d_p, optimal plan)
    Raises:
        ValidationError: more than 256 atoms on a side, or a bad cost matrix
    Examples:
    >>> P = EmpiricalMeasure.uniform([0.0])
    >>> Q = EmpiricalMeasure.uniform([2.5])
    >>> distance, plan = wasserstein_discrete_exact(P, Q)
    >>> round(distance, 12), plan.plan.tolist()
    (2.5, [[1.0]])
    """
    if max(P.size, Q.size) > MAX_EXACT_ATOMS:
        raise ValidationError(
            f"exact transport is limited to {MAX_EXACT_ATOMS} atoms per measure, "
            f"got {P.size} and {Q.size}; use wasserstein_1d on scalar projections "
            "or coupling_upper_bound instead")
    if not p >= 1 or np.isinf(p):
        raise ValidationError(f"order must be a finite number >= 1, got {p}")
    if cost is None:
        cost = ground_cost(P, Q)
    cost = np.asarray(cost, dtype=float)
    if cost.shape != (P.size, Q.size):
        raise ValidationError(f"cost must have a size of ({P.size}, {Q.size}), got {cost.shape}")
    if np.any(cost < 0) or not np.all(np.isfinite(cost)):
        raise ValidationError("cost entries must be finite and nonnegative")

    powered = np.ascontiguousarray(cost ** p)
    plan, log = ot.emd(P.weights.copy(), Q.weights.copy(), powered,
                       numItermax=1_000_000, log=True)
    if log.get("warning"):
        raise ConvergenceError(f"network simplex failed: {log['warning']}")
    coupling = CouplingPlan(P, Q, plan)
    value = max(coupling.cost(powered), 0.0)
    return float(value ** (1.0 / p)), coupling


def coupling_distances(
    x: np.ndarray,
    y: np.ndarray,
    dist: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None) -> np.ndarray:
    """Distances of paired samples, computed row by row.
    `dist` receives two arrays with a size of (n, ...) and returns (n,) distances;
    absolute or Euclidean differences are used when it is None."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValidationError(f"paired samples differ in size: {x.shape} and {y.shape}")
    if dist is not None:
        return np.asarray(dist(x, y), dtype=float).reshape(-1)
    if x.ndim == 1:
        return np.abs(x - y)
    return np.linalg.norm((x - y).reshape(x.shape[0], -1), axis=1)


def coupling_upper_bound(
    x: np.ndarray,
    y: np.ndarray,
    dist: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None,
    p: float = 2) -> float:
    """(mean of dist(x_i, y_i)^p)^(1/p) for pairs drawn from a coupling of
    two laws. The pairs must have the correct marginals; the value is then an
    upper bound on d_p of the two laws up to Monte Carlo error.
    Examples:
    >>> coupling_upper_bound(np.array([1.0, 2.0]), np.array([1.0, 2.0]))
    0.0
    """
    if not p >= 1:
        raise ValidationError(f"order must be at least 1, got {p}")
    return power_mean(coupling_distances(x, y, dist), p)


if __name__ == "__main__":
    import doctest
    doctest.testmod()
