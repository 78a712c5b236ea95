import logging
from dataclasses import dataclass
from typing import Iterable, List, Optional, Tuple

import numpy as np

from sensipy.exceptions import ValidationError
from sensipy.grid import Field, Grid
from sensipy.pde.norms import h1_seminorm, l2_norm, linf_norm
from sensipy.pde.solver import solve

logger = logging.getLogger(__name__)

METRICS = ("log", "linear")

DataPair = Tuple[Field, Field]


def poincare_constant(grid: Grid) -> float:
    """Poincare constant L / (pi sqrt(d)) of the box (0, L)^d,
    the reciprocal square root of the first Dirichlet eigenvalue.
    >>> round(poincare_constant(Grid(dim=1, n=4)), 6)
    0.31831
    """
    return grid.length / (np.pi * np.sqrt(grid.dim))


def discrete_poincare_constant(grid: Grid) -> float:
    """Poincare constant of the finite-difference seminorm on `grid`,
    from the smallest eigenvalue of the Dirichlet difference Laplacian.
    Slightly larger than `poincare_constant` and converging to it as h -> 0.
    >>> grid = Grid(dim=1, n=63)
    >>> bool(poincare_constant(grid) < discrete_poincare_constant(grid) < 1.001 * poincare_constant(grid))
    True
    """
    smallest = grid.dim * (2 / grid.h * np.sin(np.pi * grid.h / (2 * grid.length))) ** 2
    return float(1 / np.sqrt(smallest))


def stability_bound(a: Field, f: Field) -> float:
    """Right side c_P / a_min ||f||_L2 of the energy estimate.
    >>> grid = Grid(dim=1, n=31)
    >>> stability_bound(Field.constant(grid, 2.0), Field.zeros(grid))
    0.0
    """
    if np.any(a.values <= 0):
        raise ValidationError("diffusion coefficient must be strictly positive")
    return poincare_constant(a.grid) / float(np.min(a.values)) * l2_norm(f)


@dataclass(frozen=True)
class LipschitzConstants:
    """Constants of the local Lipschitz estimate of the solution operator
    on the data ball ||log a||_inf <= r_a, ||f||_L2 <= r_f.

    Attributes:
        c_a: coefficient constant for the L-infinity distance of a
        c_f: source constant
        c_hat_a: coefficient constant for the L-infinity distance of log a
        c: Poincare constant the others are built from
    """
    c_a: float
    c_f: float
    c_hat_a: float
    c: float


def lipschitz_constants(r_a: float, r_f: float, c: float = 1 / np.pi) -> LipschitzConstants:
    """c_a = c r_f e^{2 r_a}, c_f = c e^{r_a}, c_hat_a = c r_f e^{3 r_a}.
    >>> consts = lipschitz_constants(1.0, 1.0)
    >>> round(consts.c_hat_a, 3)
    6.393
    >>> lipschitz_constants(0.0, 0.0).c_a
    0.0
    """
    if r_a < 0 or r_f < 0:
        raise ValidationError("radii must be nonnegative")
    return LipschitzConstants(
        c_a=c * r_f * np.exp(2 * r_a),
        c_f=c * np.exp(r_a),
        c_hat_a=c * r_f * np.exp(3 * r_a),
        c=c)


def solution_operator_constant(r: float, c: float = 1 / np.pi, metric: str = "log") -> float:
    """Local Lipschitz constant C_S(r) of the solution operator on the data
    ball of radius r: c (1 + r) e^{3r} for the log metric and
    c (1 + r) e^{2r} for the linear metric.
    >>> solution_operator_constant(0.0, c=0.5)
    0.5
    """
    if r < 0:
        raise ValidationError(f"radius must be nonnegative, got {r}")
    if metric == "log":
        return float(c * (1 + r) * np.exp(3 * r))
    if metric == "linear":
        return float(c * (1 + r) * np.exp(2 * r))
    raise ValidationError(f"data metric must be one of {METRICS}, got {metric!r}")


def data_distance(
    first: DataPair,
    second: DataPair,
    metric: str = "log") -> float:
    """Distance of two data pairs (a, f):
    ||log a1 - log a2||_inf + ||f1 - f2||_L2 for the log metric,
    ||a1 - a2||_inf + ||f1 - f2||_L2 for the linear metric.
    """
    (a1, f1), (a2, f2) = first, second
    source = l2_norm(f1 - f2)
    if metric == "log":
        return linf_norm(np.log(a1.values) - np.log(a2.values), a1.grid) + source
    if metric == "linear":
        return linf_norm(a1 - a2) + source
    raise ValidationError(f"data metric must be one of {METRICS}, got {metric!r}")


def data_radius(pair: DataPair) -> float:
    """Log-metric distance of (a, f) to the reference data (1, 0)."""
    a, f = pair
    return linf_norm(np.log(a.values), a.grid) + l2_norm(f)


def difference_bound(first: DataPair, second: DataPair) -> float:
    """Stability estimate of ||S(a2, f2) - S(a1, f1)||_H1 by
    c / a2_min ||f2 - f1||_L2 + c ||f1||_L2 / (a1_min a2_min) ||a2 - a1||_inf.
    """
    (a1, f1), (a2, f2) = first, second
    c = poincare_constant(a1.grid)
    a1_min, a2_min = float(np.min(a1.values)), float(np.min(a2.values))
    if a1_min <= 0 or a2_min <= 0:
        raise ValidationError("diffusion coefficients must be strictly positive")
    return (c / a2_min * l2_norm(f2 - f1)
            + c * l2_norm(f1) / (a1_min * a2_min) * linf_norm(a2 - a1))


@dataclass(frozen=True)
class LipschitzRow:
    """One evaluated pair of `empirical_lipschitz_ratio`."""
    pair_id: int
    distance: float
    solution_distance: float
    ratio: float
    bound: float


@dataclass(frozen=True)
class LipschitzReport:
    """Largest observed ratio against C_S at the largest observed radius.

    Attributes:
        max_ratio: max over pairs of solution distance over data distance
        bound: C_S(radius)
        radius: largest data radius among the evaluated pairs
        rows: per-pair values
        skipped: number of zero-distance pairs
    """
    max_ratio: float
    bound: float
    radius: float
    rows: List[LipschitzRow]
    skipped: int = 0

    @property
    def passes(self) -> bool:
        return self.max_ratio <= self.bound


def empirical_lipschitz_ratio(
    pairs: Iterable[Tuple[DataPair, DataPair]],
    grid: Optional[Grid] = None,
    metric: str = "log",
    slack: Optional[float] = None) -> LipschitzReport:
    """Largest ratio ||S(a2, f2) - S(a1, f1)||_H1 / d_X((a1, f1), (a2, f2))
    over `pairs`, with the constant C_S(r) for r the largest data radius seen.
    Pairs at zero data distance are skipped with a warning.
    Args:
        pairs: ((a1, f1), (a2, f2)) tuples
        grid: mesh all data live on
        metric: "log" or "linear" data metric
        slack: relative discretization slack added to the bound,
            10 h when None
    Returns:
        the report; an empty report has max_ratio 0
    """
    rows = []
    skipped = 0
    radius = 0.0
    evaluated = []
    for pair_id, (first, second) in enumerate(pairs):
        if grid is not None and (first[0].grid != grid or second[0].grid != grid):
            raise ValidationError(f"pair {pair_id} does not live on the requested grid")
        distance = data_distance(first, second, metric)
        if distance == 0:
            skipped += 1
            logger.warning("pair %d has zero data distance, skipped", pair_id)
            continue
        radius = max(radius, data_radius(first), data_radius(second))
        u1 = solve(*first)
        u2 = solve(*second)
        evaluated.append((pair_id, distance, h1_seminorm(u2 - u1), first[0].grid))
    if not evaluated:
        logger.warning("no pair with positive data distance")
        bound = 0.0 if grid is None else solution_operator_constant(0.0, poincare_constant(grid), metric)
        return LipschitzReport(0.0, bound, 0.0, [], skipped)

    work_grid = evaluated[0][3]
    if slack is None:
        slack = 10 * work_grid.h
    bound = solution_operator_constant(radius, poincare_constant(work_grid), metric) * (1 + slack)
    for pair_id, distance, solution_distance, _ in evaluated:
        rows.append(LipschitzRow(pair_id, distance, solution_distance,
                                 solution_distance / distance, bound))
    max_ratio = max(row.ratio for row in rows)
    if max_ratio > bound:
        logger.warning("observed Lipschitz ratio %.4g exceeds C_S = %.4g", max_ratio, bound)
    return LipschitzReport(max_ratio, bound, radius, rows, skipped)


if __name__ == "__main__":
    import doctest
    doctest.testmod()
