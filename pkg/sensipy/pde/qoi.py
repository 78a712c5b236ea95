from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from sensipy.exceptions import ValidationError
from sensipy.grid import Field, Grid
from sensipy.pde.norms import h1_seminorm, l2_norm
from sensipy.pde.stability import discrete_poincare_constant

KINDS = ("point_eval", "subdomain_mean", "l2_dist", "h1_dist")

Box = Tuple[Tuple[float, float], ...]


class QuantityOfInterest(object):
    """Base class for scalar functionals of the solution.
    Subclasses are bound to a grid and are Lipschitz on H1_0 balls.
    """
    def __init__(self, grid: Grid) -> None:
        self.grid = grid

    def __call__(self, u: Field) -> float:
        """Evaluates the functional.
        Args:
            u: solution on the bound grid
        Returns:
            scalar value
        """
        raise NotImplementedError()

    def values(self, batch: np.ndarray) -> np.ndarray:
        """Evaluates the functional on nodal values with a size of (n, N)."""
        return np.array([self(Field(self.grid, row)) for row in batch])

    def lipschitz(self, radius: float) -> float:
        """Lipschitz constant with respect to the H1_0 seminorm
        on the ball |u|_H1 <= radius."""
        raise NotImplementedError()

    def _check(self, u: Field) -> None:
        if u.grid != self.grid:
            raise ValidationError("solution does not live on the grid of the functional")


class PointEvaluation(QuantityOfInterest):
    """u(x0) at a grid node. One-dimensional only, point values are
    not bounded on H1_0 in two dimensions.
    Examples:
    >>> grid = Grid(dim=1, n=3)
    >>> PointEvaluation(grid, 0.5)(Field(grid, [1.0, 2.0, 3.0]))
    2.0
    """
    def __init__(self, grid: Grid, x0: float) -> None:
        super().__init__(grid)
        if grid.dim != 1:
            raise ValidationError("point evaluation is only bounded on H1_0 in one dimension")
        self.x0 = float(np.ravel(x0)[0])
        self.index = grid.node_index(self.x0)

    def __call__(self, u: Field) -> float:
        self._check(u)
        return float(u.values[self.index])

    def values(self, batch: np.ndarray) -> np.ndarray:
        return np.asarray(batch)[:, self.index]

    def lipschitz(self, radius: float) -> float:
        length = self.grid.length
        return float(np.sqrt(self.x0 * (length - self.x0) / length))


def _region_mask(grid: Grid, region: Optional[Box]) -> np.ndarray:
    if region is None:
        return np.ones(grid.size, dtype=bool)
    if len(region) != grid.dim:
        raise ValidationError(f"region needs {grid.dim} intervals, got {len(region)}")
    mask = np.ones(grid.size, dtype=bool)
    coordinates = grid.coordinates
    for axis, (lower, upper) in enumerate(region):
        if not 0 <= lower < upper <= grid.length:
            raise ValidationError(
                f"region interval ({lower}, {upper}) is not inside (0, {grid.length})")
        x = coordinates[:, axis]
        mask &= (x >= lower - 1e-12) & (x <= upper + 1e-12)
    if not np.any(mask):
        raise ValidationError("region contains no grid node")
    return mask


class SubdomainMean(QuantityOfInterest):
    """Average of u over a box D' inside the domain.
    Examples:
    >>> grid = Grid(dim=1, n=7)
    >>> round(SubdomainMean(grid)(Field.constant(grid, 3.0)), 12)
    3.0
    """
    def __init__(self, grid: Grid, region: Optional[Box] = None) -> None:
        super().__init__(grid)
        mask = _region_mask(grid, region)
        weights = np.where(mask, grid.weights, 0.0)
        self.volume = float(np.sum(weights))
        self.weights = weights / self.volume

    def __call__(self, u: Field) -> float:
        self._check(u)
        return float(np.sum(self.weights * u.values))

    def values(self, batch: np.ndarray) -> np.ndarray:
        return np.asarray(batch) @ self.weights

    def lipschitz(self, radius: float) -> float:
        return discrete_poincare_constant(self.grid) / np.sqrt(self.volume)


class L2Distance(QuantityOfInterest):
    """Squared distance int_{D'} |u0 - u|^2 to a reference u0.
    Examples:
    >>> grid = Grid(dim=1, n=7)
    >>> u = Field.from_function(grid, np.sin)
    >>> L2Distance(grid, u)(u)
    0.0
    """
    def __init__(
        self,
        grid: Grid,
        reference: Optional[Field] = None,
        region: Optional[Box] = None) -> None:
        super().__init__(grid)
        self.reference = Field.zeros(grid) if reference is None else reference
        if self.reference.grid != grid:
            raise ValidationError("reference does not live on the grid of the functional")
        self.weights = np.where(_region_mask(grid, region), grid.weights, 0.0)

    def __call__(self, u: Field) -> float:
        self._check(u)
        return float(np.sum(self.weights * (self.reference.values - u.values) ** 2))

    def values(self, batch: np.ndarray) -> np.ndarray:
        return ((self.reference.values - np.asarray(batch)) ** 2) @ self.weights

    def lipschitz(self, radius: float) -> float:
        c = discrete_poincare_constant(self.grid)
        return 2 * (c * radius + l2_norm(self.reference)) * c


class H1Distance(QuantityOfInterest):
    """Squared seminorm distance |u0 - u|_H1^2 to a reference u0.
    Examples:
    >>> grid = Grid(dim=1, n=255)
    >>> u = Field.from_function(grid, lambda x: np.sin(np.pi * x))
    >>> bool(abs(H1Distance(grid)(u) - np.pi ** 2 / 2) < 2e-2)
    True
    """
    def __init__(self, grid: Grid, reference: Optional[Field] = None) -> None:
        super().__init__(grid)
        self.reference = Field.zeros(grid) if reference is None else reference
        if self.reference.grid != grid:
            raise ValidationError("reference does not live on the grid of the functional")

    def __call__(self, u: Field) -> float:
        self._check(u)
        return h1_seminorm(self.reference - u) ** 2

    def values(self, batch: np.ndarray) -> np.ndarray:
        return h1_seminorm(self.reference.values - np.asarray(batch), self.grid) ** 2

    def lipschitz(self, radius: float) -> float:
        return 2 * (radius + h1_seminorm(self.reference))


@dataclass(frozen=True, eq=False)
class QoiSpec:
    """Description of a quantity of interest.

    Attributes:
        kind: "point_eval", "subdomain_mean", "l2_dist" or "h1_dist"
        x0: evaluation node of point_eval
        region: box D' as one (lower, upper) interval per axis, whole domain if None
        reference: reference solution u0 of the distance functionals, zero if None
    """
    kind: str = "subdomain_mean"
    x0: Optional[Sequence[float]] = None
    region: Optional[Box] = None
    reference: Optional[Field] = None

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValidationError(f"qoi kind must be one of {KINDS}, got {self.kind!r}")
        if self.kind == "point_eval" and self.x0 is None:
            raise ValidationError("point_eval needs an evaluation point x0")

    def build(self, grid: Grid) -> QuantityOfInterest:
        if self.kind == "point_eval":
            return PointEvaluation(grid, self.x0)
        if self.kind == "subdomain_mean":
            return SubdomainMean(grid, self.region)
        if self.kind == "l2_dist":
            return L2Distance(grid, self.reference, self.region)
        return H1Distance(grid, self.reference)


def qoi_eval(spec: QoiSpec, u: Field) -> float:
    """Evaluates the quantity of interest described by `spec` on `u`.
    Raises:
        ValidationError: `spec` does not fit the grid of `u`,
            e.g. x0 is not a node
    >>> grid = Grid(dim=1, n=7)
    >>> round(qoi_eval(QoiSpec("subdomain_mean"), Field.constant(grid, 3.0)), 12)
    3.0
    """
    return spec.build(u.grid)(u)


if __name__ == "__main__":
    import doctest
    doctest.testmod()
