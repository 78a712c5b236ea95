from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from sensipy.exceptions import ValidationError


@dataclass(frozen=True)
class Grid:
    """Uniform mesh of interior nodes on the box (0, L)^d.
    Boundary nodes are not stored; fields vanish there
    under the homogeneous Dirichlet condition.

    Attributes:
        dim: spatial dimension, 1 or 2
        n: number of interior nodes per axis
        length: edge length L of the box

    Examples:
    >>> grid = Grid(dim=1, n=3)
    >>> grid.h
    0.25
    >>> grid.size
    3
    >>> Grid(dim=2, n=4).coordinates.shape
    (16, 2)
    """
    dim: int = 1
    n: int = 63
    length: float = 1.0

    def __post_init__(self) -> None:
        if self.dim not in (1, 2):
            raise ValidationError(f"dim must be 1 or 2, got {self.dim}")
        if self.n < 2:
            raise ValidationError(f"n must be at least 2, got {self.n}")
        if not self.length > 0:
            raise ValidationError(f"length must be positive, got {self.length}")

    @property
    def h(self) -> float:
        return self.length / (self.n + 1)

    @property
    def size(self) -> int:
        return self.n ** self.dim

    @property
    def shape(self) -> tuple:
        return (self.n,) * self.dim

    @property
    def axis(self) -> np.ndarray:
        """Interior node positions along one axis."""
        return self.h * np.arange(1, self.n + 1)

    @property
    def coordinates(self) -> np.ndarray:
        """Node coordinates with a size of (size, dim), C-ordered."""
        if self.dim == 1:
            return self.axis[:, np.newaxis]
        xx, yy = np.meshgrid(self.axis, self.axis, indexing="ij")
        return np.column_stack([xx.ravel(), yy.ravel()])

    @property
    def weights(self) -> np.ndarray:
        """Trapezoid quadrature weights. The boundary terms of the
        trapezoid rule vanish for Dirichlet fields, so every interior
        node carries h^d."""
        return np.full(self.size, self.h ** self.dim)

    @property
    def volume(self) -> float:
        return self.length ** self.dim

    @property
    def diameter(self) -> float:
        return self.length * np.sqrt(self.dim)

    def node_index(self, point: Union[float, np.ndarray], atol: float = 1e-10) -> int:
        """Returns the index of the node located at `point`.
        Raises:
            ValidationError: `point` is not a grid node
        >>> Grid(dim=1, n=3).node_index(0.5)
        1
        """
        point = np.atleast_1d(np.asarray(point, dtype=float))
        if point.shape != (self.dim,):
            raise ValidationError(
                f"point must have {self.dim} coordinates, got {point.shape}")
        distance = np.max(np.abs(self.coordinates - point), axis=1)
        index = int(np.argmin(distance))
        if distance[index] > atol:
            raise ValidationError(
                f"point {point.tolist()} is not a grid node; "
                "point evaluation does not interpolate")
        return index


@dataclass(frozen=True, eq=False)
class Field:
    """Nodal values of a function on a Grid.

    Attributes:
        grid: the mesh the values live on
        values: per-node values with a size of (grid.size,)

    Examples:
    >>> grid = Grid(dim=1, n=3)
    >>> f = Field.from_function(grid, lambda x: 2 * x)
    >>> f.values.tolist()
    [0.5, 1.0, 1.5]
    >>> (f + f).values.tolist()
    [1.0, 2.0, 3.0]
    """
    grid: Grid
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float).reshape(-1)
        if values.size != self.grid.size:
            raise ValidationError(
                f"field has {values.size} values, grid has {self.grid.size} nodes")
        if not np.all(np.isfinite(values)):
            raise ValidationError("field values must be finite")
        object.__setattr__(self, "values", values)

    @classmethod
    def constant(cls, grid: Grid, value: float) -> "Field":
        return cls(grid, np.full(grid.size, float(value)))

    @classmethod
    def zeros(cls, grid: Grid) -> "Field":
        return cls.constant(grid, 0.0)

    @classmethod
    def from_function(
        cls,
        grid: Grid,
        function: Callable[..., np.ndarray]) -> "Field":
        """Evaluates `function` at the nodes. The function receives
        one coordinate array per axis."""
        coords = grid.coordinates
        return cls(grid, function(*[coords[:, i] for i in range(grid.dim)]))

    def as_array(self) -> np.ndarray:
        """Values reshaped to (n,) or (n, n)."""
        return self.values.reshape(self.grid.shape)

    def map(self, function: Callable[[np.ndarray], np.ndarray]) -> "Field":
        return Field(self.grid, function(self.values))

    def _check_grid(self, other: "Field") -> None:
        if other.grid != self.grid:
            raise ValidationError("fields live on different grids")

    def __add__(self, other: Union["Field", float]) -> "Field":
        if isinstance(other, Field):
            self._check_grid(other)
            return Field(self.grid, self.values + other.values)
        return Field(self.grid, self.values + other)

    def __sub__(self, other: Union["Field", float]) -> "Field":
        if isinstance(other, Field):
            self._check_grid(other)
            return Field(self.grid, self.values - other.values)
        return Field(self.grid, self.values - other)

    def __mul__(self, factor: float) -> "Field":
        return Field(self.grid, self.values * factor)

    __rmul__ = __mul__

    def __neg__(self) -> "Field":
        return Field(self.grid, -self.values)


if __name__ == "__main__":
    import doctest
    doctest.testmod()
