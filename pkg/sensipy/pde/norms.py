from typing import Optional, Union

import numpy as np

from sensipy.exceptions import ValidationError
from sensipy.grid import Field, Grid

ArrayOrField = Union[Field, np.ndarray]


def _unpack(u: ArrayOrField, grid: Optional[Grid]):
    if isinstance(u, Field):
        return u.values, u.grid
    if grid is None:
        raise ValidationError("a grid is required for raw nodal values")
    values = np.asarray(u, dtype=float)
    if values.shape[-1] != grid.size:
        raise ValidationError(
            f"values have {values.shape[-1]} nodes, grid has {grid.size}")
    return values, grid


def _result(value: np.ndarray):
    return float(value) if np.ndim(value) == 0 else value


def l2_norm(u: ArrayOrField, grid: Optional[Grid] = None) -> Union[float, np.ndarray]:
    """Trapezoid L2 norm. Raw values may be a batch with a size of (n, N).
    >>> grid = Grid(dim=1, n=255)
    >>> u = Field.from_function(grid, lambda x: np.sin(np.pi * x))
    >>> bool(abs(l2_norm(u) - np.sqrt(0.5)) < 1e-3)
    True
    """
    values, grid = _unpack(u, grid)
    return _result(np.sqrt(np.sum(values ** 2 * grid.weights, axis=-1)))


def linf_norm(u: ArrayOrField, grid: Optional[Grid] = None) -> Union[float, np.ndarray]:
    """Max-abs nodal value."""
    values, grid = _unpack(u, grid)
    return _result(np.max(np.abs(values), axis=-1))


def forward_differences(values: np.ndarray, grid: Grid) -> list:
    """Forward differences along each axis with the zero boundary values
    appended, one array per axis with n + 1 entries along that axis."""
    batch = values.shape[:-1]
    nodal = values.reshape(batch + grid.shape)
    gradients = []
    for axis in range(grid.dim):
        pad = [(0, 0)] * nodal.ndim
        pad[len(batch) + axis] = (1, 1)
        padded = np.pad(nodal, pad)
        gradients.append(np.diff(padded, axis=len(batch) + axis) / grid.h)
    return gradients


def h1_seminorm(u: ArrayOrField, grid: Optional[Grid] = None) -> Union[float, np.ndarray]:
    """Discrete H1_0 seminorm ||grad u||_L2 from forward differences.
    >>> grid = Grid(dim=1, n=255)
    >>> u = Field.from_function(grid, lambda x: np.sin(np.pi * x))
    >>> bool(abs(h1_seminorm(u) - np.pi / np.sqrt(2)) < 1e-2)
    True
    """
    values, grid = _unpack(u, grid)
    batch = values.shape[:-1]
    total = np.zeros(batch)
    for gradient in forward_differences(values, grid):
        axes = tuple(range(len(batch), gradient.ndim))
        total = total + np.sum(gradient ** 2, axis=axes) * grid.h ** grid.dim
    return _result(np.sqrt(total))


def inner_product(u: Field, v: Field) -> float:
    """Trapezoid L2 inner product."""
    if u.grid != v.grid:
        raise ValidationError("fields live on different grids")
    return float(np.sum(u.values * v.values * u.grid.weights))


if __name__ == "__main__":
    import doctest
    doctest.testmod()
