import logging
from typing import Optional

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

from sensipy.exceptions import ConvergenceError, ValidationError
from sensipy.grid import Field, Grid

logger = logging.getLogger(__name__)

METHODS = ("auto", "banded", "direct", "cg")

CG_RTOL = 1e-10


def interface_coefficients(a: np.ndarray, axis: int = 0) -> np.ndarray:
    """Coefficients on the cell interfaces along `axis`.
    Interior interfaces carry the arithmetic mean of their two nodes; the
    two boundary interfaces carry the value of the adjacent interior node.
    The result has n + 1 entries along `axis`.
    >>> interface_coefficients(np.array([1.0, 3.0])).tolist()
    [1.0, 2.0, 3.0]
    """
    a = np.moveaxis(a, axis, 0)
    inner = 0.5 * (a[:-1] + a[1:])
    return np.moveaxis(np.concatenate([a[:1], inner, a[-1:]], axis=0), 0, axis)


def _check_coefficient(a: Field) -> None:
    if np.any(a.values <= 0):
        raise ValidationError(
            f"diffusion coefficient must be strictly positive, min is {a.values.min():.3g}")


def assemble(a: Field) -> scipy.sparse.csr_matrix:
    """Flux-form finite-difference matrix of -div(a grad u) with zero
    Dirichlet boundary: three-point stencil in 1D, five-point in 2D.
    Nodes are numbered in C order.
    >>> A = assemble(Field.constant(Grid(dim=1, n=3, length=4.0), 1.0))
    >>> A.toarray().tolist()
    [[2.0, -1.0, 0.0], [-1.0, 2.0, -1.0], [0.0, -1.0, 2.0]]
    """
    _check_coefficient(a)
    grid = a.grid
    n, h2 = grid.n, grid.h ** 2
    values = a.as_array()
    index = np.arange(grid.size).reshape(grid.shape)
    diagonal = np.zeros(grid.shape)
    rows, cols, data = [], [], []
    for axis in range(grid.dim):
        faces = interface_coefficients(values, axis) / h2
        lower = np.take(faces, np.arange(n), axis=axis)
        upper = np.take(faces, np.arange(1, n + 1), axis=axis)
        diagonal += lower + upper
        inner = np.take(faces, np.arange(1, n), axis=axis).ravel()
        left = np.take(index, np.arange(n - 1), axis=axis).ravel()
        right = np.take(index, np.arange(1, n), axis=axis).ravel()
        rows += [left, right]
        cols += [right, left]
        data += [-inner, -inner]
    rows.append(index.ravel())
    cols.append(index.ravel())
    data.append(diagonal.ravel())
    matrix = scipy.sparse.coo_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
        shape=(grid.size, grid.size))
    return matrix.tocsr()


def _solve_banded(a: Field, f: Field) -> np.ndarray:
    h2 = a.grid.h ** 2
    faces = interface_coefficients(a.values) / h2
    bands = np.zeros((3, a.grid.n))
    bands[0, 1:] = -faces[1:-1]
    bands[1] = faces[:-1] + faces[1:]
    bands[2, :-1] = -faces[1:-1]
    return scipy.linalg.solve_banded((1, 1), bands, f.values)


def _solve_cg(matrix: scipy.sparse.csr_matrix, rhs: np.ndarray, n: int) -> np.ndarray:
    preconditioner = scipy.sparse.diags(1.0 / matrix.diagonal())
    iterations = [0]

    def count(_: np.ndarray) -> None:
        iterations[0] += 1

    u, info = scipy.sparse.linalg.cg(
        matrix, rhs, rtol=CG_RTOL, atol=0.0, maxiter=10 * n * n,
        M=preconditioner, callback=count)
    if info != 0:
        raise ConvergenceError(
            f"conjugate gradient did not reach relative residual {CG_RTOL:.0e} "
            f"within {10 * n * n} iterations")
    logger.debug("cg converged in %d iterations", iterations[0])
    return u


class DiffusionSolver(object):
    """Finite-difference solver for -div(a grad u) = f in (0, L)^d, u = 0 on the boundary.
    Attributes:
        method: "auto" (banded in 1D, cg in 2D), "banded" (1D only),
            "direct" (sparse LU) or "cg" (Jacobi-preconditioned conjugate gradient)
    Examples:
    >>> grid = Grid(dim=1, n=15)
    >>> solver = DiffusionSolver()
    >>> u = solver(Field.constant(grid, 1.0), Field.zeros(grid))
    >>> float(np.max(np.abs(u.values)))
    0.0
    """
    def __init__(self, method: str = "auto") -> None:
        if method not in METHODS:
            raise ValidationError(f"solver method must be one of {METHODS}, got {method!r}")
        self.method = method

    def __call__(self, a: Field, f: Field) -> Field:
        """Solves the boundary value problem.
        Args:
            a: strictly positive diffusion coefficient
            f: source term on the grid of `a`
        Returns:
            solution u at the interior nodes
        Raises:
            ValidationError: `a` is not strictly positive or the grids differ
            ConvergenceError: conjugate gradient did not converge
        """
        if a.grid != f.grid:
            raise ValidationError("coefficient and source live on different grids")
        _check_coefficient(a)
        grid = a.grid
        method = self.method
        if method == "auto":
            method = "banded" if grid.dim == 1 else "cg"
        if method == "banded":
            if grid.dim != 1:
                raise ValidationError("the banded solver is one-dimensional")
            return Field(grid, _solve_banded(a, f))
        matrix = assemble(a)
        if method == "direct":
            return Field(grid, scipy.sparse.linalg.spsolve(matrix.tocsc(), f.values))
        return Field(grid, _solve_cg(matrix, f.values, grid.n))


def solve(
    a: Field,
    f: Field,
    grid: Optional[Grid] = None,
    method: str = "auto") -> Field:
    """Solves -div(a grad u) = f with zero Dirichlet boundary on `grid`.
    Examples:
    >>> grid = Grid(dim=1, n=127)
    >>> f = Field.from_function(grid, lambda x: np.pi ** 2 * np.sin(np.pi * x))
    >>> u = solve(Field.constant(grid, 1.0), f, grid)
    >>> bool(np.max(np.abs(u.values - np.sin(np.pi * grid.axis))) <= 1e-3)
    True
    """
    if grid is not None and (a.grid != grid or f.grid != grid):
        raise ValidationError("data do not live on the requested grid")
    return DiffusionSolver(method)(a, f)


if __name__ == "__main__":
    import doctest
    doctest.testmod()
