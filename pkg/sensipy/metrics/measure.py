from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np

from sensipy.exceptions import ValidationError

WEIGHT_TOL = 1e-12
MARGINAL_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class EmpiricalMeasure:
    """Weighted finite set of atoms.
    Scalar atoms are stored with a size of (n,); vector or field atoms
    with a size of (n, N).

    Attributes:
        atoms: support points
        weights: nonnegative probabilities summing to one

    Examples:
    >>> P = EmpiricalMeasure.uniform([1.0, 2.0, 3.0, 4.0])
    >>> P.weights.tolist()
    [0.25, 0.25, 0.25, 0.25]
    >>> P.mean()
    2.5
    """
    atoms: np.ndarray
    weights: np.ndarray

    def __post_init__(self) -> None:
        atoms = np.asarray(self.atoms, dtype=float)
        weights = np.asarray(self.weights, dtype=float).reshape(-1)
        if atoms.ndim == 0 or atoms.shape[0] < 1:
            raise ValidationError("a measure needs at least one atom")
        if weights.size != atoms.shape[0]:
            raise ValidationError(
                f"{atoms.shape[0]} atoms but {weights.size} weights")
        if np.any(weights < 0):
            raise ValidationError("weights must be nonnegative")
        if abs(weights.sum() - 1) > WEIGHT_TOL:
            raise ValidationError(f"weights must sum to 1, sum is {weights.sum():.15g}")
        if not np.all(np.isfinite(atoms)):
            raise ValidationError("atoms must be finite")
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def uniform(cls, atoms: np.ndarray) -> "EmpiricalMeasure":
        atoms = np.asarray(atoms, dtype=float)
        if atoms.ndim == 0 or atoms.shape[0] < 1:
            raise ValidationError("a measure needs at least one atom")
        return cls(atoms, np.full(atoms.shape[0], 1.0 / atoms.shape[0]))

    @classmethod
    def from_weights(cls, atoms: np.ndarray, weights: np.ndarray) -> "EmpiricalMeasure":
        """Normalizes nonnegative `weights` before building the measure."""
        weights = np.asarray(weights, dtype=float)
        total = weights.sum()
        if not total > 0:
            raise ValidationError("weights must have a positive sum")
        return cls(atoms, weights / total)

    @property
    def size(self) -> int:
        return self.weights.size

    @property
    def is_scalar(self) -> bool:
        return self.atoms.ndim == 1

    def mean(self) -> float:
        if not self.is_scalar:
            raise ValidationError("mean of non-scalar atoms is not a scalar")
        return float(np.dot(self.weights, self.atoms))

    def sorted(self) -> "EmpiricalMeasure":
        """Scalar measure with atoms in increasing order."""
        if not self.is_scalar:
            raise ValidationError("only scalar atoms can be sorted")
        order = np.argsort(self.atoms, kind="stable")
        return EmpiricalMeasure(self.atoms[order], self.weights[order])

    def map(self, function: Callable[[np.ndarray], np.ndarray]) -> "EmpiricalMeasure":
        """Applies `function` atomwise, keeping the weights."""
        return EmpiricalMeasure(np.array([function(x) for x in self.atoms]), self.weights)


@dataclass(frozen=True, eq=False)
class CouplingPlan:
    """Joint law of two measures on the product of their supports.

    Attributes:
        row: first marginal
        column: second marginal
        plan: nonnegative matrix with a size of (row.size, column.size)
    """
    row: EmpiricalMeasure
    column: EmpiricalMeasure
    plan: np.ndarray

    def __post_init__(self) -> None:
        plan = np.asarray(self.plan, dtype=float)
        if plan.shape != (self.row.size, self.column.size):
            raise ValidationError(
                f"plan has a size of {plan.shape}, marginals need "
                f"({self.row.size}, {self.column.size})")
        if np.any(plan < -MARGINAL_TOL):
            raise ValidationError("plan entries must be nonnegative")
        plan = np.clip(plan, 0.0, None)
        if (np.max(np.abs(plan.sum(axis=1) - self.row.weights)) > MARGINAL_TOL
                or np.max(np.abs(plan.sum(axis=0) - self.column.weights)) > MARGINAL_TOL):
            raise ValidationError("plan marginals do not match the coupled measures")
        object.__setattr__(self, "plan", plan)

    @classmethod
    def independent(cls, row: EmpiricalMeasure, column: EmpiricalMeasure) -> "CouplingPlan":
        """The product coupling P x Q."""
        return cls(row, column, np.outer(row.weights, column.weights))

    def cost(self, cost: np.ndarray) -> float:
        return float(np.sum(self.plan * cost))

    def as_measure(self) -> EmpiricalMeasure:
        """The plan as a measure on index pairs (i, j), row-major."""
        i, j = np.meshgrid(np.arange(self.row.size), np.arange(self.column.size), indexing="ij")
        return EmpiricalMeasure(np.column_stack([i.ravel(), j.ravel()]).astype(float),
                                self.plan.ravel() / self.plan.sum())


def _unique_rows(atoms: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    if atoms.ndim == 1:
        return np.unique(atoms, return_inverse=True)
    unique, inverse = np.unique(atoms, axis=0, return_inverse=True)
    return unique, inverse.reshape(-1)


def merge_atoms(measure: EmpiricalMeasure) -> EmpiricalMeasure:
    """Sums the weights of coinciding atoms.
    >>> merge_atoms(EmpiricalMeasure.uniform([2.0, 1.0, 2.0, 2.0])).weights.tolist()
    [0.25, 0.75]
    """
    unique, inverse = _unique_rows(measure.atoms)
    weights = np.bincount(inverse, weights=measure.weights, minlength=len(unique))
    return EmpiricalMeasure(unique, weights)


def pushforward_discrete(
    measure: EmpiricalMeasure,
    transform: Callable[[np.ndarray], np.ndarray]) -> EmpiricalMeasure:
    """Image measure T*P of a finite measure, with coinciding images merged.
    >>> P = EmpiricalMeasure.uniform([-1.0, 1.0, 2.0])
    >>> Q = pushforward_discrete(P, np.abs)
    >>> Q.atoms.tolist(), [round(w, 12) for w in Q.weights]
    ([1.0, 2.0], [0.666666666667, 0.333333333333])
    """
    return merge_atoms(measure.map(transform))


def product_measure(first: EmpiricalMeasure, second: EmpiricalMeasure) -> EmpiricalMeasure:
    """Product P1 x P2 with atoms (x, y) stacked row-major.
    >>> P = product_measure(EmpiricalMeasure.uniform([0.0, 1.0]), EmpiricalMeasure.uniform([5.0]))
    >>> P.atoms.tolist()
    [[0.0, 5.0], [1.0, 5.0]]
    """
    x = first.atoms.reshape(first.size, -1)
    y = second.atoms.reshape(second.size, -1)
    atoms = np.concatenate([np.repeat(x, second.size, axis=0),
                            np.tile(y, (first.size, 1))], axis=1)
    return EmpiricalMeasure(atoms, np.outer(first.weights, second.weights).ravel())


def on_common_support(
    first: EmpiricalMeasure,
    second: EmpiricalMeasure) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Aligns two finite measures on the union of their supports.
    Returns:
        support, weights of `first`, weights of `second`
    >>> support, p, q = on_common_support(EmpiricalMeasure.uniform([0.0, 1.0]),
    ...                                   EmpiricalMeasure.uniform([1.0, 2.0]))
    >>> support.tolist(), p.tolist(), q.tolist()
    ([0.0, 1.0, 2.0], [0.5, 0.5, 0.0], [0.0, 0.5, 0.5])
    """
    if first.atoms.shape[1:] != second.atoms.shape[1:]:
        raise ValidationError("measures have atoms of different shapes")
    support, inverse = _unique_rows(np.concatenate([first.atoms, second.atoms]))
    p = np.bincount(inverse[:first.size], weights=first.weights, minlength=len(support))
    q = np.bincount(inverse[first.size:], weights=second.weights, minlength=len(support))
    return support, p, q


def random_discrete_measure(
    rng: np.random.Generator,
    support: np.ndarray,
    sparsity: Optional[float] = None) -> EmpiricalMeasure:
    """Measure on `support` with Dirichlet(1, ..., 1) weights; with `sparsity`,
    each atom is dropped with that probability (one atom is always kept)."""
    weights = rng.dirichlet(np.ones(len(support)))
    if sparsity is not None:
        keep = rng.random(len(support)) >= sparsity
        keep[rng.integers(len(support))] = True
        weights = np.where(keep, weights, 0.0)
    return EmpiricalMeasure.from_weights(support, weights)


if __name__ == "__main__":
    import doctest
    doctest.testmod()
