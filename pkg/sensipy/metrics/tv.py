"""Total variation distance of finite measures.
The convention is d_TV(P, Q) = sup_A |P(A) - Q(A)|, which lies in [0, 1]
and equals the smallest mass inf_pi pi(x != y) over couplings. Under the
L1 normalization the same quantity is doubled."""
import itertools
from typing import Tuple, Union

import numpy as np

from sensipy.exceptions import ValidationError
from sensipy.metrics.measure import CouplingPlan, EmpiricalMeasure, on_common_support

WeightsLike = Union[EmpiricalMeasure, np.ndarray]


def _weights(P: WeightsLike, Q: WeightsLike) -> Tuple[np.ndarray, np.ndarray]:
    if isinstance(P, EmpiricalMeasure) and isinstance(Q, EmpiricalMeasure):
        if P.atoms.shape != Q.atoms.shape or not np.array_equal(P.atoms, Q.atoms):
            raise ValidationError(
                "measures are not indexed on a shared support; align them with on_common_support")
        return P.weights, Q.weights
    if isinstance(P, EmpiricalMeasure) or isinstance(Q, EmpiricalMeasure):
        raise ValidationError("pass two measures or two weight vectors")
    p = np.asarray(P, dtype=float).reshape(-1)
    q = np.asarray(Q, dtype=float).reshape(-1)
    if p.size != q.size:
        raise ValidationError(f"supports differ in size: {p.size} and {q.size}")
    return p, q


def tv_discrete(P: WeightsLike, Q: WeightsLike) -> float:
    """Total variation distance (1/2) sum_i |p_i - q_i| on a shared support.
    Args:
        P: measure, or weight vector indexed by the shared support
        Q: measure, or weight vector on the same support
    Raises:
        ValidationError: the supports differ
    Examples:
    >>> round(tv_discrete(np.array([0.5, 0.5]), np.array([0.8, 0.2])), 12)
    0.3
    >>> tv_discrete(np.array([1.0, 0.0]), np.array([0.0, 1.0]))
    1.0
    """
    p, q = _weights(P, Q)
    return float(0.5 * np.sum(np.abs(p - q)))


def tv_measures(P: EmpiricalMeasure, Q: EmpiricalMeasure) -> float:
    """Total variation distance of two finite measures on arbitrary supports."""
    _, p, q = on_common_support(P, Q)
    return tv_discrete(p, q)


def tv_by_events(p: np.ndarray, q: np.ndarray) -> float:
    """sup_A |P(A) - Q(A)| by enumerating all events of a small support.
    >>> round(tv_by_events(np.array([0.5, 0.5]), np.array([0.8, 0.2])), 12)
    0.3
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.size > 16:
        raise ValidationError("event enumeration is limited to 16 atoms")
    best = 0.0
    for mask in itertools.product((False, True), repeat=p.size):
        event = np.array(mask, dtype=bool)
        best = max(best, abs(float(p[event].sum() - q[event].sum())))
    return best


def tv_coupling_mass(plan: CouplingPlan) -> float:
    """Mass pi(x != y) that a coupling puts off the diagonal {x = y}."""
    row = plan.row.atoms.reshape(plan.row.size, -1)
    column = plan.column.atoms.reshape(plan.column.size, -1)
    equal = np.all(row[:, np.newaxis, :] == column[np.newaxis, :, :], axis=2)
    return float(max(1.0 - np.sum(plan.plan[equal]), 0.0))


def maximal_coupling(P: EmpiricalMeasure, Q: EmpiricalMeasure) -> CouplingPlan:
    """Coupling that keeps min(p, q) on the diagonal and spreads the rest
    independently; it attains pi(x != y) = d_TV(P, Q).
    >>> P = EmpiricalMeasure([0.0, 1.0], [0.5, 0.5])
    >>> Q = EmpiricalMeasure([0.0, 1.0], [0.8, 0.2])
    >>> round(tv_coupling_mass(maximal_coupling(P, Q)), 12)
    0.3
    """
    support, p, q = on_common_support(P, Q)
    common = np.minimum(p, q)
    plan = np.diag(common)
    distance = 1.0 - common.sum()
    if distance > 0:
        plan = plan + np.outer(p - common, q - common) / distance
    row = EmpiricalMeasure(support, p)
    column = EmpiricalMeasure(support, q)
    return CouplingPlan(row, column, plan)


if __name__ == "__main__":
    import doctest
    doctest.testmod()
