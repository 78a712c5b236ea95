"""Sensitivity of risk functionals with respect to the probability measure.

For a functional with support set of densities Z and a QoI X that is
Hoelder continuous with constant C and exponent beta,

    |rho_P(X) - rho_Q(X)| <= C sup_Z ||Z||_{p_beta} d_p(P, Q)^beta,

where p_beta = p/(p - beta). The supremum is replaced by the
coupling-free bound of `support_norm_bound`.
"""
import logging
from dataclasses import dataclass
from typing import Callable, Optional, Tuple, Union

import numpy as np

from sensipy.exceptions import ConvergenceError, ValidationError
from sensipy.metrics.measure import CouplingPlan
from sensipy.risk.functional import RiskFunctional, check_alpha, avar
from sensipy.risk.spec import RiskFactory, RiskSpec

logger = logging.getLogger(__name__)

# largest factor of a product space handled by the greedy construction
MAX_PRODUCT_ATOMS = 64
PRODUCT_TOL = 1e-10

RiskLike = Union[RiskSpec, RiskFunctional]


def _functional(spec: RiskLike) -> RiskFunctional:
    return spec if isinstance(spec, RiskFunctional) else RiskFactory.create(spec)


def support_norm_bound(spec: RiskLike, q: float) -> float:
    """Bound on sup_{Z in support set} E[Z^q]^(1/q).
    Args:
        spec: risk spec or functional
        q: conjugate order, at least 1, inf allowed
    Raises:
        UnboundedSupportError: the functional has no support set bounded in L^q
    Examples:
    >>> support_norm_bound(RiskSpec("expectation"), 3.0)
    1.0
    >>> support_norm_bound(RiskSpec("avar", alpha=0.5), np.inf)
    2.0
    """
    return _functional(spec).sensitivity_norm(q)


def conjugate_order(p: float, beta: float) -> float:
    """p_beta = p/(p - beta), infinite for p = beta.
    >>> conjugate_order(2.0, 1.0)
    2.0
    >>> conjugate_order(1.0, 1.0)
    inf
    """
    if p == beta:
        return np.inf
    return p / (p - beta)


@dataclass(frozen=True)
class SensitivityBound:
    """Bound C * support_norm * distance^beta on a risk gap.

    Attributes:
        spec: risk spec
        holder_constant: Hoelder constant C of the QoI
        beta: Hoelder exponent in (0, 1]
        p: order of the Wasserstein distance
        conjugate: p_beta = p/(p - beta)
        support_norm: bound on the support set in L^{p_beta}
        distance: d_p(P, Q)
        bound: resulting bound on |rho_P(X) - rho_Q(X)|
    """
    spec: RiskSpec
    holder_constant: float
    beta: float
    p: float
    conjugate: float
    support_norm: float
    distance: float
    bound: float

    def holds(self, gap: float, slack: float = 0.0) -> bool:
        return abs(gap) <= self.bound + slack


def sensitivity_bound(
    spec: RiskSpec,
    holder_constant: float,
    beta: float,
    p: float,
    distance: float) -> SensitivityBound:
    """Composes the sensitivity bound of a risk gap.
    Args:
        spec: risk spec
        holder_constant: Hoelder constant of the QoI
        beta: Hoelder exponent in (0, 1]
        p: Wasserstein order, not smaller than beta
        distance: d_p(P, Q)
    Raises:
        ValidationError: invalid exponents or a negative distance
        UnboundedSupportError: e.g. for esssup
    Examples:
    >>> b = sensitivity_bound(RiskSpec("avar", alpha=0.5), 1.0, 1.0, 2.0, 0.5)
    >>> b.conjugate, round(b.support_norm, 12), round(b.bound, 12)
    (2.0, 1.414213562373, 0.707106781187)
    >>> sensitivity_bound(RiskSpec("expectation"), 1.0, 1.0, 1.0, 0.25).bound
    0.25
    """
    if not 0 < beta <= 1:
        raise ValidationError(f"Hoelder exponent must lie in (0,1], got {beta}")
    if not p >= 1:
        raise ValidationError(f"order must be at least 1, got {p}")
    if p < beta:
        raise ValidationError(f"order p={p} must not be smaller than the exponent {beta}")
    if not distance >= 0:
        raise ValidationError(f"distance must be nonnegative, got {distance}")
    if not holder_constant >= 0:
        raise ValidationError(f"Hoelder constant must be nonnegative, got {holder_constant}")
    conjugate = conjugate_order(p, beta)
    norm = support_norm_bound(spec, conjugate)
    bound = holder_constant * norm * distance ** beta
    return SensitivityBound(spec, float(holder_constant), float(beta), float(p),
                            float(conjugate), float(norm), float(distance), float(bound))


def greedy_avar(
    values: np.ndarray,
    masses: np.ndarray,
    alpha: float) -> Tuple[float, np.ndarray]:
    """sup E[Z X] over densities 0 <= Z <= 1/(1 - alpha) with E Z = 1,
    by saturating Z on the largest values first.
    Returns:
        (value, optimal density Z)
    >>> value, Z = greedy_avar(np.array([1.0, 2.0, 3.0, 4.0]), np.full(4, 0.25), 0.5)
    >>> value, Z.tolist()
    (3.5, [0.0, 0.0, 2.0, 2.0])
    """
    alpha = check_alpha(alpha)
    values = np.asarray(values, dtype=float).reshape(-1)
    masses = np.asarray(masses, dtype=float).reshape(-1)
    cap = 1.0 / (1.0 - alpha)
    order = np.argsort(-values, kind="stable")
    density = np.zeros(values.size)
    remaining = 1.0
    for i in order:
        if remaining <= 0:
            break
        if masses[i] <= 0:
            continue
        z = min(cap, remaining / masses[i])
        density[i] = z
        remaining -= z * masses[i]
    return float(np.sum(masses * density * values)), density


@dataclass(frozen=True, eq=False)
class ProductRisk:
    """AVaR evaluated on a coupling of P and Q.

    Attributes:
        coupled: rho_pi(X o p1)
        direct: rho_P(X)
        density: optimal density on the product atoms, row-major
        coupled_second: rho_pi(X o p2)
        direct_second: rho_Q(X)
        cost_risk: rho_pi(d^beta), if a cost was given
        coupled_bound: Lip(X) * rho_pi(d^beta), if also a Lipschitz constant was given
    """
    coupled: float
    direct: float
    density: np.ndarray
    coupled_second: float
    direct_second: float
    cost_risk: Optional[float] = None
    coupled_bound: Optional[float] = None

    @property
    def gap(self) -> float:
        """rho_P(X) - rho_Q(X)."""
        return self.direct - self.direct_second

    def bound_holds(self, tol: float = PRODUCT_TOL) -> Optional[bool]:
        if self.coupled_bound is None:
            return None
        return self.gap <= self.coupled_bound + tol


def product_risk_discrete(
    plan: CouplingPlan,
    alpha: float,
    X: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    cost: Optional[np.ndarray] = None,
    beta: float = 1.0,
    lipschitz: Optional[float] = None) -> ProductRisk:
    """AVaR of X o p1 and X o p2 on the product space of a coupling.
    Both are checked against AVaR under the marginals P and Q.
    Args:
        plan: coupling of P and Q, at most 64 atoms per side
        alpha: AVaR level
        X: function on atoms, the identity on scalar atoms if None
        cost: ground distances d(x_i, y_j) for the coupled inequality
        beta: exponent applied to `cost`
        lipschitz: Hoelder constant of X
    Raises:
        ValidationError: too many atoms
        ConvergenceError: the product value differs from the marginal one
    Examples:
    >>> from sensipy.metrics.measure import EmpiricalMeasure
    >>> P = EmpiricalMeasure.uniform([1.0, 2.0, 3.0, 4.0])
    >>> Q = EmpiricalMeasure.uniform([0.0, 1.0])
    >>> result = product_risk_discrete(CouplingPlan.independent(P, Q), 0.5)
    >>> result.coupled, result.direct, result.coupled_second
    (3.5, 3.5, 1.0)
    """
    if max(plan.row.size, plan.column.size) > MAX_PRODUCT_ATOMS:
        raise ValidationError(
            f"product construction is limited to {MAX_PRODUCT_ATOMS} atoms per side")
    if X is None:
        def X(atoms: np.ndarray) -> np.ndarray:
            return np.asarray(atoms, dtype=float)
    first = np.array([float(X(x)) for x in plan.row.atoms])
    second = np.array([float(X(y)) for y in plan.column.atoms])

    masses = plan.plan
    coupled, density = greedy_avar(np.repeat(first, plan.column.size), masses.ravel(), alpha)
    coupled_second, _ = greedy_avar(np.tile(second, plan.row.size), masses.ravel(), alpha)
    direct = avar(first, alpha, weights=plan.row.weights)
    direct_second = avar(second, alpha, weights=plan.column.weights)
    for a, b, side in ((coupled, direct, "first"), (coupled_second, direct_second, "second")):
        if abs(a - b) > PRODUCT_TOL * max(1.0, abs(b)):
            raise ConvergenceError(
                f"product-space value {a:.15g} differs from the {side} marginal value {b:.15g}")

    cost_risk = coupled_bound = None
    if cost is not None:
        cost = np.asarray(cost, dtype=float)
        if cost.shape != masses.shape:
            raise ValidationError(f"cost must have a size of {masses.shape}, got {cost.shape}")
        cost_risk, _ = greedy_avar((cost ** beta).ravel(), masses.ravel(), alpha)
        if lipschitz is not None:
            coupled_bound = float(lipschitz) * cost_risk
    logger.debug("product avar %.6g against marginal %.6g", coupled, direct)
    return ProductRisk(coupled, direct, density.reshape(masses.shape), coupled_second,
                       direct_second, cost_risk, coupled_bound)


if __name__ == "__main__":
    import doctest
    doctest.testmod()
