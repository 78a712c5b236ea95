import logging
from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np
from scipy.optimize import minimize_scalar

from sensipy.exceptions import UnboundedSupportError, ValidationError
from sensipy.metrics.measure import EmpiricalMeasure
from sensipy.stats import log_mean_exp

logger = logging.getLogger(__name__)

# tolerance of the cumulative-weight comparison in the quantile
QUANTILE_TOL = 1e-12
DENSITY_TOL = 1e-10
# search interval of the entropic dual, in units of the sample spread
EVAR_T_MIN = 1e-6
EVAR_T_MAX = 1e6
EVAR_GRID = 121

SamplesLike = Union[EmpiricalMeasure, np.ndarray]


def check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not 0 <= alpha < 1:
        raise ValidationError(f"alpha must lie in [0,1), got {alpha}")
    return alpha


def _prepare(
    samples: SamplesLike,
    weights: Optional[np.ndarray] = None) -> Tuple[np.ndarray, np.ndarray]:
    """Sorted atoms with positive weight and their weights."""
    if isinstance(samples, EmpiricalMeasure):
        measure = samples
    else:
        samples = np.asarray(samples, dtype=float).reshape(-1)
        if samples.size == 0:
            raise ValidationError("samples must not be empty")
        measure = (EmpiricalMeasure.uniform(samples) if weights is None
                   else EmpiricalMeasure.from_weights(samples, weights))
    if not measure.is_scalar:
        raise ValidationError("risk functionals act on scalar samples")
    measure = measure.sorted()
    keep = measure.weights > 0
    return measure.atoms[keep], measure.weights[keep]


def _cumulative(w: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    upper = np.cumsum(w)
    upper[-1] = 1.0
    lower = np.concatenate([[0.0], upper[:-1]])
    return lower, upper


@dataclass(frozen=True, eq=False)
class SpectralDensity:
    """Nonnegative density on [0, 1] with unit integral, either piecewise
    constant ("step", one value per interval) or piecewise linear
    ("linear", one value per knot).

    Examples:
    >>> sigma = SpectralDensity.linear([0.0, 1.0], [0.0, 2.0])
    >>> round(sigma.mass(0.5, 1.0), 12)
    0.75
    >>> SpectralDensity.avar(0.5).values.tolist()
    [0.0, 2.0]
    """
    knots: np.ndarray
    values: np.ndarray
    kind: str = "step"

    def __post_init__(self) -> None:
        knots = np.asarray(self.knots, dtype=float).reshape(-1)
        values = np.asarray(self.values, dtype=float).reshape(-1)
        if self.kind not in ("step", "linear"):
            raise ValidationError(f"density kind must be 'step' or 'linear', got {self.kind!r}")
        if knots.size < 2 or knots[0] != 0 or knots[-1] != 1 or np.any(np.diff(knots) <= 0):
            raise ValidationError("knots must increase strictly from 0 to 1")
        expected = knots.size - 1 if self.kind == "step" else knots.size
        if values.size != expected:
            raise ValidationError(
                f"a {self.kind} density on {knots.size} knots needs {expected} values, "
                f"got {values.size}")
        if np.any(values < 0) or not np.all(np.isfinite(values)):
            raise ValidationError("density values must be finite and nonnegative")
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "values", values)
        total = self.mass(0.0, 1.0)
        if abs(total - 1) > DENSITY_TOL:
            raise ValidationError(f"density must integrate to 1, integral is {total:.15g}")

    @classmethod
    def step(cls, knots, values) -> "SpectralDensity":
        return cls(knots, values, "step")

    @classmethod
    def linear(cls, knots, values) -> "SpectralDensity":
        return cls(knots, values, "linear")

    @classmethod
    def constant(cls) -> "SpectralDensity":
        return cls([0.0, 1.0], [1.0], "step")

    @classmethod
    def avar(cls, alpha: float) -> "SpectralDensity":
        """(1/(1 - alpha)) on [alpha, 1], zero below."""
        alpha = check_alpha(alpha)
        if alpha == 0:
            return cls.constant()
        return cls([0.0, alpha, 1.0], [0.0, 1.0 / (1.0 - alpha)], "step")

    def _segment(self, u: np.ndarray) -> np.ndarray:
        return np.clip(np.searchsorted(self.knots, u, side="right") - 1,
                       0, self.knots.size - 2)

    def __call__(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        i = self._segment(u)
        if self.kind == "step":
            return self.values[i]
        width = np.diff(self.knots)[i]
        slope = (self.values[i + 1] - self.values[i]) / width
        return self.values[i] + slope * (u - self.knots[i])

    def cumulative(self, u: np.ndarray) -> np.ndarray:
        """Integral of the density over [0, u]."""
        u = np.clip(np.asarray(u, dtype=float), 0.0, 1.0)
        width = np.diff(self.knots)
        if self.kind == "step":
            pieces = self.values * width
        else:
            pieces = 0.5 * (self.values[:-1] + self.values[1:]) * width
        at_knots = np.concatenate([[0.0], np.cumsum(pieces)])
        i = self._segment(u)
        offset = u - self.knots[i]
        if self.kind == "step":
            return at_knots[i] + self.values[i] * offset
        slope = (self.values[i + 1] - self.values[i]) / width[i]
        return at_knots[i] + self.values[i] * offset + 0.5 * slope * offset ** 2

    def mass(self, lower, upper):
        """Integral of the density over [lower, upper]."""
        result = self.cumulative(upper) - self.cumulative(lower)
        return float(result) if np.ndim(result) == 0 else result

    def norm(self, q: float) -> float:
        """L^q([0, 1]) norm of the density, q = inf allowed.
        >>> SpectralDensity.avar(0.5).norm(np.inf)
        2.0
        >>> SpectralDensity.constant().norm(3.0)
        1.0
        """
        if not q >= 1:
            raise ValidationError(f"norm order must be at least 1, got {q}")
        width = np.diff(self.knots)
        if np.isinf(q):
            return float(np.max(self.values))
        if self.kind == "step":
            return float(np.sum(width * self.values ** q) ** (1.0 / q))
        total = 0.0
        for w, s0, s1 in zip(width, self.values[:-1], self.values[1:]):
            if s0 == s1:
                total += w * s0 ** q
            else:
                total += w * (s1 ** (q + 1) - s0 ** (q + 1)) / ((q + 1) * (s1 - s0))
        return float(total ** (1.0 / q))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "knots": self.knots.tolist(), "values": self.values.tolist()}


def expectation(samples: SamplesLike, weights: Optional[np.ndarray] = None) -> float:
    x, w = _prepare(samples, weights)
    return float(np.dot(w, x))


def esssup(samples: SamplesLike, weights: Optional[np.ndarray] = None) -> float:
    x, _ = _prepare(samples, weights)
    return float(x[-1])


def var(samples: SamplesLike, alpha: float, weights: Optional[np.ndarray] = None) -> float:
    """Value-at-risk, the left-continuous quantile inf{x : P(X <= x) >= alpha}.
    Args:
        samples: scalar samples or a scalar measure
        alpha: level in [0, 1)
        weights: sample weights, uniform if None
    Examples:
    >>> var([1.0, 2.0, 3.0, 4.0], 0.0)
    1.0
    >>> var([1.0, 2.0, 3.0, 4.0], 0.5)
    2.0
    """
    alpha = check_alpha(alpha)
    x, w = _prepare(samples, weights)
    _, upper = _cumulative(w)
    i = np.searchsorted(upper, alpha - QUANTILE_TOL, side="left")
    return float(x[min(i, x.size - 1)])


def avar(samples: SamplesLike, alpha: float, weights: Optional[np.ndarray] = None) -> float:
    """Average value-at-risk (1/(1 - alpha)) int_alpha^1 F^-1(u) du,
    integrated exactly over the steps of the empirical quantile.
    Examples:
    >>> avar([1.0, 2.0, 3.0, 4.0], 0.5)
    3.5
    >>> avar([1.0, 2.0, 3.0, 4.0], 0.75)
    4.0
    >>> avar([1.0, 2.0, 3.0, 4.0], 0.0)
    2.5
    """
    alpha = check_alpha(alpha)
    x, w = _prepare(samples, weights)
    lower, upper = _cumulative(w)
    length = np.clip(upper - np.maximum(lower, alpha), 0.0, None)
    return float(np.dot(length, x) / (1.0 - alpha))


def avar_dual(samples: SamplesLike, alpha: float, weights: Optional[np.ndarray] = None) -> float:
    """min_q q + E[(X - q)_+] / (1 - alpha), minimized exactly over the atoms.
    >>> avar_dual([1.0, 2.0, 3.0, 4.0], 0.5)
    3.5
    """
    alpha = check_alpha(alpha)
    x, w = _prepare(samples, weights)
    # tail sums over atoms strictly above x_k
    tail_weight = np.concatenate([np.cumsum(w[::-1])[::-1][1:], [0.0]])
    tail_moment = np.concatenate([np.cumsum((w * x)[::-1])[::-1][1:], [0.0]])
    objective = x + (tail_moment - x * tail_weight) / (1.0 - alpha)
    return float(np.min(objective))


def spectral(
    samples: SamplesLike,
    density: SpectralDensity,
    weights: Optional[np.ndarray] = None) -> float:
    """Spectral risk int_0^1 sigma(u) F^-1(u) du, exact on each quantile step.
    Examples:
    >>> spectral([0.0, 1.0], SpectralDensity.linear([0.0, 1.0], [0.0, 2.0]))
    0.75
    >>> spectral([1.0, 2.0, 3.0, 4.0], SpectralDensity.constant())
    2.5
    """
    x, w = _prepare(samples, weights)
    lower, upper = _cumulative(w)
    return float(np.dot(density.mass(lower, upper), x))


def evar(samples: SamplesLike, alpha: float, weights: Optional[np.ndarray] = None) -> float:
    """Entropic value-at-risk inf_{t>0} (1/t)(log(1/(1 - alpha)) + log E[exp(tX)]).
    The samples are centered at their mean and scaled by their spread before
    the search over log t, so translation and scaling act exactly; the
    value is clamped to [E X, max X].
    Examples:
    >>> evar([2.0, 2.0], 0.9)
    2.0
    >>> evar([1.0, 3.0], 0.0)
    2.0
    """
    alpha = check_alpha(alpha)
    x, w = _prepare(samples, weights)
    mean = float(np.dot(w, x))
    top = float(x[-1])
    spread = top - float(x[0])
    if alpha == 0 or spread == 0:
        return float(np.clip(mean, x[0], top))
    y = (x - mean) / spread
    level = -np.log1p(-alpha)

    def objective(s: float) -> float:
        t = np.exp(s)
        return float((level + log_mean_exp(t * y, weights=w)) / t)

    grid = np.linspace(np.log(EVAR_T_MIN), np.log(EVAR_T_MAX), EVAR_GRID)
    values = np.array([objective(s) for s in grid])
    i = int(np.argmin(values))
    bracket = (grid[max(i - 1, 0)], grid[min(i + 1, grid.size - 1)])
    logger.debug("entropic dual bracket t in [%.3g, %.3g]", np.exp(bracket[0]), np.exp(bracket[1]))
    result = minimize_scalar(objective, bounds=bracket, method="bounded",
                             options={"xatol": 1e-10})
    best = min(float(result.fun), float(values[i]))
    if i == 0 or i == grid.size - 1:
        logger.debug("entropic dual minimum at the end of the search interval")
    value = mean + spread * best
    if not mean - 1e-9 * spread <= value <= top + 1e-9 * spread:
        logger.warning("entropic value %.6g outside [mean, max]; clamped", value)
    return float(np.clip(value, mean, top))


def semideviation(
    samples: SamplesLike,
    beta: float = 1.0,
    p: float = 1.0,
    weights: Optional[np.ndarray] = None) -> float:
    """Upper semideviation E[X] + beta (E[((X - E X)_+)^p])^(1/p).
    >>> semideviation([-1.0, 1.0], beta=1.0, p=1.0)
    0.5
    """
    _check_semideviation(beta, p)
    x, w = _prepare(samples, weights)
    mean = float(np.dot(w, x))
    excess = np.clip(x - mean, 0.0, None)
    if np.isinf(p):
        deviation = float(np.max(excess))
    else:
        deviation = float(np.dot(w, excess ** p) ** (1.0 / p))
    return mean + beta * deviation


def semideviation_mixture(
    samples: SamplesLike,
    beta: float = 1.0,
    weights: Optional[np.ndarray] = None) -> float:
    """sup_kappa (1 - beta kappa) E[X] + beta kappa AVaR_{1-kappa}(X).
    The supremum is attained where kappa equals a tail mass of the
    empirical law, so it is taken over those; it equals the p = 1
    semideviation.
    >>> semideviation_mixture([-1.0, 1.0], beta=1.0)
    0.5
    """
    _check_semideviation(beta, 1.0)
    x, w = _prepare(samples, weights)
    mean = float(np.dot(w, x))
    # kappa * AVaR_{1 - kappa} is the tail moment when kappa is a tail mass
    kappa = np.cumsum(w[::-1])[::-1]
    tail = np.cumsum((w * x)[::-1])[::-1]
    candidates = (1.0 - beta * kappa) * mean + beta * tail
    return float(max(np.max(candidates), mean))


def _check_semideviation(beta: float, p: float) -> None:
    if not 0 <= beta <= 1:
        raise ValidationError(f"beta must lie in [0,1], got {beta}")
    if not p >= 1:
        raise ValidationError(f"semideviation order must be at least 1, got {p}")


class RiskFunctional(object):
    """Base class for law-invariant risk functionals on scalar samples.
    """
    kind = "risk"

    def __init__(self):
        pass

    def __call__(self, samples: SamplesLike, weights: Optional[np.ndarray] = None) -> float:
        """Evaluates the functional
        Args:
            samples: scalar samples or a scalar measure
            weights: sample weights, uniform if None
        Returns:
            risk value
        """
        raise NotImplementedError()

    def support_norm(self, q: float) -> float:
        """Bound on sup_Z E[Z^q]^(1/q) over the support set of densities.
        Raises:
            UnboundedSupportError
        """
        raise NotImplementedError()

    def sensitivity_norm(self, q: float) -> float:
        """Norm of the support set in L^q used by the sensitivity bound;
        the support norm unless a subclass knows the set is unbounded in L^q.
        Raises:
            UnboundedSupportError
        """
        return self.support_norm(q)


class Expectation(RiskFunctional):
    kind = "expectation"

    def __call__(self, samples, weights=None):
        return expectation(samples, weights)

    def support_norm(self, q):
        return 1.0


class EssentialSupremum(RiskFunctional):
    kind = "esssup"

    def __call__(self, samples, weights=None):
        return esssup(samples, weights)

    def support_norm(self, q):
        raise UnboundedSupportError(self.kind)


class ValueAtRisk(RiskFunctional):
    """Quantile at level alpha; not coherent, so no support set."""
    kind = "var"

    def __init__(self, alpha: float) -> None:
        super().__init__()
        self.alpha = check_alpha(alpha)

    def __call__(self, samples, weights=None):
        return var(samples, self.alpha, weights)

    def support_norm(self, q):
        raise UnboundedSupportError(self.kind)


class AverageValueAtRisk(RiskFunctional):
    """Densities 0 <= Z <= 1/(1 - alpha) with E Z = 1."""
    kind = "avar"

    def __init__(self, alpha: float) -> None:
        super().__init__()
        self.alpha = check_alpha(alpha)

    def __call__(self, samples, weights=None):
        return avar(samples, self.alpha, weights)

    def dual(self, samples, weights=None) -> float:
        return avar_dual(samples, self.alpha, weights)

    def support_norm(self, q):
        _check_order(q)
        cap = 1.0 / (1.0 - self.alpha)
        if np.isinf(q):
            return cap
        return float(cap ** (1.0 - 1.0 / q))


class EntropicValueAtRisk(RiskFunctional):
    kind = "evar"

    def __init__(self, alpha: float) -> None:
        super().__init__()
        self.alpha = check_alpha(alpha)

    def __call__(self, samples, weights=None):
        return evar(samples, self.alpha, weights)

    def support_norm(self, q):
        _check_order(q)
        if self.alpha == 0:
            return 1.0
        if np.isinf(q):
            raise UnboundedSupportError(f"{self.kind} at q=inf")
        return float(max(1.0, (q - 1.0) / -np.log1p(-self.alpha)))

    def sensitivity_norm(self, q):
        # the densities of bounded entropy reach every L^q norm for q > 1
        _check_order(q)
        if self.alpha == 0 or q == 1:
            return 1.0
        raise UnboundedSupportError(f"{self.kind}(alpha={self.alpha:g}) in L^{q:g}")


class SpectralRisk(RiskFunctional):
    kind = "spectral"

    def __init__(self, density: SpectralDensity) -> None:
        super().__init__()
        self.density = density

    def __call__(self, samples, weights=None):
        return spectral(samples, self.density, weights)

    def support_norm(self, q):
        _check_order(q)
        return self.density.norm(q)


class Semideviation(RiskFunctional):
    """Support set Z = 1 + beta (W - E W) with W >= 0 and ||W||_{p*} <= 1.
    For p = 1 this gives 1 - beta <= Z <= 1 + beta; for p > 1,
    ||Z||_q <= 1 + 2 beta whenever q does not exceed p* = p/(p - 1).
    """
    kind = "semideviation"

    def __init__(self, beta: float = 1.0, p: float = 1.0) -> None:
        super().__init__()
        _check_semideviation(beta, p)
        self.beta = float(beta)
        self.p = float(p)

    def __call__(self, samples, weights=None):
        return semideviation(samples, self.beta, self.p, weights)

    def support_norm(self, q):
        _check_order(q)
        if self.p == 1:
            return 1.0 + self.beta
        conjugate = np.inf if np.isinf(self.p) else self.p / (self.p - 1.0)
        if q > conjugate:
            raise UnboundedSupportError(f"{self.kind} with p={self.p:g} at q={q:g}")
        return 1.0 + 2.0 * self.beta


def _check_order(q: float) -> None:
    if not q >= 1:
        raise ValidationError(f"conjugate order must be at least 1, got {q}")


if __name__ == "__main__":
    import doctest
    doctest.testmod()
