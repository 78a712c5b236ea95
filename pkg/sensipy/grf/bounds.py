"""Numerical evaluation of the sup-norm bounds of Gaussian fields:
Dudley's entropy integral for Matern classes, exponential moments of
the sup-norm and the Borell-TIS concentration inequality."""
import logging
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from scipy.integrate import quad
from scipy.special import logsumexp

from sensipy.exceptions import ValidationError
from sensipy.grid import Grid
from sensipy.grf.matern import GaussianFieldModel, MaternParams, sample_values
from sensipy.stats import log_mean_exp, mean_and_stderr

logger = logging.getLogger(__name__)


def _rho_hat(rho_min: float, k_max: int) -> float:
    return rho_min / np.sqrt(2 * k_max + 1)


def covering_number(
    r: float,
    dim: int,
    diameter: float,
    rho_min: float,
    k_max: int) -> float:
    """Upper estimate of the covering number of a domain of the given
    Euclidean diameter under the normalized metric
    d(x, y) = sqrt(1 - exp(-|x - y| / rho_hat)), rho_hat = rho_min / sqrt(2 k_max + 1).

    Examples:
    >>> covering_number(0.999, 1, 1.0, 1.0, 0)
    1.0
    """
    if r >= 1:
        return 1.0
    radius = _rho_hat(rho_min, k_max) * -np.log1p(-r * r)
    if radius <= 0:
        return np.inf
    return max(1.0, float(np.ceil(np.sqrt(dim) * diameter / (2 * radius)))) ** dim


def dudley_entropy_integral(
    params: Optional[MaternParams] = None,
    domain: Union[Grid, float] = 1.0,
    k_max: Optional[int] = None,
    rho_min: Optional[float] = None,
    sigma_max: Optional[float] = None,
    dim: int = 1,
    terms: int = 10_000) -> float:
    """Evaluates sqrt(2) sigma_max int_0^1 sqrt(log N(r)) dr for the Matern class
    with sigma <= sigma_max, rho >= rho_min and k <= k_max, where N(r) is the
    covering estimate of `covering_number` on the box (0, L)^dim.
    The universal constant of Dudley's bound is not applied, so the expected
    sup-norm is bounded by that constant times the returned value.

    The integrand is a step function of r. Its first `terms` steps are summed
    exactly and the steps below the last edge are integrated by adaptive
    quadrature of the same integrand sqrt(log N(r)).

    Args:
        params: Matern parameters supplying the defaults of the class bounds
        domain: a Grid, or the edge length L of the box
        k_max: largest smoothness index of the class
        rho_min: smallest correlation length of the class
        sigma_max: largest standard deviation of the class
        dim: dimension of the box when `domain` is a length
        terms: number of steps summed exactly
    Returns:
        the entropy integral

    Examples:
    >>> one = dudley_entropy_integral(MaternParams(1.0, 1.0, 0))
    >>> two = dudley_entropy_integral(MaternParams(2.0, 1.0, 0))
    >>> bool(0 < one < np.inf and np.isclose(two, 2 * one))
    True
    """
    if params is not None:
        k_max = params.k if k_max is None else k_max
        rho_min = params.rho if rho_min is None else rho_min
        sigma_max = params.sigma if sigma_max is None else sigma_max
    if k_max is None or rho_min is None or sigma_max is None:
        raise ValidationError("k_max, rho_min and sigma_max are required")
    if not rho_min > 0 or not sigma_max > 0 or k_max < 0:
        raise ValidationError("the Matern class needs rho_min > 0, sigma_max > 0, k_max >= 0")
    if isinstance(domain, Grid):
        dim, length = domain.dim, domain.length
    else:
        length = float(domain)
    if not length > 0:
        raise ValidationError(f"domain length must be positive, got {length}")
    diameter = length * np.sqrt(dim)

    # ceil(g(r)) = j  <=>  r_j <= r < r_{j-1}, g(r) = A / log(1 / (1 - r^2))
    scale = np.sqrt(dim) * diameter / (2 * _rho_hat(rho_min, k_max))
    j = np.arange(1, terms + 1, dtype=float)
    edges = np.sqrt(-np.expm1(-scale / j))
    steps = np.sqrt(dim * np.log(j[1:])) * (edges[:-1] - edges[1:])
    total = float(np.sum(steps))

    def integrand(r: float) -> float:
        return np.sqrt(np.log(covering_number(r, dim, diameter, rho_min, k_max)))

    remainder, error = quad(integrand, 0.0, edges[-1], limit=500)
    logger.debug("dudley integral: step sum %.6g, remainder %.6g (+/- %.1e)",
                 total, remainder, error)
    return float(np.sqrt(2) * sigma_max * (total + remainder))


@dataclass(frozen=True)
class MomentEstimate:
    """Monte Carlo estimate of E[exp(beta ||g||_inf)].

    Attributes:
        log_value: log of the estimate, always finite
        value: the estimate, inf when it exceeds the float range
        stderr: standard error of `value`
    """
    log_value: float
    value: float
    stderr: float


def sup_norms(
    model: GaussianFieldModel,
    rng: Union[int, np.random.Generator],
    n: int,
    centered: bool = True) -> np.ndarray:
    """Max-abs nodal values of `n` draws of the Gaussian field."""
    if centered:
        model = GaussianFieldModel.centered(model.grid, model.cov)
    elif model.transform != "identity":
        model = GaussianFieldModel(model.mean, model.cov)
    return np.max(np.abs(sample_values(model, rng, n)), axis=1)


def exp_moment_estimate(
    model: GaussianFieldModel,
    grid: Grid,
    beta: float,
    rng: Union[int, np.random.Generator],
    n: int) -> MomentEstimate:
    """Estimates E[exp(beta ||g||_inf)] over centered draws of the model.
    The mean is evaluated in log-sum-exp form.
    Examples:
    >>> model = GaussianFieldModel.centered(Grid(n=8), MaternParams(sigma=1e-12))
    >>> round(exp_moment_estimate(model, Grid(n=8), 1.0, rng=0, n=10).value, 9)
    1.0
    """
    if not beta > 0:
        raise ValidationError(f"beta must be positive, got {beta}")
    if model.grid != grid:
        raise ValidationError("model mean is not defined on the sampling grid")
    exponents = beta * sup_norms(model, rng, n)
    log_value = float(log_mean_exp(exponents))
    shift = float(np.max(exponents))
    _, scaled_stderr = mean_and_stderr(np.exp(exponents - shift))
    if log_value > np.log(np.finfo(float).max):
        logger.warning("exponential moment exceeds the float range, log value %.3g", log_value)
        return MomentEstimate(log_value, np.inf, np.inf)
    return MomentEstimate(log_value, float(np.exp(log_value)),
                          float(np.exp(shift) * scaled_stderr))


def exp_moment_bound(
    beta: float,
    mean_sup: float,
    sigma2: float,
    r_m: float = 0.0) -> float:
    """Upper bound on E[exp(beta ||g||_inf)] obtained by summing the
    Borell-TIS tail over unit shells above the mean sup-norm:
    exp(beta (r_m + s)) (1 + 2 sum_n exp(beta (n + 1) - n^2 / (2 sigma2))).
    Args:
        beta: exponent
        mean_sup: expected sup-norm s of the centered field
        sigma2: largest pointwise variance
        r_m: sup-norm of the mean field
    Examples:
    >>> bound = exp_moment_bound(1.0, 0.0, 1e-6)
    >>> bool(np.isclose(bound, 1 + 2 * np.e))
    True
    """
    if not beta > 0 or not sigma2 > 0:
        raise ValidationError("beta and sigma2 must be positive")
    last = int(np.ceil(beta * sigma2 + 40 * np.sqrt(sigma2) + 10))
    shells = np.arange(last + 1, dtype=float)
    log_series = logsumexp(beta * (shells + 1) - shells ** 2 / (2 * sigma2))
    log_bound = beta * (r_m + mean_sup) + np.logaddexp(0.0, np.log(2.0) + log_series)
    if log_bound > np.log(np.finfo(float).max):
        return np.inf
    return float(np.exp(log_bound))


@dataclass(frozen=True)
class TailCheck:
    """Empirical Borell-TIS tail against its bound.

    Attributes:
        fraction: share of draws with | ||g|| - mean ||g|| | >= r
        bound: 2 exp(-r^2 / (2 sigma^2))
        stderr: binomial standard error of `fraction`
    """
    fraction: float
    bound: float
    stderr: float

    def passes(self, slack: float = 3.0) -> bool:
        return self.fraction <= self.bound + slack * self.stderr


def borell_tis_tail_check(
    model: GaussianFieldModel,
    grid: Grid,
    rng: Union[int, np.random.Generator],
    n: int,
    r: float) -> TailCheck:
    """Compares the empirical deviation of the sup-norm from its sample
    mean with the Borell-TIS bound 2 exp(-r^2 / (2 sigma^2)).
    The model is centered before sampling.
    Examples:
    >>> model = GaussianFieldModel.centered(Grid(n=8), MaternParams())
    >>> check = borell_tis_tail_check(model, Grid(n=8), rng=0, n=200, r=0.0)
    >>> check.bound, check.passes()
    (2.0, True)
    """
    if r < 0:
        raise ValidationError(f"threshold must be nonnegative, got {r}")
    if model.grid != grid:
        raise ValidationError("model mean is not defined on the sampling grid")
    sups = sup_norms(model, rng, n)
    exceed = np.abs(sups - sups.mean()) >= r
    fraction = float(np.mean(exceed))
    stderr = float(np.sqrt(fraction * (1 - fraction) / n))
    bound = float(2 * np.exp(-r ** 2 / (2 * model.cov.variance)))
    if fraction > bound:
        logger.warning("empirical tail %.4g above the Borell-TIS bound %.4g", fraction, bound)
    return TailCheck(fraction, bound, stderr)


if __name__ == "__main__":
    import doctest
    doctest.testmod()
