"""Coupled draws of the random data (log a, f) under P and Q.

P and Q share their standard-normal innovations, so every pair
(x_i, y_i) is a draw from one explicit coupling of the two laws.
"""
import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from sensipy.exceptions import ValidationError
from sensipy.experiments.config import StudyConfig
from sensipy.grf.matern import (GaussianFieldModel, build_cov_matrix, cholesky_factor,
                                fields_from_innovations)
from sensipy.grid import Field, Grid
from sensipy.metrics.gaussian import GaussianSpec, gelbrich_gaussian
from sensipy.parallel import innovations, parallel_map
from sensipy.pde.norms import h1_seminorm, l2_norm, linf_norm
from sensipy.pde.solver import DiffusionSolver
from sensipy.pde.stability import lipschitz_constants
from sensipy.stats import log_mean_exp

logger = logging.getLogger(__name__)

COEFFICIENT_TAG = 0
SOURCE_TAG = 1

# bounded-support mode gives up below this acceptance rate
MIN_ACCEPTANCE = 0.01
BLOCK = 256


@dataclass(frozen=True, eq=False)
class DataSamples:
    """Draws of the data with a size of (n, N) each.

    Attributes:
        log_a: log of the diffusion coefficient
        f: source term
    """
    log_a: np.ndarray
    f: np.ndarray

    @property
    def size(self) -> int:
        return self.log_a.shape[0]

    def radii(self, grid: Grid) -> Tuple[np.ndarray, np.ndarray]:
        """Per-sample ||log a||_inf and ||f||_L2."""
        return (np.atleast_1d(linf_norm(self.log_a, grid)),
                np.atleast_1d(l2_norm(self.f, grid)))


@dataclass(frozen=True, eq=False)
class CoupledSamples:
    """Pairs drawn from a coupling of P and Q.

    Attributes:
        first: draws under P
        second: draws under Q
        rejection_rate: share of rejected pairs in bounded-support mode
    """
    first: DataSamples
    second: DataSamples
    rejection_rate: float = 0.0


def perturbed_model(config: StudyConfig, grid: Grid) -> Tuple[GaussianFieldModel, GaussianFieldModel]:
    """Models of log a under P and Q."""
    base = config.field.build(grid)
    if config.perturbation.target == "coefficient":
        return base, config.perturbation.apply(base)
    return base, base


def source_models(
    config: StudyConfig,
    grid: Grid) -> Tuple[Optional[GaussianFieldModel], Optional[GaussianFieldModel]]:
    base = config.source.model(grid)
    if base is None:
        if config.perturbation.target == "source" and config.perturbation.family != "none":
            raise ValidationError("perturbing the source needs a gaussian source model")
        return None, None
    if config.perturbation.target == "source":
        return base, config.perturbation.apply(base)
    return base, base


def _factor(model: GaussianFieldModel) -> np.ndarray:
    return cholesky_factor(build_cov_matrix(model, model.grid), model.cov.variance)


def _draw_block(
    config: StudyConfig,
    grid: Grid,
    models,
    factors,
    n: int,
    start: int,
    clip: Optional[float]):
    (coefficient_p, coefficient_q), (source_p, source_q) = models
    xi = innovations(config.seed, n, grid.size, tag=COEFFICIENT_TAG, start=start)
    if clip is not None:
        xi = np.clip(xi, -clip, clip)
    log_a_p = fields_from_innovations(coefficient_p, factors[0], xi)
    log_a_q = fields_from_innovations(coefficient_q, factors[1], xi)
    if source_p is None:
        f = np.tile(config.source.mean(grid).values, (n, 1))
        return log_a_p, log_a_q, f, f
    eta = innovations(config.seed, n, grid.size, tag=SOURCE_TAG, start=start)
    if clip is not None:
        eta = np.clip(eta, -clip, clip)
    return (log_a_p, log_a_q, fields_from_innovations(source_p, factors[2], eta),
            fields_from_innovations(source_q, factors[3], eta))


def draw_coupled(config: StudyConfig, grid: Optional[Grid] = None) -> CoupledSamples:
    """Draws `config.n_samples` coupled pairs of data.
    Without a radius the innovations are plain Gaussian. With a radius r
    they are clipped at +-clip and pairs with ||log a||_inf > r or
    ||f||_L2 > r on either side are rejected; sample indices keep counting
    past rejected pairs, so the result depends only on the configuration.
    Raises:
        ValidationError: the acceptance rate falls below 1%
        DecompositionError: a covariance matrix cannot be factorized
    """
    grid = config.grid.build() if grid is None else grid
    coefficients = perturbed_model(config, grid)
    sources = source_models(config, grid)
    factors = [_factor(m) for m in coefficients]
    if sources[0] is not None:
        factors += [_factor(m) for m in sources]
    models = (coefficients, sources)
    n = config.n_samples

    if config.radius is None:
        log_a_p, log_a_q, f_p, f_q = _draw_block(config, grid, models, factors, n, 0, None)
        return CoupledSamples(DataSamples(log_a_p, f_p), DataSamples(log_a_q, f_q))

    kept = []
    accepted = np.zeros(0, dtype=int)
    drawn = 0
    while accepted.size < n:
        if drawn > n / MIN_ACCEPTANCE:
            raise ValidationError(
                f"bounded-support mode accepted {accepted.size} of {drawn} pairs at radius "
                f"{config.radius}; increase the radius or decrease sigma")
        block = _draw_block(config, grid, models, factors, BLOCK, drawn, config.clip)
        inside = ((linf_norm(block[0], grid) <= config.radius)
                  & (linf_norm(block[1], grid) <= config.radius)
                  & (l2_norm(block[2], grid) <= config.radius)
                  & (l2_norm(block[3], grid) <= config.radius))
        kept.append([b[inside] for b in block])
        accepted = np.concatenate([accepted, drawn + np.flatnonzero(inside)])
        drawn += BLOCK
    log_a_p, log_a_q, f_p, f_q = [np.concatenate([k[i] for k in kept])[:n] for i in range(4)]
    rejection_rate = 1.0 - n / float(accepted[n - 1] + 1)
    logger.info("bounded-support sampling rejected %.2f%% of the pairs", 100 * rejection_rate)
    return CoupledSamples(DataSamples(log_a_p, f_p), DataSamples(log_a_q, f_q), rejection_rate)


def solve_batch(
    log_a: np.ndarray,
    f: np.ndarray,
    grid: Grid,
    threads: Optional[int] = None) -> np.ndarray:
    """Solutions for a batch of data, one row per sample, in index order."""
    solver = DiffusionSolver()

    def run(i: int) -> np.ndarray:
        return solver(Field(grid, np.exp(log_a[i])), Field(grid, f[i])).values

    return np.stack(parallel_map(run, range(log_a.shape[0]), threads))


def data_distances(first: DataSamples, second: DataSamples, grid: Grid) -> np.ndarray:
    """Per-pair log-metric distance ||log a1 - log a2||_inf + ||f1 - f2||_L2."""
    return (np.atleast_1d(linf_norm(first.log_a - second.log_a, grid))
            + np.atleast_1d(l2_norm(first.f - second.f, grid)))


def solution_distances(u: np.ndarray, v: np.ndarray, grid: Grid) -> np.ndarray:
    return np.atleast_1d(h1_seminorm(u - v, grid))


def stability_constant(grid: Grid, c: float, *samples: DataSamples) -> Tuple[float, float, float]:
    """Lipschitz constant of the solution operator on the smallest data ball
    containing all `samples`, for the log data metric.
    Returns:
        (constant, r_a, r_f) with constant = max(c r_f e^{3 r_a}, c e^{r_a})
    """
    r_a = max(float(np.max(s.radii(grid)[0])) for s in samples)
    r_f = max(float(np.max(s.radii(grid)[1])) for s in samples)
    constants = lipschitz_constants(r_a, r_f, c)
    return max(constants.c_hat_a, constants.c_f), r_a, r_f


def integrability_constant(*samples: DataSamples, grid: Grid, p: float) -> float:
    """max over the sample sets of the mean of (1 + ||f||_L2)^{2p} exp(6p ||log a||_inf),
    evaluated in log-sum-exp form.
    Returns:
        the constant, inf when it exceeds the float range
    """
    logs = []
    for s in samples:
        r_a, r_f = s.radii(grid)
        logs.append(float(log_mean_exp(2 * p * np.log1p(r_f) + 6 * p * r_a)))
    log_value = max(logs)
    if log_value > np.log(np.finfo(float).max):
        logger.warning("integrability constant exceeds the float range, log value %.3g", log_value)
        return np.inf
    return float(np.exp(log_value))


def gaussian_input_distance(first: GaussianFieldModel, second: GaussianFieldModel) -> float:
    """Exact 2-Wasserstein distance of two Gaussian field models in the
    trapezoid L2 geometry of their grid."""
    grid = first.grid
    root = np.sqrt(grid.weights)
    specs = [GaussianSpec(m.mean.values * root,
                          root[:, np.newaxis] * build_cov_matrix(m, grid) * root[np.newaxis, :])
             for m in (first, second)]
    return gelbrich_gaussian(*specs)


if __name__ == "__main__":
    import doctest
    doctest.testmod()
