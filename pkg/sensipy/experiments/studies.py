"""End-to-end sensitivity studies.

Each study draws coupled data under P and Q, pushes them through the
diffusion solver and a quantity of interest, and compares observed
distances and risk gaps with the corresponding bounds. Deterministic
inequalities are checked with a round-off tolerance; Monte Carlo ones
with `slack` jackknife standard errors.
"""
import logging
from typing import List, Optional

import numpy as np

from sensipy import __version__
from sensipy.exceptions import UnboundedSupportError, ValidationError
from sensipy.experiments.config import StudyConfig
from sensipy.experiments.report import StudyReport
from sensipy.experiments.sampling import (COEFFICIENT_TAG, SOURCE_TAG, DataSamples,
                                          data_distances, draw_coupled,
                                          gaussian_input_distance, integrability_constant,
                                          perturbed_model, solution_distances, solve_batch,
                                          source_models, stability_constant)
from sensipy.grf.kl import kl_from_model, truncated_values
from sensipy.grf.matern import sample_values
from sensipy.grid import Field, Grid
from sensipy.metrics.gaussian import GaussianSpec, gelbrich_gaussian
from sensipy.metrics.measure import (EmpiricalMeasure, on_common_support, product_measure,
                                     pushforward_discrete, random_discrete_measure)
from sensipy.metrics.tv import maximal_coupling, tv_by_events, tv_coupling_mass, tv_measures
from sensipy.metrics.wasserstein import wasserstein_1d, wasserstein_discrete_exact
from sensipy.parallel import innovations, stream
from sensipy.pde.norms import h1_seminorm, l2_norm, linf_norm
from sensipy.pde.solver import DiffusionSolver
from sensipy.pde.stability import (discrete_poincare_constant, poincare_constant,
                                   solution_operator_constant)
from sensipy.risk.sensitivity import MAX_PRODUCT_ATOMS, product_risk_discrete, sensitivity_bound
from sensipy.risk.spec import evaluate
from sensipy.stats import jackknife_stderr, power_mean

logger = logging.getLogger(__name__)

# relative tolerance of deterministic inequalities
ROUNDOFF = 1e-9
GELBRICH_TOL = 1e-10
DEFAULT_LEVELS = (0, 1, 2, 4, 8, 16, 32)
TV_TAG = 7
TV_SPARSITY = 0.3
TV_LEVELS = (0.5, 1.0, 2.0, 4.0)


def _report(config: StudyConfig, study: str) -> StudyReport:
    return StudyReport(study, config.to_dict(), __version__)


def _tolerance(bound: float) -> float:
    return ROUNDOFF * max(1.0, abs(bound))


def _power_stderr(values: np.ndarray, p: float) -> float:
    return jackknife_stderr(lambda d: power_mean(d, p), values)


class _Pushforward(object):
    """Solutions and QoI values of coupled data."""
    def __init__(self, config: StudyConfig, grid: Grid, threads: Optional[int]) -> None:
        self.config = config
        self.grid = grid
        self.threads = threads
        self.qoi = config.qoi.spec().build(grid)

    def __call__(self, samples: DataSamples):
        u = solve_batch(samples.log_a, samples.f, self.grid, self.threads)
        return u, self.qoi.values(u)

    def lipschitz(self, *solutions: np.ndarray) -> float:
        radius = max(float(np.max(np.atleast_1d(h1_seminorm(u, self.grid)))) for u in solutions)
        return self.qoi.lipschitz(radius)


def _coupled_pushforward(config: StudyConfig, grid: Grid, threads: Optional[int]):
    samples = draw_coupled(config, grid)
    push = _Pushforward(config, grid, threads)
    u, x = push(samples.first)
    v, y = push(samples.second)
    return samples, push, u, v, x, y


def _input_models(config: StudyConfig, grid: Grid):
    if config.perturbation.target == "source":
        return source_models(config, grid)
    return perturbed_model(config, grid)


def run_perturbation_study(config: StudyConfig, threads: Optional[int] = None) -> StudyReport:
    """Compares the output distance of a perturbed data measure with the
    stability bounds of the solution operator.
    With a radius the data have bounded support and the bound is
    C_S(r) d_p(P, Q); without one the lognormal bound
    2 c C^{1/(2p)} d_{2p}(P, Q) with an estimated integrability constant C is used.
    Args:
        config: study configuration
        threads: worker threads of the solves
    Returns:
        report with input, output and QoI distances
    Raises:
        ValidationError: e.g. the bounded-support acceptance rate is too low
    """
    grid = config.grid.build()
    report = _report(config, "perturbation")
    logger.info("perturbation study: %s by %g, %d samples",
                config.perturbation.family, config.perturbation.amount, config.n_samples)
    samples, push, u, v, x, y = _coupled_pushforward(config, grid, threads)
    p = config.p
    d_in = data_distances(samples.first, samples.second, grid)
    d_out = solution_distances(u, v, grid)
    input_distance = power_mean(d_in, p)
    output_distance = power_mean(d_out, p)
    output_stderr = _power_stderr(d_out, p)
    qoi_distance = wasserstein_1d(x, y, p=p)

    report.add("input_distance", input_distance, "upper bound", _power_stderr(d_in, p))
    report.add("output_distance", output_distance, "upper bound", output_stderr)
    report.add("qoi_distance", qoi_distance, "MC estimate", jackknife_stderr(
        lambda a, b: wasserstein_1d(a, b, p=p), x, y))
    report.add("rejection_rate", samples.rejection_rate, "exact")
    if input_distance > 0:
        report.add("ratio", output_distance / input_distance, "MC estimate")

    family = config.perturbation.family
    if config.radius is None:
        models = _input_models(config, grid)
        if models[0] is not None:
            gelbrich = gaussian_input_distance(*models)
            report.add("gaussian_input_distance", gelbrich, "exact")
            if family == "mean_shift":
                shift = abs(config.perturbation.amount) * np.sqrt(np.sum(grid.weights))
                report.check("mean_shift_gelbrich", gelbrich, shift, direction="equal",
                             tolerance=GELBRICH_TOL * max(1.0, shift))
    if family == "mean_shift" and config.perturbation.target == "coefficient":
        shift = abs(config.perturbation.amount)
        report.check("mean_shift_input", input_distance, shift, direction="equal",
                     tolerance=_tolerance(shift))

    constant, _, _ = stability_constant(
        grid, discrete_poincare_constant(grid), samples.first, samples.second)
    report.add("stability_constant", constant, "exact")
    bound = constant * input_distance
    report.check("stability", output_distance, bound, tolerance=_tolerance(bound),
                 note="Lipschitz constant on the smallest data ball holding the samples")
    lipschitz = push.lipschitz(u, v)
    bound = lipschitz * output_distance
    report.check("qoi_lipschitz", qoi_distance, bound, tolerance=_tolerance(bound))

    if config.radius is not None:
        c_s = solution_operator_constant(config.radius, poincare_constant(grid))
        bound = c_s * input_distance * (1 + 10 * grid.h)
        report.add("bounded_support_constant", c_s, "exact")
        report.add("bounded_support_bound", bound, "upper bound")
        report.check("bounded_support", output_distance, bound, stderr=output_stderr,
                     slack=config.slack, note=f"C_S at radius {config.radius:.6g}")
    else:
        moment = integrability_constant(samples.first, samples.second, grid=grid, p=p)
        d_2p = power_mean(d_in, 2 * p)
        bound = 2 * poincare_constant(grid) * moment ** (1 / (2 * p)) * d_2p
        report.add("integrability_constant", moment, "MC estimate")
        report.add("lognormal_bound", bound, "upper bound")
        report.check("lognormal", output_distance, bound, stderr=output_stderr,
                     slack=config.slack,
                     note="bound contains an estimated constant; the prefactor is 2c with "
                     "one power of c from the local constant c(1+r_f)exp(3 r_a)")
        report.notes.append("the lognormal bound uses a Monte Carlo estimate of the "
                            "integrability constant")

    report.rows = [{"sample": i, "qoi_p": float(x[i]), "qoi_q": float(y[i]),
                    "input_distance": float(d_in[i]), "output_distance": float(d_out[i])}
                   for i in range(x.size)]
    logger.info("perturbation study %s", "passed" if report.passed else "failed")
    return report


def _levels(config: StudyConfig, rank: int) -> List[int]:
    if config.perturbation.levels is None:
        return sorted({K for K in DEFAULT_LEVELS if K <= rank} | {rank})
    levels = list(config.perturbation.levels)
    if levels[-1] > rank:
        raise ValidationError(f"truncation level {levels[-1]} exceeds the KL rank {rank}")
    return levels


def run_truncation_study(config: StudyConfig, threads: Optional[int] = None) -> StudyReport:
    """Measures the effect of truncating the KL expansion of log a (or of a
    Gaussian source) after K terms, for every configured level K.
    Per level the report holds the exact Gaussian distance, its coupled
    Monte Carlo estimate, the L-infinity tail bound and the pushforward
    distances; use `StudyReport.for_level` to split it.
    """
    grid = config.grid.build()
    report = _report(config, "truncation")
    target = config.perturbation.target
    coefficient = config.field.build(grid)
    source = config.source.model(grid)
    if target == "source" and source is None:
        raise ValidationError("truncating the source needs a gaussian source model")
    model = coefficient if target == "coefficient" else source
    basis = kl_from_model(model)
    levels = _levels(config, basis.rank)
    n, p = config.n_samples, config.p
    clip = None if config.radius is None else config.clip
    logger.info("truncation study of the %s at %d levels", target, len(levels))

    tag = COEFFICIENT_TAG if target == "coefficient" else SOURCE_TAG
    xi = innovations(config.seed, n, basis.rank, tag=tag)
    if clip is not None:
        xi = np.clip(xi, -clip, clip)
    full = truncated_values(basis, model.mean.values, basis.rank, xi)
    if target == "coefficient":
        other = (sample_values(source, config.seed, n, tag=SOURCE_TAG) if source is not None
                 else np.tile(config.source.mean(grid).values, (n, 1)))
        first = DataSamples(full, other)
    else:
        other = sample_values(coefficient, config.seed, n, tag=COEFFICIENT_TAG)
        first = DataSamples(other, full)
    push = _Pushforward(config, grid, threads)
    u, x = push(first)

    full_spec = GaussianSpec.from_kl(basis.eigenvalues)
    sups = basis.sup_norms()
    moment = clip if clip is not None else np.sqrt(2 / np.pi)
    c = discrete_poincare_constant(grid)
    previous = {}
    for K in levels:
        trunc = truncated_values(basis, model.mean.values, K, xi)
        second = (DataSamples(trunc, first.f) if target == "coefficient"
                  else DataSamples(first.log_a, trunc))
        tail = np.sqrt(basis.tail_sum(K))
        exact = gelbrich_gaussian(full_spec, GaussianSpec.from_kl(basis.eigenvalues, K))
        report.add("gaussian_distance", exact, "exact", level=K)
        report.check("gelbrich_tail_sum", exact, tail, direction="equal",
                     tolerance=GELBRICH_TOL * max(1.0, tail), level=K)

        l2 = np.atleast_1d(l2_norm(full - trunc, grid))
        coupled = power_mean(l2, 2)
        coupled_stderr = _power_stderr(l2, 2)
        report.add("coupled_l2_distance", coupled, "MC estimate", coupled_stderr, level=K)
        report.check("coupled_l2", coupled, tail, stderr=coupled_stderr, slack=config.slack,
                     tolerance=_tolerance(tail),
                     direction="equal" if clip is None else "upper", level=K)

        linf = np.atleast_1d(linf_norm(full - trunc, grid))
        linf_bound = float(moment * np.sum(basis.sigmas[K:] * sups[K:]))
        report.add("linf_distance", float(np.mean(linf)), "MC estimate",
                   _power_stderr(linf, 1), level=K)
        report.add("linf_tail_bound", linf_bound, "upper bound", level=K)
        if clip is None:
            report.check("linf_tail", float(np.mean(linf)), linf_bound,
                         stderr=_power_stderr(linf, 1), slack=config.slack, level=K)
        else:
            report.check("linf_tail", float(np.max(linf)), linf_bound,
                         tolerance=_tolerance(linf_bound), level=K)

        d_in = data_distances(first, second, grid)
        if target == "coefficient":
            input_bound = linf_bound
        else:
            input_bound = float(tail)
        report.add("input_bound", input_bound, "upper bound", level=K)
        report.check("input_distance", float(np.mean(d_in)), input_bound,
                     stderr=_power_stderr(d_in, 1), slack=config.slack,
                     tolerance=_tolerance(input_bound), level=K)

        v, y = push(second)
        d_out = solution_distances(u, v, grid)
        input_distance = power_mean(d_in, p)
        output_distance = power_mean(d_out, p)
        qoi_distance = wasserstein_1d(x, y, p=p)
        report.add("input_distance", input_distance, "upper bound", level=K)
        report.add("output_distance", output_distance, "upper bound",
                   _power_stderr(d_out, p), level=K)
        report.add("qoi_distance", qoi_distance, "MC estimate", level=K)
        constant, _, _ = stability_constant(grid, c, first, second)
        bound = constant * input_distance
        report.add("output_bound", bound, "upper bound", level=K)
        report.check("stability", output_distance, bound, tolerance=_tolerance(bound), level=K)
        bound = push.lipschitz(u, v) * output_distance
        report.check("qoi_lipschitz", qoi_distance, bound, tolerance=_tolerance(bound), level=K)

        for name, value in (("gaussian_distance", exact), ("coupled_l2_distance", coupled)):
            if name in previous:
                report.check(f"{name}_monotone", value, previous[name],
                             tolerance=_tolerance(previous[name]), level=K)
            previous[name] = value
        report.rows += [{"level": K, "sample": i, "qoi_full": float(x[i]),
                         "qoi_truncated": float(y[i]), "input_distance": float(d_in[i]),
                         "output_distance": float(d_out[i])} for i in range(n)]
        logger.debug("level %d: exact %.6g, coupled %.6g", K, exact, coupled)

    if source is not None and target == "coefficient":
        report.notes.append("the gaussian source is shared by the full and truncated data")
    logger.info("truncation study %s", "passed" if report.passed else "failed")
    return report


def run_risk_sensitivity_study(config: StudyConfig, threads: Optional[int] = None) -> StudyReport:
    """Compares the risk gap |rho_P(X) - rho_Q(X)| of the QoI pushforwards
    with sensitivity bounds.
    The direct bound uses the distance of the QoI pushforwards, the
    composed one the data distance times the Lipschitz constants of the
    solution operator and the QoI. A functional whose support set is
    unbounded in the conjugate norm, such as esssup or EVaR with alpha > 0,
    is reported as not boundable. For AVaR a discrete instance on the
    first QoI values is also solved exactly on the product space.
    """
    grid = config.grid.build()
    report = _report(config, "risk")
    spec = config.risk.spec()
    logger.info("risk sensitivity study of %s", spec.label)
    samples, push, u, v, x, y = _coupled_pushforward(config, grid, threads)
    p = config.p

    risk_p = evaluate(spec, x)
    risk_q = evaluate(spec, y)
    gap = risk_p - risk_q
    gap_stderr = jackknife_stderr(lambda a, b: evaluate(spec, a) - evaluate(spec, b), x, y)
    qoi_distance = wasserstein_1d(x, y, p=p)
    d_in = data_distances(samples.first, samples.second, grid)
    input_distance = power_mean(d_in, p)
    report.add("risk_p", risk_p, "MC estimate", jackknife_stderr(lambda a: evaluate(spec, a), x))
    report.add("risk_q", risk_q, "MC estimate", jackknife_stderr(lambda a: evaluate(spec, a), y))
    report.add("gap", gap, "MC estimate", gap_stderr)
    report.add("qoi_distance", qoi_distance, "MC estimate")
    report.add("input_distance", input_distance, "upper bound")

    constant, _, _ = stability_constant(
        grid, discrete_poincare_constant(grid), samples.first, samples.second)
    composed_constant = push.lipschitz(u, v) * constant
    try:
        direct = sensitivity_bound(spec, 1.0, 1.0, p, qoi_distance)
        composed = sensitivity_bound(spec, composed_constant, 1.0, p, input_distance)
    except UnboundedSupportError as error:
        report.check("direct", abs(gap), None, note=str(error))
        report.check("composed", abs(gap), None, note=str(error))
    else:
        report.add("support_norm", direct.support_norm, "exact")
        report.add("direct_bound", direct.bound, "upper bound")
        report.add("composed_bound", composed.bound, "upper bound")
        report.check("direct", abs(gap), direct.bound, tolerance=_tolerance(direct.bound))
        report.check("composed", abs(gap), composed.bound, tolerance=_tolerance(composed.bound))

    if config.sensitivity is not None:
        holder = config.sensitivity
        try:
            bound = sensitivity_bound(spec, holder.holder_constant, holder.beta, holder.p,
                                      power_mean(d_in, holder.p))
        except UnboundedSupportError as error:
            report.check("holder", abs(gap), None, note=str(error))
        else:
            report.add("holder_bound", bound.bound, "upper bound")
            report.check("holder", abs(gap), bound.bound, stderr=gap_stderr, slack=config.slack,
                         note="Hoelder constant taken from the configuration")

    if spec.kind == "avar":
        _discrete_avar(report, spec.alpha, x, y)

    report.rows = [{"sample": i, "qoi_p": float(x[i]), "qoi_q": float(y[i]),
                    "input_distance": float(d_in[i])} for i in range(x.size)]
    logger.info("risk sensitivity study %s", "passed" if report.passed else "failed")
    return report


def _discrete_avar(report: StudyReport, alpha: float, x: np.ndarray, y: np.ndarray) -> None:
    m = min(MAX_PRODUCT_ATOMS, x.size)
    P = EmpiricalMeasure.uniform(x[:m])
    Q = EmpiricalMeasure.uniform(y[:m])
    cost = np.abs(P.atoms[:, np.newaxis] - Q.atoms[np.newaxis, :])
    distance, plan = wasserstein_discrete_exact(P, Q, cost=cost, p=1)
    result = product_risk_discrete(plan, alpha, cost=cost, lipschitz=1.0)
    bound = distance / (1 - alpha)
    report.add("discrete_distance", distance, "exact")
    report.add("discrete_gap", result.gap, "exact")
    report.check("discrete_avar", abs(result.gap), bound, tolerance=_tolerance(bound))
    report.check("product_coupled", result.gap, result.coupled_bound,
                 tolerance=_tolerance(result.coupled_bound))


def run_tv_study(config: StudyConfig, threads: Optional[int] = None) -> StudyReport:
    """Checks the total variation inequalities on random finite instances:
    contraction under maps, the product bounds, the event formula and the
    maximal coupling, each by exhaustive enumeration.
    Instances live on `config.support` atoms per factor. A last family uses
    constant coefficient levels mapped through the solver and the QoI.
    """
    report = _report(config, "tv")
    rng = stream(config.seed, 0, tag=TV_TAG)
    support = np.arange(config.support, dtype=float)
    worst = {"contraction": 0.0, "events": 0.0, "product_lower": 0.0,
             "product_upper": 0.0, "maximal_coupling": 0.0, "identity": 0.0,
             "constant": 0.0}
    for trial in range(config.trials):
        P, Q, P2, Q2 = [random_discrete_measure(rng, support, TV_SPARSITY) for _ in range(4)]
        table = rng.integers(0, config.support, size=config.support).astype(float)
        distance = tv_measures(P, Q)
        pushed = tv_measures(pushforward_discrete(P, lambda a: table[int(a)]),
                             pushforward_discrete(Q, lambda a: table[int(a)]))
        _, p, q = on_common_support(P, Q)
        second = tv_measures(P2, Q2)
        product = tv_measures(product_measure(P, P2), product_measure(Q, Q2))
        worst["contraction"] = max(worst["contraction"], pushed - distance)
        worst["events"] = max(worst["events"], abs(tv_by_events(p, q) - distance))
        worst["product_lower"] = max(worst["product_lower"], max(distance, second) - product)
        worst["product_upper"] = max(worst["product_upper"], product - distance - second)
        worst["maximal_coupling"] = max(
            worst["maximal_coupling"], abs(tv_coupling_mass(maximal_coupling(P, Q)) - distance))
        worst["identity"] = max(worst["identity"], abs(
            tv_measures(pushforward_discrete(P, lambda a: a),
                        pushforward_discrete(Q, lambda a: a)) - distance))
        worst["constant"] = max(worst["constant"], tv_measures(
            pushforward_discrete(P, lambda a: 0.0), pushforward_discrete(Q, lambda a: 0.0)))
        report.rows.append({"trial": trial, "tv": distance, "tv_pushforward": pushed,
                            "tv_second": second, "tv_product": product})

    for name, value in worst.items():
        report.check(name, value, 0.0, tolerance=1e-12,
                     note=f"largest violation over {config.trials} instances")
    _quantized_tv(report, config, rng)
    logger.info("tv study %s", "passed" if report.passed else "failed")
    return report


def _quantized_tv(report: StudyReport, config: StudyConfig, rng: np.random.Generator) -> None:
    grid = config.grid.build()
    qoi = config.qoi.spec().build(grid)
    solver = DiffusionSolver()
    f = config.source.mean(grid)
    levels = np.array(TV_LEVELS[:config.support])
    images = {a: round(qoi(solver(Field.constant(grid, a), f)), 12) for a in levels}
    worst = 0.0
    for _ in range(config.trials):
        P, Q = [random_discrete_measure(rng, levels, TV_SPARSITY) for _ in range(2)]
        pushed = tv_measures(pushforward_discrete(P, lambda a: images[float(a)]),
                             pushforward_discrete(Q, lambda a: images[float(a)]))
        worst = max(worst, pushed - tv_measures(P, Q))
    report.check("quantized_contraction", worst, 0.0, tolerance=1e-12,
                 note="constant coefficient levels pushed through the solver and the QoI")


def run_local_lipschitz_study(config: StudyConfig, threads: Optional[int] = None) -> StudyReport:
    """Pushes N(0, 1) and N(m, 1) through exp for every shift m.
    The exp map is only locally Lipschitz: the output distances obey
    sqrt(e)|1 - e^m| <= d_1 <= d_2 <= C_M |m| with C_M = e e^M / M for
    |m| <= M, and d_2/|m| grows with m. Both laws share their draws.
    """
    report = _report(config, "local_lipschitz")
    xi = innovations(config.seed, config.n_samples, 1)[:, 0]
    base = np.exp(xi)
    M = max(abs(m) for m in config.shifts)
    C_M = np.e * np.exp(M) / M
    ratios = []
    for m in sorted(config.shifts):
        shifted = np.exp(m + xi)
        d1 = wasserstein_1d(base, shifted, p=1)
        d2 = wasserstein_1d(base, shifted, p=2)
        d1_stderr = jackknife_stderr(lambda a, b: wasserstein_1d(a, b, p=1), base, shifted)
        d2_stderr = jackknife_stderr(lambda a, b: wasserstein_1d(a, b, p=2), base, shifted)
        input_distance = wasserstein_1d(xi, xi + m, p=2)
        lower = np.sqrt(np.e) * abs(1 - np.exp(m))
        upper = C_M * abs(m)
        report.add("input_distance", input_distance, "exact")
        report.add("d1", d1, "MC estimate", d1_stderr)
        report.add("d2", d2, "MC estimate", d2_stderr)
        report.check("input_shift", input_distance, abs(m), direction="equal",
                     tolerance=_tolerance(m), note=f"m={m:g}")
        report.check("lower", d1, lower, stderr=d1_stderr, slack=config.slack,
                     direction="lower", note=f"m={m:g}")
        report.check("d1_below_d2", d1, d2, tolerance=_tolerance(d2), note=f"m={m:g}")
        report.check("upper", d2, upper, stderr=d2_stderr, slack=config.slack, note=f"m={m:g}")
        ratios.append(d2 / abs(m))
        report.rows.append({"shift": m, "d1": d1, "d2": d2, "lower": lower,
                            "upper": upper, "ratio": d2 / abs(m)})
    if len(ratios) > 1:
        drops = [ratios[i] - ratios[i + 1] for i in range(len(ratios) - 1)]
        report.check("ratio_grows", max(drops), 0.0, tolerance=_tolerance(max(ratios)),
                     note="d2/|m| is nondecreasing in m")
    logger.info("local Lipschitz study %s", "passed" if report.passed else "failed")
    return report


STUDIES = {
    "perturbation": run_perturbation_study,
    "truncation": run_truncation_study,
    "risk": run_risk_sensitivity_study,
    "tv": run_tv_study,
    "local_lipschitz": run_local_lipschitz_study,
}


def run_study(config: StudyConfig, threads: Optional[int] = None) -> StudyReport:
    """Runs the study named by `config.study`."""
    return STUDIES[config.study](config, threads)


if __name__ == "__main__":
    import doctest
    doctest.testmod()
