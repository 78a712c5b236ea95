import json

import numpy as np
import pytest

from sensipy.exceptions import ConfigError, ValidationError
from sensipy.experiments import (Check, StudyConfig, StudyReport, draw_coupled, load_config,
                                 parse_config, run_local_lipschitz_study,
                                 run_perturbation_study, run_risk_sensitivity_study, run_study,
                                 run_truncation_study, run_tv_study)
from sensipy.grf import kl_from_model
from sensipy.pde import l2_norm, poincare_constant, solution_operator_constant

SMALL = {"grid": {"n": 15}, "n_samples": 100, "seed": 3}


def small(**overrides):
    return parse_config({**SMALL, **overrides})


def statuses(report):
    return {check.name: check.status for check in report.checks}


def test_defaults_round_trip():
    config = parse_config({})
    assert config.study == "perturbation"
    assert config.grid.n == 63
    assert parse_config(config.to_dict()).to_dict() == config.to_dict()
    assert config.with_seed(5).seed == 5
    assert config.with_seed(None) is config


def test_unknown_key_names_the_field():
    with pytest.raises(ConfigError) as error:
        parse_config({"grid": {"size": 3}})
    assert error.value.field == "grid.size"
    assert "valid keys are dim, n, length" in str(error.value)


def test_alpha_message():
    with pytest.raises(ConfigError) as error:
        parse_config({"risk": {"alpha": 1.0}})
    assert str(error.value) == "risk.alpha: alpha must lie in [0,1), got 1.0"


def test_unknown_family_lists_the_valid_ones():
    with pytest.raises(ConfigError) as error:
        parse_config({"perturbation": {"family": "warp"}})
    assert error.value.field == "perturbation.family"
    assert "none, mean_shift, sigma_scale, rho_scale, truncation" in str(error.value)


@pytest.mark.parametrize("data, field", [
    ({"n_samples": 10}, "n_samples"),
    ({"p": 0.5}, "p"),
    ({"grid": {"dim": 3}}, "grid.dim"),
    ({"field": {"sigma": 0}}, "field.sigma"),
    ({"study": "truncation", "perturbation": {"family": "mean_shift"}}, "perturbation.family"),
    ({"perturbation": {"family": "truncation"}}, "perturbation.family"),
    ({"perturbation": {"family": "sigma_scale", "amount": 0}}, "perturbation.amount"),
    ({"support": 5}, "support"),
])
def test_schema_violations(data, field):
    with pytest.raises(ConfigError) as error:
        parse_config(data)
    assert error.value.field == field


def test_malformed_json_reports_the_line(tmp_path):
    path = tmp_path / "config.json"
    path.write_text('{\n  "p": 2,\n  "seed": \n}\n')
    with pytest.raises(ConfigError) as error:
        load_config(path)
    assert error.value.line == 4
    path.write_text(json.dumps({"seed": 9, "grid": {"n": 7}}))
    assert load_config(path).seed == 9


def test_checks_and_reports():
    assert Check("x", 1.0, 1.0, direction="equal").passed
    assert not Check("x", 0.5, 1.0, direction="lower").passed
    assert Check("x", 0.5, 1.0, stderr=0.2, direction="lower").passed
    with pytest.raises(ValidationError):
        Check("x", 0.0, 0.0, direction="sideways")
    report = StudyReport("tv", {}, "0")
    report.add("d", 1.0, "exact", level=2)
    report.check("c", 2.0, 1.0, level=2)
    assert not report.passed
    assert [c.name for c in report.failures] == ["c"]
    assert report.quantity("d", level=2).value == 1.0
    assert report.for_level(2).quantities == report.quantities
    with pytest.raises(KeyError):
        report.quantity("d")
    with pytest.raises(ValidationError):
        report.add("e", 1.0, "guess")


def test_zero_perturbation_passes():
    report = run_perturbation_study(small())
    assert report.passed
    for name in ("input_distance", "output_distance", "qoi_distance", "gaussian_input_distance"):
        assert report.quantity(name).value == 0.0
    assert len(report.rows) == 100


def test_mean_shift_checks():
    report = run_perturbation_study(
        small(perturbation={"family": "mean_shift", "amount": 0.3}))
    result = statuses(report)
    assert result["mean_shift_input"] == "pass"
    assert result["mean_shift_gelbrich"] == "pass"
    assert result["stability"] == "pass"
    assert result["qoi_lipschitz"] == "pass"
    assert report.quantity("input_distance").value == pytest.approx(0.3)
    assert 0 < report.quantity("output_distance").value
    assert any("integrability" in note for note in report.notes)


def test_source_mean_shift():
    config = small(source={"kind": "gaussian", "sigma": 0.5},
                   perturbation={"family": "mean_shift", "amount": 0.2, "target": "source"})
    report = run_perturbation_study(config)
    grid = config.grid.build()
    expected = 0.2 * np.sqrt(np.sum(grid.weights))
    assert report.quantity("input_distance").value == pytest.approx(expected)
    assert statuses(report)["mean_shift_gelbrich"] == "pass"
    assert statuses(report)["stability"] == "pass"


def test_source_perturbation_needs_a_gaussian_source():
    with pytest.raises(ValidationError):
        run_perturbation_study(small(perturbation={"family": "mean_shift", "amount": 0.2,
                                                   "target": "source"}))


def test_bounded_support_mode():
    config = small(field={"sigma": 0.5}, radius=1.5, clip=2.0, source={"amplitude": 1.0},
                   perturbation={"family": "sigma_scale", "amount": 1.2})
    samples = draw_coupled(config)
    assert samples.first.size == 100
    grid = config.grid.build()
    assert np.max(np.abs(samples.first.log_a)) <= 1.5
    assert np.max(np.abs(samples.second.log_a)) <= 1.5
    assert 0 <= samples.rejection_rate < 1
    report = run_perturbation_study(config)
    assert statuses(report)["bounded_support"] == "pass"
    assert statuses(report)["stability"] == "pass"
    assert report.quantity("rejection_rate").value == samples.rejection_rate
    again = draw_coupled(config, grid)
    assert np.array_equal(again.second.log_a, samples.second.log_a)


def test_bounded_support_constant_uses_the_configured_radius():
    config = small(field={"sigma": 0.3}, radius=1.0, clip=2.0, source={"amplitude": 1.0},
                   perturbation={"family": "mean_shift", "amount": 0.1})
    grid = config.grid.build()
    report = run_perturbation_study(config)
    expected = solution_operator_constant(1.0, poincare_constant(grid))
    assert report.quantity("bounded_support_constant").value == pytest.approx(expected)
    check = next(c for c in report.checks if c.name == "bounded_support")
    assert check.note == "C_S at radius 1"
    bound = report.quantity("bounded_support_bound").value
    assert bound == pytest.approx(
        expected * report.quantity("input_distance").value * (1 + 10 * grid.h))
    assert statuses(report)["bounded_support"] == "pass"


def test_bounded_support_rejects_a_source_outside_the_radius():
    # the default sine source has an L2 norm of pi^2 / sqrt(2)
    with pytest.raises(ConfigError) as error:
        small(radius=1.5)
    assert error.value.field == "source.amplitude"
    assert "exceeds the radius" in str(error.value)
    assert small(study="truncation", radius=1.5).radius == 1.5


def test_bounded_support_filters_a_gaussian_source():
    config = small(field={"sigma": 0.5}, radius=1.5, clip=2.0,
                   source={"kind": "gaussian", "amplitude": 0.5, "sigma": 0.3})
    samples = draw_coupled(config)
    grid = config.grid.build()
    for data in (samples.first, samples.second):
        assert np.max(l2_norm(data.f, grid)) <= 1.5
        assert np.max(np.abs(data.log_a)) <= 1.5


def test_bounded_support_gives_up_at_a_tiny_radius():
    with pytest.raises(ValidationError, match="increase the radius"):
        draw_coupled(small(radius=1e-3, source={"amplitude": 1e-4}))


def test_truncation_levels():
    base = small(study="truncation", perturbation={"family": "truncation", "levels": [0]})
    rank = kl_from_model(base.field.build(base.grid.build())).rank
    config = small(study="truncation", perturbation={"family": "truncation",
                                                      "levels": [0, 2, 4, rank]})
    report = run_truncation_study(config)
    deterministic = [c for c in report.checks if c.name != "coupled_l2"]
    assert all(c.passed for c in deterministic)
    full = report.for_level(rank)
    assert full.quantity("gaussian_distance", rank).value == 0.0
    assert full.quantity("coupled_l2_distance", rank).value == 0.0
    assert full.quantity("output_distance", rank).value == 0.0
    exact = report.quantity("gaussian_distance", 0).value
    coupled = report.quantity("coupled_l2_distance", 0).value
    assert coupled == pytest.approx(exact, rel=0.2)
    assert len(report.rows) == 4 * 100
    assert {row["level"] for row in full.rows} == {rank}


def test_truncation_level_above_the_rank():
    config = small(study="truncation", perturbation={"family": "truncation", "levels": [99]})
    with pytest.raises(ValidationError):
        run_truncation_study(config)


def test_clipped_truncation_is_deterministic():
    config = small(study="truncation", radius=5.0, clip=1.0,
                   perturbation={"family": "truncation", "levels": [1, 3]})
    report = run_truncation_study(config)
    result = statuses(report)
    assert result["linf_tail"] == "pass"
    assert result["coupled_l2"] == "pass"


def test_risk_study_with_avar():
    report = run_risk_sensitivity_study(
        small(study="risk", perturbation={"family": "mean_shift", "amount": 0.5}))
    result = statuses(report)
    for name in ("direct", "composed", "discrete_avar", "product_coupled"):
        assert result[name] == "pass"
    assert report.quantity("support_norm").value == pytest.approx(np.sqrt(20.0))
    gap = report.quantity("gap").value
    assert gap == pytest.approx(report.quantity("risk_p").value - report.quantity("risk_q").value)


def test_risk_study_with_esssup_is_not_boundable():
    report = run_risk_sensitivity_study(
        small(study="risk", risk={"kind": "esssup"},
              perturbation={"family": "mean_shift", "amount": 0.5}))
    result = statuses(report)
    assert result["direct"] == "not boundable"
    assert result["composed"] == "not boundable"
    assert report.passed
    assert "unbounded support set" in report.checks[0].note


def test_risk_study_with_evar_is_not_boundable():
    report = run_risk_sensitivity_study(
        small(study="risk", risk={"kind": "evar", "alpha": 0.9},
              perturbation={"family": "mean_shift", "amount": 0.5}))
    result = statuses(report)
    assert result["direct"] == "not boundable"
    assert result["composed"] == "not boundable"
    assert report.passed
    assert "L^2" in report.checks[0].note
    assert report.quantity("gap").value > 0


def test_lognormal_check_names_its_prefactor():
    report = run_perturbation_study(
        small(perturbation={"family": "mean_shift", "amount": 0.3}))
    check = next(c for c in report.checks if c.name == "lognormal")
    assert "prefactor is 2c" in check.note
    grid = small().grid.build()
    moment = report.quantity("integrability_constant").value
    lower = 2 * poincare_constant(grid) * moment ** (1 / 4) * report.quantity("input_distance").value
    assert report.quantity("lognormal_bound").value >= lower * (1 - 1e-12)


def test_risk_study_with_a_holder_constant():
    report = run_risk_sensitivity_study(
        small(study="risk", risk={"kind": "expectation"},
              sensitivity={"holder_constant": 1e6, "beta": 1.0, "p": 1.0},
              perturbation={"family": "mean_shift", "amount": 0.5}))
    assert statuses(report)["holder"] == "pass"


def test_tv_study():
    report = run_tv_study(small(study="tv", trials=25))
    assert report.passed
    assert {"contraction", "events", "product_lower", "product_upper", "maximal_coupling",
            "identity", "constant", "quantized_contraction"} <= set(statuses(report))
    assert len(report.rows) == 25


def test_local_lipschitz_study():
    report = run_local_lipschitz_study(
        parse_config({"study": "local_lipschitz", "n_samples": 2000, "seed": 1}))
    assert report.passed
    ratios = [row["ratio"] for row in report.rows]
    assert ratios == sorted(ratios)
    assert [row["shift"] for row in report.rows] == [0.25, 0.5, 1.0, 2.0]


def test_reports_are_reproducible():
    config = small(perturbation={"family": "rho_scale", "amount": 0.8})
    first = run_study(config, threads=1)
    second = run_study(config, threads=3)
    assert first.to_dict() == second.to_dict()
    assert first.rows == second.rows


@pytest.mark.slow
def test_mean_shift_at_full_size():
    config = parse_config({"perturbation": {"family": "mean_shift", "amount": 0.5},
                           "n_samples": 1000})
    report = run_perturbation_study(config)
    assert report.passed
