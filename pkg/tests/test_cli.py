import json

import numpy as np
import pytest

from sensipy import cli
from sensipy.cli import EXIT_ERROR, EXIT_OK, EXIT_VIOLATION, main
from sensipy.experiments import StudyReport
from sensipy.io import read, write_table

SMALL = {"grid": {"n": 15}, "n_samples": 100, "seed": 2}


@pytest.fixture
def config_file(tmp_path):
    def make(**overrides):
        path = tmp_path / "config.json"
        path.write_text(json.dumps({**SMALL, **overrides}))
        return path
    return make


@pytest.fixture
def samples(tmp_path):
    def make(name, values):
        path = tmp_path / name
        write_table(path, [{"value": float(v)} for v in values])
        return path
    return make


def test_distance_of_identical_files(samples, capsys):
    values = np.random.default_rng(0).standard_normal(30)
    first = samples("a.csv", values)
    second = samples("b.csv", values[::-1])
    assert main(["distance", str(first), str(second)]) == EXIT_OK
    assert capsys.readouterr().out.strip() == "0.0"


def test_distance_of_a_shift(samples, capsys):
    values = np.arange(10, dtype=float)
    first = samples("a.csv", values)
    second = samples("b.csv", values + 0.5)
    assert main(["distance", str(first), str(second), "--p", "1"]) == EXIT_OK
    assert float(capsys.readouterr().out) == pytest.approx(0.5)


def test_study_writes_its_outputs(tmp_path, config_file):
    out = tmp_path / "out"
    assert main(["study", "--config", str(config_file()), "--out", str(out)]) == EXIT_OK
    report = read(out / "report.json")
    assert report["passed"] is True
    assert report["study"] == "perturbation"
    assert read(out / "config.json")["seed"] == 2
    assert (out / "samples.csv").exists()


def test_study_reports_are_byte_identical(tmp_path, config_file):
    path = config_file(perturbation={"family": "mean_shift", "amount": 0.2})
    for name in ("one", "two"):
        assert main(["study", "--config", str(path), "--out", str(tmp_path / name),
                     "--threads", "2" if name == "two" else "1"]) == EXIT_OK
    for name in ("report.json", "samples.csv", "config.json"):
        assert (tmp_path / "one" / name).read_bytes() == (tmp_path / "two" / name).read_bytes()


def test_seed_flag_overrides_the_config(tmp_path, config_file):
    out = tmp_path / "out"
    assert main(["study", "--config", str(config_file()), "--out", str(out),
                 "--seed", "11"]) == EXIT_OK
    assert read(out / "config.json")["seed"] == 11


def test_violations_exit_with_two(tmp_path, config_file, monkeypatch, capsys):
    def failing(config, threads):
        report = StudyReport(config.study, config.to_dict(), "0")
        report.check("stability", 2.0, 1.0)
        return report
    monkeypatch.setattr(cli, "run_study", failing)
    code = main(["study", "--config", str(config_file()), "--out", str(tmp_path / "out")])
    assert code == EXIT_VIOLATION
    assert "violation: stability" in capsys.readouterr().err
    assert read(tmp_path / "out" / "report.json")["passed"] is False


def test_esssup_comparison_is_an_error(tmp_path, config_file, samples, capsys):
    path = config_file(risk={"kind": "esssup"})
    first = samples("a.csv", [0.0, 1.0, 2.0])
    second = samples("b.csv", [0.5, 1.0, 2.0])
    code = main(["risk", str(first), "--compare", str(second), "--config", str(path)])
    assert code == EXIT_ERROR
    assert "unbounded support set" in capsys.readouterr().err


def test_risk_writes_a_record(tmp_path, config_file, samples, capsys):
    path = config_file(risk={"kind": "avar", "alpha": 0.5})
    first = samples("a.csv", [1.0, 2.0, 3.0, 4.0])
    second = samples("b.csv", [1.0, 2.0, 3.0, 5.0])
    out = tmp_path / "out"
    assert main(["risk", str(first), "--compare", str(second), "--config", str(path),
                 "--out", str(out)]) == EXIT_OK
    assert capsys.readouterr().out.startswith("avar(alpha=0.5) gap")
    table = read(out / "risk.csv")
    assert table.header == ["spec", "value", "dual", "support_norm", "gap", "distance", "bound"]
    assert table.column("value").tolist() == [3.5]
    assert table.column("gap").tolist() == [-0.5]
    assert table.column("bound")[0] >= 0.5


def test_bad_config(tmp_path, config_file, capsys):
    path = config_file(grid={"dim": 5})
    assert main(["kl", "--config", str(path), "--out", str(tmp_path)]) == EXIT_ERROR
    assert "grid.dim" in capsys.readouterr().err


def test_missing_input_file(tmp_path, capsys):
    assert main(["distance", str(tmp_path / "a.csv"), str(tmp_path / "b.csv")]) == EXIT_ERROR
    assert capsys.readouterr().err.startswith("error:")


@pytest.mark.parametrize("argv", [[], ["study", "--bogus"], ["transport"],
                                  ["study", "--threads", "many"]])
def test_usage_errors(argv, capsys):
    assert main(argv) == EXIT_ERROR
    assert "error:" in capsys.readouterr().err


def test_field_sample_kl_and_solve(tmp_path, config_file):
    path = str(config_file())
    out = tmp_path / "out"
    assert main(["field-sample", "--config", path, "--out", str(out), "-n", "4",
                 "--lognormal"]) == EXIT_OK
    fields = read(out / "fields.csv")
    assert len(fields.rows) == 4
    assert all(value > 0 for row in fields.rows for value in row[1:])
    assert main(["kl", "--config", path, "--out", str(out)]) == EXIT_OK
    assert read(out / "kl.csv").header[0] == "k"
    assert main(["solve", "--config", path, "--out", str(out)]) == EXIT_OK
    solution = read(out / "solution.csv")
    assert solution.header == ["x", "u"]
    assert len(solution.rows) == 15
