import json

import numpy as np
import pytest

from sensipy.exceptions import ValidationError
from sensipy.experiments import StudyReport
from sensipy.grf import GaussianFieldModel, MaternParams, kl_from_model, sample_field
from sensipy.grid import Grid
from sensipy.io import (CSVFormat, ReaderFactory, Table, WriterFactory, read, read_fields,
                        read_samples, write, write_config, write_fields, write_kl,
                        write_report, write_table)
from sensipy.io.format import format_value, parse_value, to_json


def test_csv_keeps_floats_exactly(tmp_path):
    values = np.random.default_rng(4).standard_normal(50)
    path = tmp_path / "samples.csv"
    write_table(path, [{"value": float(v)} for v in values])
    assert np.array_equal(read_samples(path), values)


def test_table_validation():
    with pytest.raises(ValidationError):
        Table(["a", "b"], [[1]])
    with pytest.raises(ValidationError):
        Table.from_records([])
    with pytest.raises(ValidationError, match="columns are a"):
        Table(["a"], [[1]]).column("b")


def test_cells():
    assert format_value(np.float64(1 / 3)) == repr(1 / 3)
    assert format_value(np.int64(7)) == "7"
    assert format_value(np.bool_(False)) == "false"
    assert parse_value(format_value(1e-300)) == 1e-300
    assert to_json([np.nan, -np.inf]) == ["nan", "-inf"]


def test_factories_reject_unknown_extensions():
    with pytest.raises(ValidationError, match=".txt"):
        ReaderFactory.create("samples.txt")
    with pytest.raises(ValidationError):
        WriterFactory.create("report.exr")
    assert ReaderFactory.create("A.CSV") is CSVFormat.read


def test_json_is_sorted_and_stable(tmp_path):
    path = tmp_path / "data.json"
    write(path, {"b": np.float32(0.5), "a": np.arange(3)})
    first = path.read_bytes()
    assert list(json.loads(first)) == ["a", "b"]
    write(str(path), {"a": [0, 1, 2], "b": 0.5})
    assert path.read_bytes() == first
    assert read(path) == {"a": [0, 1, 2], "b": 0.5}


def test_read_samples_errors(tmp_path):
    path = tmp_path / "samples.csv"
    path.write_text("")
    with pytest.raises(ValidationError, match="empty"):
        read_samples(path)
    path.write_text("value\n")
    with pytest.raises(ValidationError, match="no samples"):
        read_samples(path)
    path.write_text("value\n1.0\nabc\n")
    with pytest.raises(ValidationError, match="not numeric"):
        read_samples(path)
    path.write_text("value\n1.0\ninf\n")
    with pytest.raises(ValidationError, match="finite"):
        read_samples(path)
    path.write_text("x,y\n1,2\n")
    with pytest.raises(ValidationError, match="no column"):
        read_samples(path)
    path.write_text("qoi\n1.5\n2.5\n")
    assert read_samples(path).tolist() == [1.5, 2.5]
    json_path = tmp_path / "samples.json"
    json_path.write_text("[1, 2]")
    with pytest.raises(ValidationError, match="not a table"):
        read_samples(json_path)
    with pytest.raises(OSError):
        read_samples(tmp_path / "missing.csv")


def test_fields_round_trip(tmp_path):
    grid = Grid(2, 4)
    model = GaussianFieldModel.centered(grid, MaternParams(sigma=1.0, rho=0.5, k=1))
    fields = sample_field(model, grid, 0, 3)
    path = tmp_path / "fields.csv"
    write_fields(path, fields)
    header = path.read_text().splitlines()[0].split(",")
    assert header[:2] == ["sample", "node_0"]
    assert len(header) == 1 + grid.size
    back = read_fields(path, grid)
    assert all(np.array_equal(a.values, b.values) for a, b in zip(fields, back))
    with pytest.raises(ValidationError):
        read_fields(path, Grid(2, 5))
    with pytest.raises(ValidationError):
        write_fields(path, [])


def test_kl_columns(tmp_path):
    grid = Grid(1, 9)
    basis = kl_from_model(GaussianFieldModel.centered(grid, MaternParams(1.0, 0.3, 1)))
    path = tmp_path / "kl.csv"
    write_kl(path, basis)
    table = read(path)
    assert table.header == ["k", "eigenvalue", "sigma", "tail_sum", "sup_norm"]
    assert table.column("k").tolist() == list(range(1, basis.rank + 1))
    assert np.allclose(table.column("sigma") ** 2, table.column("eigenvalue"))
    assert table.column("tail_sum")[-1] == 0.0
    assert np.all(np.diff(table.column("tail_sum")) <= 0)


def test_report_files(tmp_path):
    report = StudyReport("tv", {"seed": 1}, "0.1.0")
    report.add("d", 0.25, "exact")
    report.check("c", 0.25, 0.5)
    out = tmp_path / "out"
    path = write_report(out, report)
    assert path == out / "report.json"
    assert not (out / "samples.csv").exists()
    data = read(path)
    assert data["passed"] is True
    assert data["checks"][0]["status"] == "pass"
    report.rows = [{"trial": 0, "tv": 0.5}, {"trial": 1, "tv": 0.0}]
    write_report(out, report)
    assert (out / "samples.csv").read_text() == "trial,tv\n0,0.5\n1,0.0\n"
    assert read(write_config(out, {"seed": 1})) == {"seed": 1}
