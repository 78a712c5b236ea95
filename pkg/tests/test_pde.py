import numpy as np
import pytest
from hypothesis import given, seed, settings
from hypothesis import strategies as st

from sensipy.exceptions import ValidationError
from sensipy.grid import Field, Grid
from sensipy.pde import (DiffusionSolver, H1Distance, L2Distance, PointEvaluation, QoiSpec,
                         SubdomainMean, assemble, data_distance, difference_bound,
                         discrete_poincare_constant, empirical_lipschitz_ratio, h1_seminorm,
                         inner_product, l2_norm, linf_norm, lipschitz_constants,
                         poincare_constant, qoi_eval, solution_operator_constant, solve,
                         stability_bound)


def manufactured(n):
    """-((1 + x) u')' = f for u = sin(pi x)."""
    grid = Grid(dim=1, n=n)
    a = Field.from_function(grid, lambda x: 1 + x)
    f = Field.from_function(grid, lambda x: -np.pi * np.cos(np.pi * x)
                            + (1 + x) * np.pi ** 2 * np.sin(np.pi * x))
    u = solve(a, f, grid)
    return float(np.max(np.abs(u.values - np.sin(np.pi * grid.axis))))


def random_data(grid, rng, scale=0.5):
    a = Field(grid, np.exp(scale * rng.standard_normal(grid.size)))
    f = Field(grid, rng.standard_normal(grid.size))
    return a, f


def test_manufactured_solution_converges():
    coarse, fine = manufactured(63), manufactured(127)
    assert fine <= 1e-3
    assert coarse / fine > 3


def test_two_dimensional_solvers_agree():
    grid = Grid(dim=2, n=31)
    exact = Field.from_function(grid, lambda x, y: np.sin(np.pi * x) * np.sin(np.pi * y))
    f = exact * (2 * np.pi ** 2)
    a = Field.constant(grid, 1.0)
    cg = DiffusionSolver("cg")(a, f)
    direct = DiffusionSolver("direct")(a, f)
    assert np.allclose(cg.values, direct.values, rtol=1e-6, atol=1e-6)
    assert linf_norm(direct - exact) < 5e-3


def test_banded_and_direct_agree_in_one_dimension():
    grid = Grid(dim=1, n=40)
    a, f = random_data(grid, np.random.default_rng(0))
    banded = solve(a, f, method="banded")
    assert np.allclose(banded.values, solve(a, f, method="direct").values, atol=1e-10)
    assert np.allclose(banded.values, solve(a, f, method="cg").values, atol=1e-6)


def test_assembled_matrix_is_symmetric_positive():
    grid = Grid(dim=2, n=6)
    a, _ = random_data(grid, np.random.default_rng(1))
    matrix = assemble(a).toarray()
    assert np.allclose(matrix, matrix.T)
    assert np.min(np.linalg.eigvalsh(matrix)) > 0


def test_solver_rejects_bad_data():
    grid = Grid(dim=1, n=8)
    with pytest.raises(ValidationError):
        solve(Field.constant(grid, -1.0), Field.zeros(grid))
    with pytest.raises(ValidationError):
        solve(Field.constant(grid, 1.0), Field.zeros(Grid(dim=1, n=9)))
    with pytest.raises(ValidationError):
        DiffusionSolver("banded")(Field.constant(Grid(dim=2, n=4), 1.0),
                                  Field.zeros(Grid(dim=2, n=4)))
    with pytest.raises(ValidationError):
        DiffusionSolver("multigrid")


def test_norms_of_batches():
    grid = Grid(dim=1, n=255)
    u = Field.from_function(grid, lambda x: np.sin(np.pi * x))
    batch = np.stack([u.values, 2 * u.values])
    assert np.allclose(l2_norm(batch, grid), [l2_norm(u), 2 * l2_norm(u)])
    assert np.allclose(h1_seminorm(batch, grid), [h1_seminorm(u), 2 * h1_seminorm(u)])
    assert linf_norm(u) == pytest.approx(1.0, abs=1e-4)
    assert inner_product(u, u) == pytest.approx(l2_norm(u) ** 2)
    with pytest.raises(ValidationError):
        l2_norm(u.values)


@seed(5)
@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2 ** 16))
def test_discrete_poincare_inequality(index):
    grid = Grid(dim=1, n=31)
    values = np.random.default_rng(index).standard_normal(grid.size)
    assert l2_norm(values, grid) <= discrete_poincare_constant(grid) * h1_seminorm(values, grid) + 1e-12


def test_poincare_constants():
    grid = Grid(dim=2, n=15, length=2.0)
    assert poincare_constant(grid) == pytest.approx(2.0 / (np.pi * np.sqrt(2)))
    assert discrete_poincare_constant(grid) > poincare_constant(grid)


@pytest.mark.parametrize("index", range(5))
def test_energy_estimates(index):
    grid = Grid(dim=1, n=63)
    rng = np.random.default_rng(index)
    a1, f1 = random_data(grid, rng)
    a2, f2 = random_data(grid, rng)
    u1, u2 = solve(a1, f1), solve(a2, f2)
    assert h1_seminorm(u1) <= 1.01 * stability_bound(a1, f1)
    assert h1_seminorm(u2 - u1) <= 1.01 * difference_bound((a1, f1), (a2, f2))


def test_lipschitz_constants():
    consts = lipschitz_constants(0.5, 2.0, c=0.3)
    assert consts.c_a == pytest.approx(0.3 * 2.0 * np.e)
    assert consts.c_f == pytest.approx(0.3 * np.exp(0.5))
    assert consts.c_hat_a == pytest.approx(0.3 * 2.0 * np.exp(1.5))
    assert solution_operator_constant(1.0, 0.5, "linear") == pytest.approx(np.exp(2.0))
    with pytest.raises(ValidationError):
        solution_operator_constant(1.0, metric="sup")
    with pytest.raises(ValidationError):
        lipschitz_constants(-1.0, 0.0)


def test_empirical_lipschitz_ratio_stays_below_the_constant():
    grid = Grid(dim=1, n=63)
    rng = np.random.default_rng(7)
    pairs = []
    for _ in range(6):
        first = random_data(grid, rng, scale=0.3)
        a, f = first
        second = (a.map(lambda v: v * np.exp(0.1 * rng.standard_normal(v.size))),
                  f + Field(grid, 0.1 * rng.standard_normal(grid.size)))
        pairs.append((first, second))
    pairs.append((pairs[0][0], pairs[0][0]))
    report = empirical_lipschitz_ratio(pairs, grid)
    assert report.passes
    assert report.skipped == 1
    assert len(report.rows) == 6
    assert data_distance(pairs[0][0], pairs[0][1]) > 0


def test_point_evaluation():
    grid = Grid(dim=1, n=7)
    qoi = PointEvaluation(grid, 0.25)
    assert qoi(Field.from_function(grid, lambda x: x)) == 0.25
    assert qoi.lipschitz(1.0) == pytest.approx(np.sqrt(0.25 * 0.75))
    with pytest.raises(ValidationError):
        PointEvaluation(grid, 0.3)
    with pytest.raises(ValidationError):
        PointEvaluation(Grid(dim=2, n=7), (0.5, 0.5))


def test_qoi_spec():
    grid = Grid(dim=2, n=7)
    u = Field.constant(grid, 2.0)
    assert qoi_eval(QoiSpec("subdomain_mean", region=((0.0, 0.5), (0.5, 1.0))), u) \
        == pytest.approx(2.0)
    assert qoi_eval(QoiSpec("l2_dist"), u) == pytest.approx(4.0 * grid.h ** 2 * grid.size)
    with pytest.raises(ValidationError):
        QoiSpec("point_eval")
    with pytest.raises(ValidationError):
        QoiSpec("maximum")
    with pytest.raises(ValidationError):
        SubdomainMean(grid, ((0.0, 0.5),))


@pytest.mark.parametrize("kind", ["point_eval", "subdomain_mean", "l2_dist", "h1_dist"])
def test_qoi_is_lipschitz_on_balls(kind):
    grid = Grid(dim=1, n=31)
    rng = np.random.default_rng(11)
    reference = Field(grid, rng.standard_normal(grid.size))
    if kind == "point_eval":
        qoi = PointEvaluation(grid, grid.axis[10])
    elif kind == "subdomain_mean":
        qoi = SubdomainMean(grid, ((0.2, 0.6),))
    elif kind == "l2_dist":
        qoi = L2Distance(grid, reference)
    else:
        qoi = H1Distance(grid, reference)
    for _ in range(20):
        u = Field(grid, rng.standard_normal(grid.size))
        v = Field(grid, rng.standard_normal(grid.size))
        radius = max(h1_seminorm(u), h1_seminorm(v))
        assert abs(qoi(u) - qoi(v)) <= qoi.lipschitz(radius) * h1_seminorm(u - v) + 1e-9
    batch = rng.standard_normal((3, grid.size))
    assert np.allclose(qoi.values(batch), [qoi(Field(grid, row)) for row in batch])
