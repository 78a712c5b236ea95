import numpy as np
import pytest
from hypothesis import given, seed, settings
from hypothesis import strategies as st

from sensipy.exceptions import DecompositionError, ValidationError
from sensipy.grf import (GaussianFieldModel, MaternParams, borell_tis_tail_check,
                         build_cov_matrix, cholesky_factor, dudley_entropy_integral,
                         exp_moment_bound, exp_moment_estimate, kl_decompose, kl_from_model,
                         matern_cov, sample_coupled_truncated, sample_field,
                         sample_truncated, sample_values)
from sensipy.grid import Field, Grid


@pytest.fixture
def grid():
    return Grid(dim=1, n=31)


@pytest.fixture
def model(grid):
    return GaussianFieldModel.centered(grid, MaternParams(sigma=1.0, rho=0.3, k=1))


def test_matern_closed_forms():
    d = np.array([0.0, 0.2, 1.0])
    assert np.allclose(matern_cov(MaternParams(1.0, 0.5, 0), d), np.exp(-d / 0.5))
    scaled = np.sqrt(3) * d / 0.5
    assert np.allclose(matern_cov(MaternParams(2.0, 0.5, 1), d), 4 * (1 + scaled) * np.exp(-scaled))


@seed(3)
@settings(max_examples=25, deadline=None)
@given(st.floats(0.1, 3), st.floats(0.05, 2), st.integers(0, 4))
def test_matern_is_a_decreasing_covariance(sigma, rho, k):
    params = MaternParams(sigma, rho, k)
    values = matern_cov(params, np.linspace(0, 3, 40))
    assert values[0] == pytest.approx(sigma ** 2)
    assert np.all(np.diff(values) <= 1e-12)
    assert np.all(values >= 0)


@pytest.mark.parametrize("kwargs", [dict(sigma=0.0), dict(rho=-1.0), dict(k=1.5)])
def test_matern_rejects_bad_parameters(kwargs):
    with pytest.raises(ValidationError):
        MaternParams(**kwargs)


def test_cov_matrix_is_symmetric_with_exact_diagonal():
    cov = build_cov_matrix(MaternParams(1.5, 0.2, 2), Grid(dim=2, n=5))
    assert cov.shape == (25, 25)
    assert np.array_equal(cov, cov.T)
    assert np.all(np.diag(cov) == 2.25)


def test_cholesky_reproduces_the_covariance(model, grid):
    cov = build_cov_matrix(model, grid)
    factor = cholesky_factor(cov)
    assert np.allclose(factor @ factor.T, cov, atol=1e-7)
    assert np.allclose(factor, np.tril(factor))


def test_cholesky_fails_on_an_indefinite_matrix():
    with pytest.raises(DecompositionError):
        cholesky_factor(-np.eye(3))


def test_samples_are_reproducible(model, grid):
    first = sample_values(model, 5, 4)
    assert np.array_equal(first, sample_values(model, 5, 4))
    assert np.array_equal(first[2:], sample_values(model, 5, 2, start=2))
    lognormal = GaussianFieldModel(model.mean, model.cov, "exponential")
    assert np.allclose(sample_values(lognormal, 5, 4), np.exp(first))


def test_sample_field_checks_the_grid(model):
    with pytest.raises(ValidationError):
        sample_field(model, Grid(n=8), rng=0)


def test_sample_covariance_matches(model, grid):
    samples = sample_values(model, 0, 4000)
    empirical = np.cov(samples, rowvar=False)
    assert np.max(np.abs(empirical - build_cov_matrix(model, grid))) < 0.15


def test_kl_basis_is_orthonormal(model):
    basis = kl_from_model(model)
    assert basis.rank == model.grid.size
    assert np.allclose(basis.gram(), np.eye(basis.rank), atol=1e-8)
    assert np.all(np.diff(basis.eigenvalues) <= 0)
    assert np.all(basis.eigenvalues >= 0)


def test_kl_reconstructs_the_covariance(model, grid):
    basis = kl_from_model(model)
    assert np.allclose(basis.reconstruct(), build_cov_matrix(model, grid), atol=1e-8)
    # the trace of the weighted operator is sigma^2 times the volume
    assert basis.trace == pytest.approx(grid.h * grid.size)


def test_kl_tail_sums(model):
    basis = kl_from_model(model)
    tails = [basis.tail_sum(K) for K in range(basis.rank + 1)]
    assert tails[0] == pytest.approx(basis.trace)
    assert tails[-1] == 0.0
    assert np.all(np.diff(tails) <= 1e-15)
    with pytest.raises(ValidationError):
        basis.tail_sum(basis.rank + 1)


def test_kl_rejects_asymmetric_input():
    with pytest.raises(ValidationError):
        kl_decompose(np.array([[1.0, 0.5], [0.0, 1.0]]), np.ones(2))
    with pytest.raises(ValidationError):
        kl_decompose(np.eye(2), np.array([1.0, 0.0]))


def test_truncated_draws_share_innovations(model, grid):
    basis = kl_from_model(model)
    mean = Field.zeros(grid)
    low = sample_truncated(basis, mean, 3, rng=9, n=2)
    high = sample_truncated(basis, mean, 4, rng=9, n=2)
    for a, b in zip(low, high):
        difference = b.values - a.values
        # the two draws differ by the fourth mode only
        coefficient = basis.vectors[:, 3] @ (grid.weights * difference)
        assert np.allclose(difference, coefficient * basis.vectors[:, 3], atol=1e-10)


def test_truncation_error_matches_the_tail_sum(model, grid):
    basis = kl_from_model(model)
    full, truncated = sample_coupled_truncated(basis, np.zeros(grid.size), 4, rng=1, n=2000)
    squared = np.sum(grid.weights * (full - truncated) ** 2, axis=1)
    assert np.mean(squared) == pytest.approx(basis.tail_sum(4), rel=0.1)
    full, truncated = sample_coupled_truncated(basis, np.zeros(grid.size), basis.rank, 1, 5)
    assert np.allclose(full, truncated)


@pytest.mark.parametrize("transform", ["identity", "exponential"])
def test_full_rank_truncation_matches_sample_field(grid, transform):
    params = MaternParams(sigma=0.8, rho=0.2, k=1)
    mean = Field(grid, np.sin(np.pi * grid.axis))
    model = GaussianFieldModel(mean, params, transform)
    basis = kl_from_model(model)
    truncated = sample_truncated(basis, mean, basis.rank, rng=11, n=8, transform=transform)
    full = sample_field(model, grid, rng=11, n=8, factor=basis.factor())
    for a, b in zip(truncated, full):
        assert np.allclose(a.values, b.values, rtol=0, atol=1e-10)
    cov = build_cov_matrix(model, grid)
    assert np.allclose(basis.factor() @ basis.factor().T, cov, atol=1e-8)
    with pytest.raises(ValidationError):
        sample_field(model, grid, rng=11, factor=np.eye(3))


def test_dudley_integral_scales_and_orders():
    base = dudley_entropy_integral(MaternParams(1.0, 0.5, 0))
    assert 0 < base < np.inf
    assert dudley_entropy_integral(MaternParams(1.0, 0.25, 0)) > base
    assert dudley_entropy_integral(MaternParams(1.0, 0.5, 0), domain=Grid(dim=2, n=4)) > base
    with pytest.raises(ValidationError):
        dudley_entropy_integral(k_max=0, rho_min=0.0, sigma_max=1.0)


@pytest.mark.parametrize("dim", [1, 2])
def test_dudley_integral_does_not_depend_on_the_step_count(dim):
    params = MaternParams(1.0, 0.5, 0)
    reference = dudley_entropy_integral(params, dim=dim, terms=20_000)
    assert dudley_entropy_integral(params, dim=dim, terms=10) == pytest.approx(reference, rel=1e-4)


def test_exp_moment_estimate_below_its_bound(model, grid):
    estimate = exp_moment_estimate(model, grid, 1.0, rng=2, n=500)
    assert 1.0 < estimate.value < np.inf
    sups = np.max(np.abs(sample_values(model, 2, 500)), axis=1)
    bound = exp_moment_bound(1.0, float(np.mean(sups)), model.cov.variance)
    assert estimate.value <= bound


def test_borell_tis_tail(model, grid):
    for r in (0.5, 1.0, 2.0):
        check = borell_tis_tail_check(model, grid, rng=4, n=1000, r=r)
        assert check.passes()
    with pytest.raises(ValidationError):
        borell_tis_tail_check(model, grid, rng=4, n=10, r=-1.0)
