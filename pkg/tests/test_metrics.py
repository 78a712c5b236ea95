import numpy as np
import pytest
from hypothesis import given, seed, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from sensipy.exceptions import ValidationError
from sensipy.metrics import (CouplingPlan, EmpiricalMeasure, GaussianSpec, coupling_upper_bound,
                             gelbrich_gaussian, ground_cost, maximal_coupling, merge_atoms,
                             on_common_support, product_measure, pushforward_discrete,
                             random_discrete_measure, tv_by_events, tv_coupling_mass,
                             tv_discrete, tv_measures, wasserstein_1d,
                             wasserstein_discrete_exact)

samples = arrays(float, st.integers(1, 12), elements=st.floats(-10, 10))


def test_wasserstein_1d_examples():
    assert wasserstein_1d([0.0, 1.0], [0.0, 1.0]) == 0.0
    assert wasserstein_1d([0.0, 1.0], [1.0, 2.0], p=3) == pytest.approx(1.0)
    assert wasserstein_1d([0.0, 4.0], [1.0, 2.0], p=np.inf) == 2.0
    assert wasserstein_1d([0.0, 1.0], [0.0], p=1, p_weights=[0.75, 0.25]) == 0.25
    with pytest.raises(ValidationError):
        wasserstein_1d([0.0], [1.0], p=0.5)
    with pytest.raises(ValidationError):
        wasserstein_1d([], [1.0])


@seed(7)
@settings(max_examples=40, deadline=None)
@given(samples, samples, st.sampled_from([1.0, 2.0]))
def test_wasserstein_1d_is_a_symmetric_metric(x, y, p):
    d = wasserstein_1d(x, y, p=p)
    assert d >= 0
    assert d == pytest.approx(wasserstein_1d(y, x, p=p), abs=1e-12)
    assert wasserstein_1d(x, x, p=p) == 0.0
    # translation moves every atom by the same amount
    assert wasserstein_1d(x, x + 1.5, p=p) == pytest.approx(1.5)


@seed(8)
@settings(max_examples=25, deadline=None)
@given(samples, samples, samples)
def test_wasserstein_1d_triangle_inequality(x, y, z):
    assert wasserstein_1d(x, z) <= wasserstein_1d(x, y) + wasserstein_1d(y, z) + 1e-9


@seed(9)
@settings(max_examples=25, deadline=None)
@given(samples, samples)
def test_network_simplex_matches_the_quantile_coupling(x, y):
    P, Q = EmpiricalMeasure.uniform(x), EmpiricalMeasure.uniform(y)
    for p in (1, 2):
        exact, plan = wasserstein_discrete_exact(P, Q, p=p)
        assert exact == pytest.approx(wasserstein_1d(x, y, p=p), rel=1e-7, abs=1e-9)
        assert np.allclose(plan.plan.sum(axis=1), P.weights)


def test_normal_shift_is_recovered():
    xi = np.random.default_rng(0).standard_normal(5000)
    assert wasserstein_1d(xi, xi + 0.7) == pytest.approx(0.7)
    other = np.random.default_rng(1).standard_normal(5000) + 0.7
    assert wasserstein_1d(xi, other) == pytest.approx(0.7, abs=0.1)


def test_exact_transport_limits_and_costs():
    big = EmpiricalMeasure.uniform(np.arange(300.0))
    with pytest.raises(ValidationError):
        wasserstein_discrete_exact(big, big)
    P = EmpiricalMeasure.uniform(np.eye(2))
    Q = EmpiricalMeasure.uniform(np.eye(2)[::-1])
    distance, plan = wasserstein_discrete_exact(P, Q)
    assert distance == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ValidationError):
        wasserstein_discrete_exact(P, Q, cost=-np.ones((2, 2)))
    with pytest.raises(ValidationError):
        wasserstein_discrete_exact(P, Q, p=np.inf)


def test_ground_cost_with_quadrature_weights():
    P = EmpiricalMeasure.uniform(np.array([[0.0, 0.0]]))
    Q = EmpiricalMeasure.uniform(np.array([[1.0, 1.0]]))
    assert ground_cost(P, Q)[0, 0] == pytest.approx(np.sqrt(2.0))
    assert ground_cost(P, Q, weights=np.array([0.5, 0.5]))[0, 0] == pytest.approx(1.0)


def test_coupling_upper_bound_dominates_the_exact_distance():
    rng = np.random.default_rng(3)
    x = rng.standard_normal(50)
    y = rng.standard_normal(50) + 1.0
    assert wasserstein_1d(x, y, p=2) <= coupling_upper_bound(x, y, p=2) + 1e-12
    with pytest.raises(ValidationError):
        coupling_upper_bound(x, y[:-1])


def test_measures_validate_their_weights():
    with pytest.raises(ValidationError):
        EmpiricalMeasure([0.0, 1.0], [0.5, 0.6])
    with pytest.raises(ValidationError):
        EmpiricalMeasure([0.0, 1.0], [1.5, -0.5])
    with pytest.raises(ValidationError):
        EmpiricalMeasure.uniform([])
    with pytest.raises(ValidationError):
        CouplingPlan(EmpiricalMeasure.uniform([0.0]), EmpiricalMeasure.uniform([1.0, 2.0]),
                     np.array([[0.7, 0.3]]))


def test_pushforward_merges_images():
    P = EmpiricalMeasure([-2.0, -1.0, 1.0, 2.0], [0.1, 0.2, 0.3, 0.4])
    image = pushforward_discrete(P, lambda x: x ** 2)
    assert image.atoms.tolist() == [1.0, 4.0]
    assert np.allclose(image.weights, [0.5, 0.5])
    assert merge_atoms(image).size == 2


def test_product_measure_and_common_support():
    P = EmpiricalMeasure.uniform([0.0, 1.0])
    Q = EmpiricalMeasure([2.0, 3.0], [0.25, 0.75])
    product = product_measure(P, Q)
    assert product.size == 4
    assert np.allclose(product.weights, [0.125, 0.375, 0.125, 0.375])
    support, p, q = on_common_support(P, Q)
    assert support.tolist() == [0.0, 1.0, 2.0, 3.0]
    assert tv_discrete(p, q) == 1.0


def test_gelbrich_identities():
    first = GaussianSpec([0.0, 1.0], np.diag([1.0, 4.0]))
    second = GaussianSpec([3.0, 5.0], np.diag([1.0, 4.0]))
    assert gelbrich_gaussian(first, second) == pytest.approx(5.0)
    assert gelbrich_gaussian(first, first) == 0.0
    scaled = GaussianSpec([0.0, 1.0], np.diag([4.0, 16.0]))
    assert gelbrich_gaussian(first, scaled) == pytest.approx(np.sqrt(1.0 + 4.0))


def test_gelbrich_full_covariance_matches_the_diagonal_route():
    rng = np.random.default_rng(4)
    rotation, _ = np.linalg.qr(rng.standard_normal((3, 3)))
    first = np.diag([3.0, 2.0, 0.5])
    second = np.diag([1.0, 2.0, 2.0])
    expected = gelbrich_gaussian(GaussianSpec(np.zeros(3), first), GaussianSpec(np.zeros(3), second))
    rotated = gelbrich_gaussian(GaussianSpec(np.zeros(3), rotation @ first @ rotation.T),
                                GaussianSpec(np.zeros(3), rotation @ second @ rotation.T))
    assert rotated == pytest.approx(expected, rel=1e-8)


def test_gelbrich_of_kl_truncation_is_the_root_tail_sum():
    eigenvalues = np.array([4.0, 2.0, 1.0, 0.5])
    full = GaussianSpec.from_kl(eigenvalues)
    for K in range(5):
        distance = gelbrich_gaussian(full, GaussianSpec.from_kl(eigenvalues, K))
        assert distance == pytest.approx(np.sqrt(eigenvalues[K:].sum()), abs=1e-12)


def test_gaussian_spec_validation():
    with pytest.raises(ValidationError):
        GaussianSpec([0.0], [[-1.0]])
    with pytest.raises(ValidationError):
        GaussianSpec([0.0, 0.0], [[1.0, 0.5], [0.0, 1.0]])
    with pytest.raises(ValidationError):
        gelbrich_gaussian(GaussianSpec([0.0], [[1.0]]), GaussianSpec.diagonal([1.0, 1.0]))


@seed(10)
@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 16), st.integers(2, 8))
def test_total_variation_properties(index, size):
    rng = np.random.default_rng(index)
    support = np.arange(float(size))
    P = random_discrete_measure(rng, support, sparsity=0.3)
    Q = random_discrete_measure(rng, support)
    distance = tv_discrete(P, Q)
    assert 0 <= distance <= 1
    assert distance == pytest.approx(tv_by_events(P.weights, Q.weights), abs=1e-12)
    assert tv_discrete(P, P) == 0.0
    coupling = maximal_coupling(P, Q)
    assert tv_coupling_mass(coupling) == pytest.approx(distance, abs=1e-12)
    assert tv_coupling_mass(CouplingPlan.independent(P, Q)) >= distance - 1e-12


def test_total_variation_contracts_under_maps():
    rng = np.random.default_rng(12)
    support = np.linspace(-2, 2, 9)
    P = random_discrete_measure(rng, support)
    Q = random_discrete_measure(rng, support)
    image = tv_measures(pushforward_discrete(P, np.abs), pushforward_discrete(Q, np.abs))
    assert image <= tv_discrete(P, Q) + 1e-12
    assert tv_measures(pushforward_discrete(P, np.exp), pushforward_discrete(Q, np.exp)) \
        == pytest.approx(tv_discrete(P, Q))


def test_total_variation_needs_a_shared_support():
    with pytest.raises(ValidationError):
        tv_discrete(EmpiricalMeasure.uniform([0.0]), EmpiricalMeasure.uniform([1.0]))
    with pytest.raises(ValidationError):
        tv_discrete(np.array([1.0]), np.array([0.5, 0.5]))
    with pytest.raises(ValidationError):
        tv_by_events(np.full(17, 1 / 17), np.full(17, 1 / 17))
