import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bipstab.errors import AllWeightsUnderflow, DimensionMismatch
from bipstab.measure import (
    ParticleMeasure,
    SeedSpec,
    log_likelihood_weights,
    reweight,
    sample_standard_gaussian,
    weighted_moment,
    weighted_moment_se,
)


def test_weights_must_sum_to_one():
    with pytest.raises(ValueError):
        ParticleMeasure(np.zeros((2, 1)), [0.5, 0.5 + 1e-9])
    ParticleMeasure(np.zeros((2, 1)), [0.5, 0.5])


def test_rejects_negative_weights_and_bad_shapes():
    with pytest.raises(ValueError):
        ParticleMeasure(np.zeros((2, 1)), [1.5, -0.5])
    with pytest.raises(DimensionMismatch):
        ParticleMeasure(np.zeros((3, 1)), [0.5, 0.5])
    with pytest.raises(ValueError):
        ParticleMeasure(np.zeros((0, 1)), [])


def test_arrays_are_read_only():
    m = ParticleMeasure.uniform(np.arange(4.0))
    with pytest.raises(ValueError):
        m.points[0, 0] = 1.0


def test_single_gaussian_particle(seed):
    m = sample_standard_gaussian(1, 1, seed)
    assert len(m) == 1 and m.weights[0] == 1.0


def test_gaussian_mean_law_of_large_numbers(seed):
    n = 10**5
    m = sample_standard_gaussian(2, n, seed)
    assert np.all(np.abs(m.points.mean(axis=0)) < 4 / np.sqrt(n))


def test_same_seed_reproduces_bitwise():
    a = sample_standard_gaussian(3, 100, SeedSpec(7, 2))
    b = sample_standard_gaussian(3, 100, SeedSpec(7, 2))
    c = sample_standard_gaussian(3, 100, SeedSpec(7, 3))
    assert a.points.tobytes() == b.points.tobytes()
    assert not np.array_equal(a.points, c.points)


def test_distinct_streams_uncorrelated():
    n = 20000
    a = sample_standard_gaussian(1, n, SeedSpec(1, 0)).points[:, 0]
    b = sample_standard_gaussian(1, n, SeedSpec(1, 1)).points[:, 0]
    assert abs(np.corrcoef(a, b)[0, 1]) < 4 / np.sqrt(n)


def test_reweight_zero_potential_is_identity(seed):
    prior = sample_standard_gaussian(2, 50, seed)
    post, z = reweight(prior, lambda u, y: np.zeros(len(u)), None)
    assert np.array_equal(post.weights, prior.weights)
    assert z == 1.0


def test_reweight_constant_potential(seed):
    prior = sample_standard_gaussian(1, 50, seed)
    post, z = reweight(prior, lambda u, y: np.full(len(u), 0.7), None)
    np.testing.assert_allclose(post.weights, prior.weights, rtol=1e-14)
    assert z == pytest.approx(np.exp(-0.7), rel=1e-14)


def test_conjugate_gaussian_posterior_mean(seed):
    # prior N(0, 1), Phi = (u - y)^2 / 2 with y = 1 gives posterior N(1/2, 1/2)
    prior = sample_standard_gaussian(1, 10**5, seed)
    post, _ = reweight(prior, lambda u, y: 0.5 * (u[:, 0] - y) ** 2, 1.0)
    mean, se = weighted_moment_se(post, lambda u: u[:, 0])
    assert abs(mean - 0.5) < 3 * se
    var = weighted_moment(post, lambda u: (u[:, 0] - mean) ** 2)
    assert var == pytest.approx(0.5, rel=0.03)


def test_reweight_underflow_is_reported():
    prior = ParticleMeasure.uniform(np.zeros((3, 1)))
    with pytest.raises(AllWeightsUnderflow):
        reweight(prior, lambda u, y: np.full(len(u), np.inf), None)


def test_log_space_weights_survive_huge_potentials(seed):
    prior = sample_standard_gaussian(1, 100, seed)
    phi = lambda u, y: 1e4 + u[:, 0] ** 2
    w, log_z = log_likelihood_weights(prior, phi, None)
    assert w.sum() == pytest.approx(1.0, abs=1e-12)
    assert log_z < -1e4 + 1
    # the evidence itself is not representable, which reweight reports
    with pytest.raises(AllWeightsUnderflow):
        reweight(prior, phi, None)


def test_weighted_moment_trivial_cases(seed):
    assert weighted_moment(sample_standard_gaussian(2, 10, seed), lambda u: np.ones(len(u))) == pytest.approx(1.0)
    assert weighted_moment(ParticleMeasure.dirac([3.0]), lambda u: u[:, 0]) == 3.0


def test_second_moment_within_three_se(seed):
    m = sample_standard_gaussian(1, 10**5, seed)
    mean, se = weighted_moment_se(m, lambda u: u[:, 0] ** 2)
    assert abs(mean - 1.0) < 3 * se


def test_csv_round_trip(seed):
    m = sample_standard_gaussian(2, 7, seed)
    back = ParticleMeasure.from_csv(m.to_csv())
    assert np.array_equal(back.points, m.points) and np.array_equal(back.weights, m.weights)


@settings(max_examples=50, deadline=None)
@given(st.integers(min_value=2, max_value=40), st.integers(min_value=0, max_value=2**32))
def test_evidence_permutation_invariant(n, s):
    rng = np.random.default_rng(s)
    prior = ParticleMeasure.uniform(rng.normal(size=(n, 2)))
    phi = lambda u, y: np.sum(u**2, axis=1)
    _, z1 = reweight(prior, phi, None)
    _, z2 = reweight(prior.permuted(rng.permutation(n)), phi, None)
    assert z1 == pytest.approx(z2, rel=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.floats(min_value=-50, max_value=50), st.integers(min_value=0, max_value=2**32))
def test_normalization_survives_reweighting(shift, s):
    rng = np.random.default_rng(s)
    prior = ParticleMeasure.uniform(rng.normal(size=(30, 1)))
    post, _ = reweight(prior, lambda u, y: shift * u[:, 0] ** 3, None)
    assert weighted_moment(post, lambda u: np.ones(len(u))) == pytest.approx(1.0, abs=1e-12)
