import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bipstab.cost import AdaptedCostSpec, adapted_cost, norm_cost, weighted_growth_cost
from bipstab.errors import DimensionMismatch, InstanceTooLarge, MaxIterExceeded, UnbalancedWeights
from bipstab.measure import ParticleMeasure, SeedSpec
from bipstab.priors import KLSpec, kl_gaussian_sampler
from bipstab.transport import (
    coupling_cost,
    exact_ot,
    ipm_value,
    sinkhorn,
    solve_cost_matrix,
    transport_cost,
    w1_1d_oracle,
)


def random_measure(rng, n, d=1):
    w = rng.uniform(0.1, 1.0, size=n)
    return ParticleMeasure.from_unnormalized(rng.normal(size=(n, d)), w)


def assert_certified(plan, src, tgt, C, tol=1e-9):
    np.testing.assert_allclose(plan.coupling.sum(axis=1), src.weights, atol=1e-9)
    np.testing.assert_allclose(plan.coupling.sum(axis=0), tgt.weights, atol=1e-9)
    assert np.all(plan.coupling >= 0)
    assert np.all(plan.dual_u[:, None] + plan.dual_v[None, :] <= C + tol)
    assert plan.primal_cost - plan.dual_value <= tol * (1 + plan.primal_cost)


def test_two_by_two_instance():
    src = ParticleMeasure([[0.0], [1.0]], [0.5, 0.5])
    tgt = ParticleMeasure([[0.25], [0.9]], [0.5, 0.5])
    plan = exact_ot(src, tgt, norm_cost(1))
    assert plan.primal_cost == pytest.approx(0.175, abs=1e-12)
    assert_certified(plan, src, tgt, norm_cost(1).matrix(src.points, tgt.points))


def test_diracs():
    assert exact_ot(ParticleMeasure.dirac([0.0]), ParticleMeasure.dirac([1.0]), norm_cost(1)).primal_cost == 1.0
    for p in (1, 2, 3.5):
        assert w1_1d_oracle(ParticleMeasure.dirac([0.0]), ParticleMeasure.dirac([2.5]), p) == pytest.approx(2.5)


def test_identical_measures_zero(rng):
    m = random_measure(rng, 30, 3)
    assert exact_ot(m, m, norm_cost(1)).primal_cost == 0.0
    assert ipm_value(m, m, norm_cost(1)) == (0.0, "exact")
    assert ipm_value(m, m, weighted_growth_cost(1)) == (0.0, "upper_bound")
    assert w1_1d_oracle(random_measure(rng, 5), random_measure(rng, 5), 1) >= 0


def test_three_point_unequal_weights():
    a = ParticleMeasure([[0.0], [1.0], [3.0]], [0.2, 0.5, 0.3])
    b = ParticleMeasure([[0.5], [2.0], [2.5]], [0.6, 0.1, 0.3])
    for p in (1, 2):
        assert exact_ot(a, b, norm_cost(p)).primal_cost == pytest.approx(w1_1d_oracle(a, b, p) ** p, abs=1e-12)


def test_exact_matches_oracle_random(rng):
    for k in range(20):
        n, m = rng.integers(2, 120, size=2)
        a, b = random_measure(rng, n), random_measure(rng, m)
        for p in (1, 2):
            plan = exact_ot(a, b, norm_cost(p))
            assert plan.primal_cost == pytest.approx(w1_1d_oracle(a, b, p) ** p, abs=1e-9)
            assert_certified(plan, a, b, norm_cost(p).matrix(a.points, b.points))


def test_permutation_invariance(rng):
    a, b = random_measure(rng, 40, 2), random_measure(rng, 35, 2)
    v = exact_ot(a, b, norm_cost(1)).primal_cost
    v2 = exact_ot(a.permuted(rng.permutation(40)), b.permuted(rng.permutation(35)), norm_cost(1)).primal_cost
    assert v == pytest.approx(v2, abs=1e-12)


def test_triangle_inequality(rng):
    for _ in range(10):
        a, b, c = (random_measure(rng, 15, 2) for _ in range(3))
        w = lambda x, y: exact_ot(x, y, norm_cost(1)).primal_cost
        assert w(a, c) <= w(a, b) + w(b, c) + 1e-9


def test_errors(rng):
    a = random_measure(rng, 4, 1)
    with pytest.raises(DimensionMismatch):
        exact_ot(a, random_measure(rng, 4, 2), norm_cost(1))
    with pytest.raises(UnbalancedWeights):
        solve_cost_matrix(np.array([0.5, 0.5]), np.array([0.5, 0.6]), np.ones((2, 2)))
    with pytest.raises(InstanceTooLarge):
        exact_ot(a, a.permuted([1, 0, 2, 3]), norm_cost(1), cap=8)
    with pytest.raises(DimensionMismatch):
        w1_1d_oracle(random_measure(rng, 3, 2), random_measure(rng, 3, 2))


def test_max_iter_warning(rng):
    a, b = random_measure(rng, 30), random_measure(rng, 30)
    C = norm_cost(1).matrix(a.points, b.points)
    with pytest.warns(MaxIterExceeded):
        plan = solve_cost_matrix(a.weights, b.weights, C, max_iter=2)
    assert not plan.converged


def test_plan_csv(rng):
    a, b = random_measure(rng, 3), random_measure(rng, 2)
    text = exact_ot(a, b, norm_cost(1)).to_csv()
    assert text.splitlines()[0] == "i,j,mass"


def test_sinkhorn_dirac_and_sweep(rng):
    d0, d1 = ParticleMeasure.dirac([0.0]), ParticleMeasure.dirac([1.0])
    for eps in (1.0, 0.1, 0.01):
        assert sinkhorn(d0, d1, norm_cost(1), eps).primal_cost == pytest.approx(1.0, abs=1e-12)
    a, b = random_measure(rng, 128), random_measure(rng, 128)
    exact = exact_ot(a, b, norm_cost(1)).primal_cost
    gaps = []
    for eps in (1.0, 0.1, 0.01):
        plan = sinkhorn(a, b, norm_cost(1), eps, max_iter=50_000)
        C = norm_cost(1).matrix(a.points, b.points)
        assert np.all(plan.dual_u[:, None] + plan.dual_v[None, :] <= C + 1e-9)
        assert plan.dual_value <= exact + 1e-9
        gaps.append(plan.primal_cost - exact)
    assert gaps[0] >= gaps[1] - 1e-6 >= gaps[2] - 2e-6
    assert gaps[2] >= -1e-6 and gaps[2] < 0.05 * exact


@pytest.mark.filterwarnings("ignore::bipstab.errors.MaxIterExceeded")
def test_sinkhorn_identical_tends_to_zero(rng):
    m = random_measure(rng, 40)
    costs = [sinkhorn(m, m, norm_cost(1), eps, max_iter=50_000).primal_cost for eps in (0.1, 0.01, 0.001)]
    assert costs[0] > costs[1] > costs[2] and costs[2] < 0.01


def test_sinkhorn_max_iter_warns(rng):
    a, b = random_measure(rng, 20), random_measure(rng, 20)
    with pytest.warns(MaxIterExceeded):
        sinkhorn(a, b, norm_cost(1), 1e-3, max_iter=3)


def test_adapted_cost_ipm_dominates_base(rng):
    a = ParticleMeasure.uniform(rng.normal(size=(60, 2)))
    b = ParticleMeasure.uniform(rng.normal(size=(60, 2)) + 0.5)
    f = lambda u: np.ones(np.shape(u)[:-1])
    L = lambda u, v, y: np.full(np.broadcast_shapes(np.shape(u)[:-1], np.shape(v)[:-1]), 1.3)
    c_y = adapted_cost(AdaptedCostSpec(norm_cost(1), f, L, None))
    high, mode = ipm_value(a, b, c_y)
    assert mode == "upper_bound"
    assert high >= ipm_value(a, b, norm_cost(1)).value


def test_coupling_cost_examples(rng):
    X = rng.normal(size=(50, 1))
    assert coupling_cost((X, X), norm_cost(1)) == (0.0, 0.0)
    assert coupling_cost((X, X + 1), norm_cost(1))[0] == pytest.approx(1.0)
    spec = KLSpec(truncation_J=8)
    u = kl_gaussian_sampler(spec, 100, SeedSpec(1)).points
    v = kl_gaussian_sampler(spec, 100, SeedSpec(1)).points
    assert coupling_cost((u, v), norm_cost(1))[0] == 0.0


def test_coupling_dominates_exact(rng):
    for _ in range(20):
        n = int(rng.integers(5, 80))
        U, V = rng.normal(size=(n, 2)), rng.normal(size=(n, 2)) + rng.normal(size=2)
        val, _ = coupling_cost((U, V), norm_cost(1))
        ot = exact_ot(ParticleMeasure.uniform(U), ParticleMeasure.uniform(V), norm_cost(1)).primal_cost
        assert val >= ot - 1e-12


def test_transport_cost_solver_dispatch(rng):
    a, b = random_measure(rng, 50), random_measure(rng, 60)
    q = transport_cost(a, b, norm_cost(2), solver="quantile")
    e = transport_cost(a, b, norm_cost(2), solver="exact")
    assert q == pytest.approx(e, abs=1e-12) and transport_cost(a, b, norm_cost(2)) == q
    with pytest.raises(ValueError):
        transport_cost(a, b, norm_cost(2), solver="magic")


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=1, max_value=25), st.integers(min_value=1, max_value=25),
       st.integers(min_value=0, max_value=2**32))
def test_exact_certificate_property(n, m, s):
    rng = np.random.default_rng(s)
    a, b = random_measure(rng, n, 2), random_measure(rng, m, 2)
    C = norm_cost(1).matrix(a.points, b.points)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        plan = exact_ot(a, b, norm_cost(1))
    assert_certified(plan, a, b, C)
