import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from bipstab.cost import (
    AdaptedCostSpec,
    adapted_cost,
    cost_from_config,
    norm_cost,
    polynomial_adapted_cost,
    tensorize_uniform_sup,
    weighted_growth_cost,
)
from bipstab.errors import NotMonotone

# magnitudes below 1e-3 are excluded so products of norms cannot underflow
finite = st.floats(min_value=-10, max_value=10, allow_nan=False).filter(lambda x: x == 0 or abs(x) > 1e-3)
vec3 = arrays(np.float64, 3, elements=finite)


def test_norm_cost_examples():
    assert norm_cost(1)([0.0, 0.0], [3.0, 4.0]) == pytest.approx(5.0)
    assert norm_cost(2)([1.0, 2.0], [1.0, 2.0]) == 0.0
    assert norm_cost(2)([0.0, 0.0], [1.0, 1.0]) == pytest.approx(2.0)


def test_growth_cost_examples():
    assert weighted_growth_cost(1)([1.0], [-1.0]) == pytest.approx(4.0)
    assert weighted_growth_cost(2)([1.0, 0.0], [0.0, 1.0]) == pytest.approx(4 * math.sqrt(2))
    assert weighted_growth_cost(0).is_metric


def test_growth_weak_triangle_constant():
    assert weighted_growth_cost(0.5).weak_triangle_constant == 2.0
    assert weighted_growth_cost(2).weak_triangle_constant == 2.0**3


def test_adapted_cost_examples():
    base = norm_cost(1)
    ones = lambda u: np.ones(np.shape(u)[:-1])
    small_L = lambda u, v, y: np.full(np.broadcast_shapes(np.shape(u)[:-1], np.shape(v)[:-1]), 0.5)
    c = adapted_cost(AdaptedCostSpec(base, ones, small_L, None))
    assert c([0.3], [-0.4]) == pytest.approx(0.7)
    assert c([2.0], [2.0]) == 0.0
    # tanh regression, d = 1, sigma = 1, y = 0: L = 1
    tanh_L = lambda u, v, y: np.full(np.broadcast_shapes(np.shape(u)[:-1], np.shape(v)[:-1]), 1.0)
    c = adapted_cost(AdaptedCostSpec(base, ones, tanh_L, np.zeros(1)))
    assert c([2.0], [0.0]) == pytest.approx(4.0)
    assert not c.is_metric


def test_adapted_matrix_matches_pointwise(rng):
    X, Y = rng.normal(size=(6, 2)), rng.normal(size=(5, 2))
    f = lambda u: 1 + np.sum(np.asarray(u) ** 2, axis=-1)
    L = lambda u, v, y: 0.3 * (np.linalg.norm(u, axis=-1) + np.linalg.norm(v, axis=-1))
    c = adapted_cost(AdaptedCostSpec(norm_cost(1), f, L, None))
    M = c.matrix(X, Y)
    for i in range(6):
        for j in range(5):
            assert M[i, j] == pytest.approx(float(c(X[i], Y[j])), rel=1e-12)


def test_polynomial_adapted_cost(rng):
    c = polynomial_adapted_cost(1.0)
    assert c([1.0, 0.0], [0.0, 0.0]) == pytest.approx((1 + 1 + 1 + 0) ** 2 * 1.0)
    X, Y = rng.normal(size=(4, 3)), rng.normal(size=(3, 3))
    M = c.matrix(X, Y)
    assert M[2, 1] == pytest.approx(float(c(X[2], Y[1])), rel=1e-12)


def test_tensorize_uniform_sup():
    d, sigma = 1, 1.0
    L = lambda u, v, y: np.full(np.shape(u)[:-1], (math.sqrt(d) + np.linalg.norm(y)) / sigma**2)
    u = np.zeros((1, 1))
    field = tensorize_uniform_sup(L, 2.0, np.zeros(1), monotone_in_norm=True)
    assert field(u, u)[0] == pytest.approx(math.sqrt(d) + 2.0)
    assert tensorize_uniform_sup(L, 0.0, np.array([0.5]), monotone_in_norm=True)(u, u)[0] == pytest.approx(1.5)
    const = lambda u, v, y: np.full(np.shape(u)[:-1], 3.0)
    assert tensorize_uniform_sup(const, 5.0, np.ones(1), monotone_in_norm=True)(u, u)[0] == 3.0
    with pytest.raises(NotMonotone):
        tensorize_uniform_sup(L, 1.0, np.zeros(1))


def test_registry():
    assert cost_from_config("norm_p", p=2)([0.0], [3.0]) == pytest.approx(9.0)
    with pytest.raises(KeyError):
        cost_from_config("nope")


COSTS = [norm_cost(1), norm_cost(2), weighted_growth_cost(0), weighted_growth_cost(1), weighted_growth_cost(2),
         polynomial_adapted_cost(0.5)]


@settings(max_examples=200, deadline=None)
@given(vec3, vec3)
def test_costs_symmetric_nonnegative_vanishing_diagonal(u, v):
    for c in COSTS:
        a, b = float(c(u, v)), float(c(v, u))
        assert a >= 0 and a == pytest.approx(b, rel=1e-12, abs=1e-300)
        assert float(c(u, u)) == 0.0
        if not np.array_equal(u, v):
            assert a > 0


@settings(max_examples=200, deadline=None)
@given(vec3, vec3, vec3)
def test_metric_costs_triangle(u, v, w):
    for c in COSTS:
        if c.is_metric:
            assert float(c(u, w)) <= float(c(u, v)) + float(c(v, w)) + 1e-12 * (1 + float(c(u, w)))


@settings(max_examples=200, deadline=None)
@given(vec3, vec3)
def test_growth_zero_equals_euclidean(u, v):
    assert float(weighted_growth_cost(0)(u, v)) == float(norm_cost(1)(u, v))


@settings(max_examples=100, deadline=None)
@given(vec3, vec3, st.floats(min_value=0, max_value=3), st.floats(min_value=0, max_value=3))
def test_adapted_cost_dominates_base_and_is_monotone(u, v, a, b):
    base = norm_cost(1)
    f1 = lambda x: 1 + a * np.linalg.norm(x, axis=-1)
    f2 = lambda x: 1 + (a + 1) * np.linalg.norm(x, axis=-1)
    L1 = lambda x, z, y: b * np.ones(np.broadcast_shapes(np.shape(x)[:-1], np.shape(z)[:-1]))
    L2 = lambda x, z, y: (b + 0.5) * np.ones(np.broadcast_shapes(np.shape(x)[:-1], np.shape(z)[:-1]))
    c11 = float(adapted_cost(AdaptedCostSpec(base, f1, L1, None))(u, v))
    c21 = float(adapted_cost(AdaptedCostSpec(base, f2, L1, None))(u, v))
    c12 = float(adapted_cost(AdaptedCostSpec(base, f1, L2, None))(u, v))
    assert c11 >= float(base(u, v)) * (1 - 1e-12)
    assert c21 >= c11 * (1 - 1e-12) and c12 >= c11 * (1 - 1e-12)
    assert c11 == pytest.approx(float(adapted_cost(AdaptedCostSpec(base, f1, L1, None))(v, u)), rel=1e-12)
