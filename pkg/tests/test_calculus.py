import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from carnot_heat.calculus import (
    SmoothFunction,
    UnsupportedOrder,
    apply_vector_fields,
    bump,
    function_from_name,
    horizontal_gradient,
    indicator,
    koranyi_bump,
    mollify,
    polynomial,
    taylor_decay_exponent,
    taylor_polynomial,
    trig,
    variation_smooth,
)
from carnot_heat.domains import domain_from_name
from carnot_heat.groups import dilate, euclidean, heisenberg, multiply


def z_coord():
    return polynomial([[0, 0, 1]], [1.0], name="z")


def test_vector_field_examples():
    sq = polynomial([[2, 0]], [1.0])
    assert apply_vector_fields(euclidean(2), sq, [1.0, 0.0], (0,)) == pytest.approx(2)
    h = heisenberg(1)
    x = np.array([0.4, -1.2, 0.3])
    assert apply_vector_fields(h, z_coord(), x, (0,)) == pytest.approx(1.2 / 2)
    comm = apply_vector_fields(h, z_coord(), x, (0, 1)) - apply_vector_fields(h, z_coord(), x, (1, 0))
    assert comm == pytest.approx(1, abs=1e-5)


def test_horizontal_gradient_examples():
    h = heisenberg(1)
    assert np.allclose(horizontal_gradient(h, z_coord(), [0, 0, 0]), [0, 0])
    assert np.allclose(horizontal_gradient(h, z_coord(), [2, 0, 0]), [0, 1])
    f = trig(3)
    x = np.array([0.3, 0.1, -0.7])
    assert np.allclose(horizontal_gradient(euclidean(3), f, x), f.gradient(x))


def test_order_limit():
    with pytest.raises(UnsupportedOrder):
        apply_vector_fields(heisenberg(1), trig(3), np.zeros(3), (0, 1, 0, 1))


@pytest.mark.parametrize("f", [bump(3), trig(3), polynomial([[1, 2, 0], [0, 0, 3]], [1.0, -2.0]), koranyi_bump()],
                         ids=lambda f: f.name)
def test_analytic_gradient_matches_differences(f):
    assert f.check_gradient()


def test_registry():
    assert function_from_name("bump:1,2", 2).support[1].tolist() == [1, 2]
    assert function_from_name("poly:3", 3)(np.array([1.0, 1.0, 1.0])) == pytest.approx(3)
    assert function_from_name("koranyi", 3).smoothness == "C1,1"
    with pytest.raises(KeyError):
        function_from_name("wavelet", 2)
    with pytest.raises(ValueError):
        function_from_name("koranyi", 2)


@given(st.lists(st.floats(-1, 1), min_size=6, max_size=6))
def test_taylor_exact_for_horizontal_linear(v):
    # x_1 + 2 x_2 is a homogeneous polynomial of degree 1: first-order Taylor is exact
    g = heisenberg(1)
    f = polynomial([[1, 0, 0], [0, 1, 0]], [1.0, 2.0])
    x, h = np.array(v[:3]), np.array(v[3:])
    assert taylor_polynomial(g, f, x, h, 1) == pytest.approx(f(multiply(g, x, h)), abs=1e-8)


@pytest.mark.parametrize("name", ["trig", "poly:3", "bump"])
def test_remainder_decays_quadratically(name):
    g = heisenberg(1)
    rng = np.random.default_rng(3)
    f = function_from_name(name, 3)
    for _ in range(3):
        x = dilate(g, 0.3, rng.uniform(-1, 1, 3))
        h0 = rng.standard_normal(3)
        slope = taylor_decay_exponent(g, f, x, h0)[0]
        assert slope > 1.85


def test_mollifier_preserves_mass_and_bounds():
    g = euclidean(1)
    dom = domain_from_name("interval:0,1")
    fe = mollify(g, dom, 0.1, n_nodes=256)
    x = np.linspace(-0.3, 1.3, 4001)[:, None]
    v = fe(x)
    assert np.all(v >= -1e-12) and np.all(v <= 1 + 1e-12)
    assert np.trapezoid(v, x[:, 0]) == pytest.approx(1.0, abs=2e-3)
    assert fe(np.array([0.5])) == pytest.approx(1.0)
    assert fe(np.array([-0.2])) == 0.0


def test_mollified_bump_support_contains_values():
    g = heisenberg(1)
    fe = mollify(g, bump(3, 0.5), 0.2, n_nodes=128)
    lo, hi = fe.support
    rng = np.random.default_rng(0)
    x = rng.uniform(lo - 1, hi + 1, size=(4000, 3))
    outside = np.any((x < lo) | (x > hi), axis=1)
    assert np.all(fe(x[outside]) == 0)


def test_variation_oracles():
    # int |f'| of a unit-height bump is twice its height
    v, se = variation_smooth(euclidean(1), bump(1), n=200_000)
    assert abs(v - 2.0) < 4 * se + 1e-3
    # step 1: |grad_H| is the Euclidean gradient, so the 2D variation is rotation invariant
    v2, se2 = variation_smooth(euclidean(2), bump(2, 0.5), n=200_000)
    v3, se3 = variation_smooth(euclidean(2), bump(2, 0.5), n=200_000, seed=1)
    assert abs(v2 - v3) < 4 * np.hypot(se2, se3)


def test_indicator_is_degenerate():
    dom = domain_from_name("disk:1")
    f = indicator(dom)
    assert f.smoothness == "indicator"
    assert f(np.array([0.0, 0.0])) == 1.0 and f(np.array([2.0, 0.0])) == 0.0


def test_smooth_function_shapes():
    f = trig(2)
    x = np.zeros((4, 5, 2))
    assert f(x).shape == (4, 5)
    assert f.gradient(x).shape == (4, 5, 2)
    assert isinstance(f(np.zeros(2)), float)
    assert isinstance(f, SmoothFunction)
