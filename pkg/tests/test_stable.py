import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from carnot_heat.rng import stream
from carnot_heat.stable import (
    RateFunction,
    SubordinatorSpec,
    UndefinedConstant,
    cached_sup_constant,
    check_density_tail,
    check_exp_moment,
    check_integral_asymptotics,
    check_laplace,
    check_self_similarity,
    closed_form_kappa,
    discrete_sup_mean,
    draw_subordinator,
    estimate_sup_constant,
    mu_alpha,
    sample_subordinator,
)
from carnot_heat import kernels


@pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5, 1.9])
def test_laplace_transform(alpha):
    rows = check_laplace(alpha, samples=200_000)
    assert all(r[-1] for r in rows), rows


def test_alpha_two_is_deterministic_clock():
    s = sample_subordinator(SubordinatorSpec(2.0), 0.7, stream(0, "x"), size=10)
    assert np.all(s == 0.7)


def test_subordinator_positive_and_scaling():
    p, ok = check_self_similarity(1.3, samples=50_000)
    assert ok, p
    s = draw_subordinator(1.3, 0.2, 10_000, 1)
    assert np.all(s > 0)


def test_density_tail_exponent():
    slope, ok = check_density_tail(1.5, samples=400_000)
    assert ok, slope


def test_spec_validation():
    with pytest.raises(ValueError):
        SubordinatorSpec(2.5)
    with pytest.raises(ValueError):
        SubordinatorSpec(0.0)
    with pytest.raises(ValueError):
        sample_subordinator(1.5, -1.0, stream(0, "x"))


def test_mu_alpha_regimes():
    assert mu_alpha(0.5, 0.01) == pytest.approx(0.01)
    assert mu_alpha(1.0, 0.01) == pytest.approx(0.01 * math.log(100) / math.pi)
    assert mu_alpha(2.0, 0.01) == pytest.approx(0.1 * 2 / math.sqrt(math.pi))
    with pytest.raises(ValueError):
        mu_alpha(1.5, 1.0)
    with pytest.raises(ValueError):
        mu_alpha(1.5, 0.0)


@given(st.floats(1.05, 2.0), st.floats(1e-6, 0.5), st.floats(1.01, 4.0))
def test_mu_alpha_scaling(alpha, t, lam):
    rate = RateFunction(alpha, closed_form_kappa(alpha), source="exact")
    if t * lam < 1:
        assert mu_alpha(rate, t * lam) == pytest.approx(lam ** (1 / alpha) * mu_alpha(rate, t), rel=1e-12)


def test_rate_function_validation():
    with pytest.raises(ValueError):
        RateFunction(1.5)
    with pytest.raises(UndefinedConstant):
        closed_form_kappa(1.0)
    assert RateFunction.for_alpha(0.8).kappa is None
    assert RateFunction.for_alpha(2.0, source="exact").kappa == pytest.approx(2 / math.sqrt(math.pi))


def test_kappa_two_reflection_oracle():
    est = estimate_sup_constant(2.0, samples=200_000, steps=16)
    assert est.bridge
    assert abs(est.kappa - 2 / math.sqrt(math.pi)) < 4 * est.stderr
    assert est.refinement_ok


def test_kappa_stable_against_closed_form():
    est = estimate_sup_constant(1.5, samples=50_000, steps=512)
    assert abs(est.kappa - closed_form_kappa(1.5)) < 4 * est.stderr + 0.01


def test_kappa_undefined_below_one():
    with pytest.raises(UndefinedConstant):
        estimate_sup_constant(1.0, samples=100)


def test_discrete_sup_mean_matches_skeleton():
    # Spitzer's identity for the random-walk skeleton, no Richardson, no control
    M = 32
    sups = kernels.sup_1d(1.5, M, 100_000, stream(4, "skel"))
    exact = discrete_sup_mean(1.5, M)
    se = sups.std(ddof=1) / math.sqrt(len(sups))
    assert abs(sups.mean() - exact) < 4 * se


def test_kappa_cache_roundtrip(tmp_path):
    path = tmp_path / "kappa.csv"
    a = cached_sup_constant(2.0, 4096, 16, seed=3, path=path)
    b = cached_sup_constant(2.0, 4096, 16, seed=3, path=path)
    assert a == b
    assert len(path.read_text().splitlines()) == 2
    cached_sup_constant(2.0, 4096, 16, seed=4, path=path)
    assert len(path.read_text().splitlines()) == 3


def test_kappa_worker_invariant():
    a = estimate_sup_constant(1.5, samples=10_000, steps=64, workers=1)
    b = estimate_sup_constant(1.5, samples=10_000, steps=64, workers=3)
    assert a.kappa == b.kappa and a.stderr == b.stderr


def test_exp_moment_decay():
    rep = check_exp_moment(1.5, 1.0, 1.0, np.geomspace(0.5, 20, 10), [1e-2, 1e-3], samples=100_000)
    assert rep.passed, rep.slope


def test_integral_asymptotics():
    rep = check_integral_asymptotics(1.5, 1.0, 1.0, 1.0, 1.0, [1e-2, 1e-3, 1e-4, 1e-5, 1e-6], samples=100_000)
    assert rep.passed
    with pytest.raises(ValueError):
        check_integral_asymptotics(1.5, 2.0, 1.0, 1.0, 1.0, [1e-2, 1e-3])
