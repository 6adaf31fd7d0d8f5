import math

import numpy as np
import pytest
from scipy import stats

from carnot_heat import kernels
from carnot_heat.domains import domain_from_name
from carnot_heat.groups import dilate, dinf_norm, euclidean, heisenberg
from carnot_heat.heat import interval_survival
from carnot_heat.paths import (
    PathSample,
    dump_path,
    endpoints,
    exit_frequency,
    first_exit_index,
    running_sup_distance,
    simulate_hbm,
    simulate_subordinated,
    write_batch_csv,
)
from carnot_heat.rng import run_chunks, stream


def test_euclidean_marginal_is_gaussian_with_variance_2t():
    T = 0.7
    x = endpoints(euclidean(2), 2.0, T, 8, 100_000, seed=1)
    cov = np.cov(x.T)
    assert np.allclose(cov, 2 * T * np.eye(2), atol=0.03)
    assert abs(x.mean()) < 0.02


def test_heisenberg_area_variance_and_law():
    # z(T) with variance-2 drivers is a standard Levy area at time T: Var = T^2, E e^{i l z} = 1/cosh(l T)
    T = 0.5
    z = endpoints(heisenberg(1), 2.0, T, 16, 100_000, seed=2)[:, 2]
    assert z.var() == pytest.approx(T**2, rel=0.03)
    for lam in (1.0, 3.0):
        emp = np.cos(lam * z).mean()
        assert abs(emp - 1 / math.cosh(lam * T)) < 0.01


def test_brownian_self_similarity():
    # delta_lambda B(.) has the law of B(lambda^2 .): compare sup statistics
    g = heisenberg(1)
    lam = 2.0
    a = kernels.sup_stats(g, 2.0, 1.0, 64, 20_000, stream(0, "a"))[:, 1] * lam
    b = kernels.sup_stats(g, 2.0, lam**2, 64, 20_000, stream(0, "b"))[:, 1]
    assert stats.ks_2samp(a, b).pvalue > 1e-3


def test_stable_self_similarity():
    g = heisenberg(1)
    a = kernels.sup_stats(g, 1.5, 1.0, 64, 20_000, stream(0, "a"))[:, 1] * 0.3 ** (1 / 1.5)
    b = kernels.sup_stats(g, 1.5, 0.3, 64, 20_000, stream(0, "b"))[:, 1]
    assert stats.ks_2samp(a, b).pvalue > 1e-3


def test_simulate_hbm_grid():
    g = heisenberg(1)
    p = simulate_hbm(g, np.zeros(3), 1.0, 0.3, stream(0, "p"))
    assert np.allclose(p.times, [0, 0.3, 0.6, 0.9, 1.0])
    assert np.allclose(p.start, 0)
    assert p.steps == 4
    with pytest.raises(ValueError):
        simulate_hbm(g, np.zeros(3), 0.1, 0.3, stream(0, "p"))


def test_simulate_subordinated_clock():
    g = heisenberg(1)
    p = simulate_subordinated(g, 1.5, np.zeros(3), 1.0, 50, stream(0, "s"))
    assert p.subordinated and np.all(np.diff(p.clock) >= 0) and p.clock[0] == 0
    q = simulate_subordinated(g, 2.0, np.zeros(3), 1.0, 50, stream(0, "s"))
    assert np.allclose(q.clock, q.times)
    with pytest.raises(ValueError):
        simulate_subordinated(g, 1.5, np.zeros(3), 1.0, 1, stream(0, "s"))


def test_path_sample_validation():
    with pytest.raises(ValueError):
        PathSample(np.array([0.0, 0.0]), np.zeros((2, 1)), np.zeros(2))
    with pytest.raises(ValueError):
        PathSample(np.array([0.0, 1.0]), np.zeros((2, 1)), np.array([1.0, 0.0]))


def test_running_sup_and_exit_index():
    g = euclidean(1)
    p = PathSample(np.arange(4.0), np.array([[0.0], [0.5], [1.2], [0.4]]), np.arange(4.0))
    assert running_sup_distance(p, g) == pytest.approx(1.2)
    assert first_exit_index(p, domain_from_name("interval:-1,1")) == 2
    assert first_exit_index(p, domain_from_name("interval:-2,2")) is None


def test_dilation_commutes_with_sup():
    g = heisenberg(1)
    p = simulate_hbm(g, np.zeros(3), 1.0, 0.01, stream(1, "d"))
    assert np.max(dinf_norm(g, dilate(g, 3.0, p.points))) == pytest.approx(3 * running_sup_distance(p, g))


def test_exit_frequency_interval_oracle():
    dom = domain_from_name("interval:0,1")
    for x0, t in ((0.5, 0.02), (0.1, 0.005)):
        p, se = exit_frequency(euclidean(1), dom, [x0], 2.0, t, 256, 40_000, seed=0, bridge=True)
        exact = 1 - float(interval_survival(x0, t))
        assert abs(p - exact) < 4 * se + 1e-3


def test_chunks_are_worker_invariant():
    def fn(lo, hi, r):
        return r.standard_normal(hi - lo)

    a = np.concatenate(run_chunks(fn, 10_000, 7, "w", workers=1))
    b = np.concatenate(run_chunks(fn, 10_000, 7, "w", workers=4))
    assert np.array_equal(a, b)
    c = np.concatenate(run_chunks(fn, 10_000, 8, "w", workers=1))
    assert not np.array_equal(a, c)


def test_path_dumps(tmp_path):
    p = simulate_hbm(heisenberg(1), np.zeros(3), 0.1, 0.05, stream(0, "p"))
    with open(tmp_path / "p.csv", "w") as fh:
        dump_path(p, fh)
    lines = (tmp_path / "p.csv").read_text().splitlines()
    assert lines[0] == "t,clock,x1,x2,x3" and len(lines) == 4
    with open(tmp_path / "b.csv", "w") as fh:
        write_batch_csv([(1.0, 0.1, 100, 8, 0)], fh)
    assert (tmp_path / "b.csv").read_text().splitlines()[1] == "1.0,0.1,100,8,0"
