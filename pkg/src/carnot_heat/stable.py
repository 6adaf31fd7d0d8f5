"""The alpha/2-stable subordinator, the rate function mu_alpha and its constant.

``S^alpha`` has Laplace transform ``E exp(-lam S_t) = exp(-t lam**(alpha/2))``.
Draws are exact (Kanter's representation), so every Laplace or tail check
below is free of discretization error.

The constant ``kappa_alpha = E sup_{[0,1]} B^alpha_1`` refers to the first
horizontal coordinate of the subordinated process, whose drivers have
variance 2 per unit time. That coordinate is the symmetric stable process
with characteristic exponent ``|xi|**alpha``, for which Spitzer's identity
gives ``kappa_alpha = (alpha/pi) Gamma(1 - 1/alpha)``; the Monte Carlo
estimate is the primary value and the closed form is kept as a cross-check.
"""
import csv
import math
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import special, stats

from . import kernels
from .rng import run_chunks

__all__ = [
    "SubordinatorSpec",
    "RateFunction",
    "SupConstant",
    "sample_subordinator",
    "draw_subordinator",
    "mu_alpha",
    "closed_form_kappa",
    "discrete_sup_mean",
    "estimate_sup_constant",
    "cached_sup_constant",
    "check_laplace",
    "check_self_similarity",
    "check_density_tail",
    "check_exp_moment",
    "check_integral_asymptotics",
]


class UndefinedConstant(ValueError):
    pass


@dataclass(frozen=True)
class SubordinatorSpec:
    alpha: float

    def __post_init__(self):
        a = float(self.alpha)
        if not 0.0 < a <= 2.0:
            raise ValueError(f"alpha must lie in (0, 2], got {self.alpha}")
        object.__setattr__(self, "alpha", a)

    @property
    def deterministic(self):
        return self.alpha == 2.0


def sample_subordinator(spec, t, rng, size=None):
    """One draw (or ``size`` draws) of ``S^alpha_t``."""
    if not isinstance(spec, SubordinatorSpec):
        spec = SubordinatorSpec(spec)
    if not t > 0:
        raise ValueError(f"t must be positive, got {t}")
    n = 1 if size is None else size
    out = kernels.subordinator_increments(rng, spec.alpha, float(t), n)
    return float(out[0]) if size is None else out


def draw_subordinator(alpha, t, n, seed, label="subordinator", workers=1):
    """``n`` draws of ``S^alpha_t`` from worker-invariant chunked streams."""
    spec = SubordinatorSpec(alpha)
    parts = run_chunks(lambda lo, hi, rng: sample_subordinator(spec, t, rng, hi - lo),
                       n, seed, label, workers, chunk=1 << 16)
    return np.concatenate(parts)


def closed_form_kappa(alpha):
    """``E sup_{[0,1]} B^alpha_1 = (alpha/pi) Gamma(1 - 1/alpha)`` for ``1 < alpha <= 2``."""
    if not 1.0 < alpha <= 2.0:
        raise UndefinedConstant(f"the supremum constant needs 1 < alpha <= 2, got {alpha}")
    return alpha / math.pi * math.gamma(1.0 - 1.0 / alpha)


def discrete_sup_mean(alpha, steps):
    """Exact mean of the running maximum over ``steps`` equally spaced points.

    Spitzer: ``E max_k X_k = sum_j E[X_j^+] / j`` for a random walk, and
    ``E X_1^+ = (1/pi) Gamma(1 - 1/alpha)`` here.
    """
    j = np.arange(1, int(steps) + 1, dtype=float)
    half_abs = math.gamma(1.0 - 1.0 / alpha) / math.pi
    return float(half_abs * steps ** (-1.0 / alpha) * np.sum(j ** (1.0 / alpha - 1.0)))


@dataclass(frozen=True)
class RateFunction:
    """``mu_alpha`` with its supremum constant (``kappa`` is None for ``alpha <= 1``)."""

    alpha: float
    kappa: float = None
    stderr: float = 0.0
    samples: int = 0
    steps: int = 0
    source: str = "none"

    def __post_init__(self):
        if not 0.0 < self.alpha <= 2.0:
            raise ValueError(f"alpha must lie in (0, 2], got {self.alpha}")
        if self.alpha > 1.0 and not (self.kappa is not None and self.kappa > 0):
            raise ValueError("alpha > 1 needs a positive supremum constant")

    @classmethod
    def for_alpha(cls, alpha, source="mc", samples=200_000, steps=2048, seed=0, workers=1):
        """Build from the cache/Monte Carlo (``source="mc"``) or the closed form."""
        alpha = float(alpha)
        if alpha <= 1.0:
            return cls(alpha)
        if source == "exact":
            return cls(alpha, closed_form_kappa(alpha), 0.0, 0, 0, "exact")
        if source != "mc":
            raise ValueError(f"unknown kappa source {source!r}")
        k, s = cached_sup_constant(alpha, samples, steps, seed, workers=workers)
        return cls(alpha, k, s, samples, steps, "mc")

    def __call__(self, t):
        return mu_alpha(self, t)

    def relative_error(self):
        return 0.0 if self.kappa is None else self.stderr / self.kappa


def mu_alpha(rate, t):
    """``t**(1/alpha) kappa`` (``1 < alpha <= 2``), ``t log(1/t)/pi`` (``alpha = 1``), ``t`` otherwise."""
    t_arr = np.asarray(t, dtype=float)
    if np.any((t_arr <= 0) | (t_arr >= 1)):
        raise ValueError(f"t must lie in (0, 1), got {t}")
    if not isinstance(rate, RateFunction):
        rate = RateFunction(float(rate)) if float(rate) <= 1 else RateFunction(
            float(rate), closed_form_kappa(float(rate)), source="exact")
    a = rate.alpha
    if a > 1.0:
        out = t_arr ** (1.0 / a) * rate.kappa
    elif a == 1.0:
        out = t_arr * np.log(1.0 / t_arr) / math.pi
    else:
        out = t_arr
    return float(out) if np.ndim(out) == 0 else out


@dataclass
class SupConstant:
    """Monte Carlo ``kappa_alpha`` with a grid-halving diagnostic.

    ``coarse`` is the same estimator on every other grid point of the same
    paths. Unpacks as ``(kappa, stderr)``.
    """

    alpha: float
    kappa: float
    stderr: float
    samples: int
    steps: int
    coarse: float
    diff: float
    diff_stderr: float
    bridge: bool
    richardson: bool
    seed: int = 0

    def __iter__(self):
        return iter((self.kappa, self.stderr))

    @property
    def refinement_ok(self):
        """Halving the grid moves the estimate by less than 2 stderr."""
        return abs(self.diff) < 2.0 * self.stderr


def estimate_sup_constant(alpha, samples=1_000_000, steps=4096, seed=0, workers=1, bridge=None,
                          control=True, richardson=None):
    """Monte Carlo ``E sup_{[0,1]} B^alpha_1``.

    For ``alpha = 2`` the maximum of each Brownian bridge between grid points
    is sampled exactly (``bridge=True``), so the grid causes no bias. For
    ``alpha < 2`` the skeleton maximum is low by ``O(steps**(-1/alpha))``;
    ``richardson=True`` (default there) cancels that term using the halved
    grid, leaving ``O(1/steps)``.

    With ``control=True`` the estimator is ``mean(sup - X^+) + E X^+`` where
    ``X`` is the endpoint and ``E X^+ = Gamma(1 - 1/alpha)/pi``. The sup has
    infinite variance for ``alpha < 2`` but ``sup - X^+`` needs two large
    jumps to be large, so its variance is finite.
    """
    alpha = float(alpha)
    if not 1.0 < alpha <= 2.0:
        raise UndefinedConstant(f"the supremum constant needs 1 < alpha <= 2, got {alpha}")
    if steps < 4 or steps % 4:
        raise ValueError("steps must be a positive multiple of 4")
    bridge = (alpha == 2.0) if bridge is None else bool(bridge)
    if bridge and alpha != 2.0:
        raise ValueError("bridge maxima are exact only for alpha = 2")
    richardson = (not bridge) if richardson is None else bool(richardson)

    def chunk(lo, hi, rng):
        return kernels.sup_1d(alpha, steps, hi - lo, rng, bridge=bridge, coarse=True)

    sups = np.concatenate(run_chunks(chunk, samples, seed, f"kappa:{alpha}:{steps}", workers))
    s1, s2, s4 = sups[:, 0], sups[:, 1], sups[:, 2]
    if richardson:
        r = 1.0 / (2.0 ** (1.0 / alpha) - 1.0)
        fine, coarse = s1 + r * (s1 - s2), s2 + r * (s2 - s4)
    else:
        fine, coarse = s1, s2
    if control:
        plus = np.maximum(sups[:, 3], 0.0) - math.gamma(1.0 - 1.0 / alpha) / math.pi
        fine = fine - plus
        coarse = coarse - plus
    d = fine - coarse
    sq = math.sqrt(samples)
    return SupConstant(
        alpha, float(fine.mean()), float(fine.std(ddof=1) / sq), samples, steps,
        float(coarse.mean()), float(d.mean()), float(d.std(ddof=1) / sq), bridge, richardson, seed,
    )


def _cache_path():
    root = os.environ.get("CARNOT_HEAT_CACHE")
    base = Path(root) if root else Path.home() / ".cache" / "carnot_heat"
    return base / "kappa.csv"


_CACHE_FIELDS = ["alpha", "steps", "samples", "seed", "kappa", "stderr"]


def cached_sup_constant(alpha, samples, steps, seed=0, path=None, workers=1):
    """``(kappa, stderr)`` from the cache file, computing and appending on a miss."""
    path = Path(path) if path else _cache_path()
    key = (f"{float(alpha):.6g}", str(int(steps)), str(int(samples)), str(int(seed)))
    if path.exists():
        with path.open(newline="") as fh:
            for row in csv.DictReader(fh):
                if (row["alpha"], row["steps"], row["samples"], row["seed"]) == key:
                    return float(row["kappa"]), float(row["stderr"])
    est = estimate_sup_constant(alpha, samples, steps, seed, workers)
    path.parent.mkdir(parents=True, exist_ok=True)
    new = not path.exists()
    with path.open("a", newline="") as fh:
        w = csv.writer(fh)
        if new:
            w.writerow(_CACHE_FIELDS)
        w.writerow(list(key) + [repr(est.kappa), repr(est.stderr)])
    return est.kappa, est.stderr


# Laplace, scaling and tail checks


def check_laplace(alpha, lambdas=(0.5, 1.0, 2.0, 4.0), ts=(0.5, 1.0), samples=1_000_000, seed=0, workers=1):
    """Empirical ``E exp(-lam S_t)`` against ``exp(-t lam**(alpha/2))``.

    Returns rows ``(lam, t, empirical, stderr, exact, ok)`` with
    ``ok = |empirical - exact| < 3 stderr``.
    """
    rows = []
    for t in ts:
        s = draw_subordinator(alpha, t, samples, seed, f"laplace:{alpha}:{t}", workers)
        for lam in lambdas:
            v = np.exp(-lam * s)
            emp = float(v.mean())
            se = float(v.std(ddof=1) / math.sqrt(samples))
            exact = math.exp(-t * lam ** (alpha / 2.0))
            ok = abs(emp - exact) < 3.0 * se if se > 0 else abs(emp - exact) < 1e-12
            rows.append((float(lam), float(t), emp, se, exact, bool(ok)))
    return rows


def check_self_similarity(alpha, t=0.3, samples=200_000, seed=0, level=1e-3):
    """KS two-sample test of ``S_t / t**(2/alpha)`` against ``S_1``; returns ``(pvalue, ok)``."""
    a = draw_subordinator(alpha, t, samples, seed, "selfsim:a") / t ** (2.0 / alpha)
    b = draw_subordinator(alpha, 1.0, samples, seed, "selfsim:b")
    p = float(stats.ks_2samp(a, b).pvalue)
    return p, p > level


def check_density_tail(alpha, samples=1_000_000, seed=0, u_grid=None):
    """Slope of ``log P(S_1 > u)`` against ``log u`` over ``u in [10, 1000]``.

    Returns ``(slope, ok)`` with ``ok`` meaning the slope is within 0.1 of
    ``-alpha/2``.
    """
    u = np.geomspace(10, 1000, 9) if u_grid is None else np.asarray(u_grid, dtype=float)
    s = np.sort(draw_subordinator(alpha, 1.0, samples, seed, "tail"))
    tail = 1.0 - np.searchsorted(s, u, side="right") / samples
    keep = tail > 0
    slope = float(np.polyfit(np.log(u[keep]), np.log(tail[keep]), 1)[0])
    return slope, abs(slope + alpha / 2.0) <= 0.1


@dataclass
class ExpMomentReport:
    alpha: float
    theta1: float
    theta2: float
    r_grid: np.ndarray
    t_grid: np.ndarray
    values: np.ndarray  # shape (len(t), len(r))
    stderrs: np.ndarray
    slope: float
    expected_slope: float
    prefactor: float
    passed: bool


def check_exp_moment(alpha, theta1, theta2, r_grid, t_grid, samples=200_000, seed=0):
    """``E exp(-r**th1 / S_t**th2)`` on a grid and its decay in ``r``.

    The slope is fitted over the upper half of ``r_grid`` at the first ``t``;
    the check asks for ``slope <= -alpha th1 / (2 th2) + 0.1``. The prefactor
    is the smallest ``C`` with ``value <= C min(1, t r**(-alpha th1/(2 th2)))``
    on the grid.
    """
    if theta1 <= 0 or theta2 <= 0:
        raise ValueError("theta1 and theta2 must be positive")
    r = np.asarray(r_grid, dtype=float)
    ts = np.asarray(t_grid, dtype=float)
    vals = np.empty((len(ts), len(r)))
    ses = np.empty_like(vals)
    for i, t in enumerate(ts):
        s = draw_subordinator(alpha, t, samples, seed, f"expmoment:{i}")
        with np.errstate(over="ignore", divide="ignore"):
            e = np.exp(-np.outer(1.0 / s**theta2, r**theta1))
        vals[i] = e.mean(axis=0)
        ses[i] = e.std(axis=0, ddof=1) / math.sqrt(samples)
    expo = alpha * theta1 / (2.0 * theta2)
    upper = r >= np.median(r)
    keep = upper & (vals[0] > 0)
    slope = float(np.polyfit(np.log(r[keep]), np.log(vals[0, keep]), 1)[0]) if keep.sum() >= 2 else float("nan")
    env = np.minimum(1.0, np.outer(ts, r ** (-expo)))
    prefactor = float(np.max(vals / env))
    return ExpMomentReport(float(alpha), float(theta1), float(theta2), r, ts, vals, ses, slope, -expo,
                           prefactor, bool(slope <= -expo + 0.1))


@dataclass
class IntegralReport:
    t_grid: np.ndarray
    first: np.ndarray  # int_0^R E exp(-r^th1 / S^th2) dr / mu
    second: np.ndarray  # int_0^R r^kappa E exp(-r^2 / S) dr / mu
    first_stderr: np.ndarray
    second_stderr: np.ndarray
    decreasing: bool
    tenfold: bool

    @property
    def passed(self):
        return self.decreasing and self.tenfold


def _int_exp(s, theta1, R):
    # int_0^R exp(-r^th1 / s) dr, per sample s
    a = 1.0 / theta1
    return s**a * a * special.gamma(a) * special.gammainc(a, R**theta1 / s)


def _int_poly_gauss(s, kappa, R):
    # int_0^R r^kappa exp(-r^2 / s) dr, per sample s
    a = 0.5 * (kappa + 1.0)
    return 0.5 * s**a * special.gamma(a) * special.gammainc(a, R * R / s)


def check_integral_asymptotics(alpha, theta1, theta2, kappa, R, t_grid, samples=200_000, seed=0):
    """Both appendix integrals divided by ``mu_alpha(t)`` along a decreasing ``t_grid``.

    The ``r``-integrals are done in closed form per subordinator sample
    (incomplete gamma functions), so only the expectation is Monte Carlo.
    ``decreasing`` asks each ratio sequence to decrease; ``tenfold`` asks the
    last ratio to be below a tenth of the first.
    """
    alpha = float(alpha)
    if not 1.0 <= alpha < 2.0:
        raise ValueError(f"need 1 <= alpha < 2, got {alpha}")
    if not 2.0 * theta2 > theta1 or theta1 <= 0 or theta2 <= 0:
        raise ValueError("need theta1, theta2 > 0 with 2 theta2 > theta1")
    if kappa <= 0 or R <= 0:
        raise ValueError("kappa and R must be positive")
    ts = np.asarray(t_grid, dtype=float)
    if np.any(np.diff(ts) >= 0):
        raise ValueError("t_grid must be strictly decreasing")
    rate = RateFunction(alpha, closed_form_kappa(alpha), source="exact") if alpha > 1 else RateFunction(alpha)
    first, second, fse, sse = [], [], [], []
    for i, t in enumerate(ts):
        s = draw_subordinator(alpha, t, samples, seed, f"integrals:{i}")
        mu = mu_alpha(rate, t)
        a = _int_exp(s**theta2, theta1, R) / mu
        b = _int_poly_gauss(s, kappa, R) / mu
        first.append(a.mean())
        second.append(b.mean())
        fse.append(a.std(ddof=1) / math.sqrt(samples))
        sse.append(b.std(ddof=1) / math.sqrt(samples))
    first, second = np.array(first), np.array(second)
    dec = bool(np.all(np.diff(first) < 0) and np.all(np.diff(second) < 0))
    ten = bool(first[-1] < first[0] / 10 and second[-1] < second[0] / 10)
    return IntegralReport(ts, first, second, np.array(fse), np.array(sse), dec, ten)
