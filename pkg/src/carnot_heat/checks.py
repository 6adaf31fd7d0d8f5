"""Numerical checks of the exit-probability estimates and the small-time limit lemmas.

All path statistics are simulated once on ``[0, 1]`` and rescaled: the
process is self-similar under dilations, ``sup_{s<=t} d(B(s), 0)`` has the
law of ``t**(1/alpha) sup_{s<=1} d(B(s), 0)``, and the discretized process
(``M`` grid steps over the horizon) has the same property exactly. So one
sample serves the whole ``t`` grid.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .rng import run_chunks
from .stable import RateFunction, mu_alpha

__all__ = [
    "BoundForm",
    "check_martingale_bound",
    "fit_exit_bound_constants",
    "check_tail_order",
    "check_sup_expectation_limits",
    "sup_sample",
]

CHECK_NSUB = 4


def sup_sample(g, alpha, n, steps=512, seed=0, workers=1, nsub=CHECK_NSUB):
    """``(sup x_1, sup d_inf)`` over ``[0, 1]`` for ``n`` paths from the origin, shape ``(n, 2)``."""

    def chunk(lo, hi, rng):
        return kernels.sup_stats(g, alpha, 1.0, steps, hi - lo, rng, nsub)

    return np.concatenate(run_chunks(chunk, n, seed, f"sup:{alpha!r}", workers))


def _prob(sup1, level):
    """Empirical ``P(sup1 > level)`` and stderr, vectorized over ``level``."""
    s = np.sort(sup1)
    n = len(s)
    p = (n - np.searchsorted(s, level, side="right")) / n
    return p, np.sqrt(p * (1 - p) / n)


# bound shapes


@dataclass(frozen=True)
class BoundForm:
    """``exp(-R**2/(c t)) + sum exp(-R**th1 / (c t**th2))`` over ``terms``."""

    terms: tuple
    c: float = 1.0
    beta: float = 1.0
    gaussian: bool = True

    @classmethod
    def theorem(cls, step, beta=1.0, c=1.0):
        """Terms produced by layers ``2..step``: the ``G_p`` and ``G~_p`` shapes for ``p < step``."""
        b = float(beta)
        terms = []
        for p in range(1, step):
            terms += [
                (p * b, b * (p + 1) / 2 + 1),
                (p * b, p * b / 2 + 1),
                (b * (p + 1) + 2, b * p / 2 + b + 2),
                (b * p + 2, b * p / 2 + 2),
            ]
        return cls(tuple(terms), float(c), b)

    def with_constants(self, c, beta=None):
        if beta is None or beta == self.beta:
            return BoundForm(self.terms, float(c), self.beta, self.gaussian)
        step = 1 + len(self.terms) // 4
        return BoundForm.theorem(step, beta, c)

    def structure_ok(self):
        """Every non-Gaussian term decays faster than Gaussian scaling: ``th2 / th1 > 1/2``."""
        return all(th2 / th1 > 0.5 for th1, th2 in self.terms)

    def __call__(self, R, t):
        R = np.asarray(R, dtype=float)
        t = np.asarray(t, dtype=float)
        total = np.exp(-(R**2) / (self.c * t)) if self.gaussian else np.zeros(np.broadcast(R, t).shape)
        for th1, th2 in self.terms:
            total = total + np.exp(-(R**th1) / (self.c * t**th2))
        return total


# martingale bound


@dataclass
class BoundReport:
    R: np.ndarray
    t: np.ndarray
    empirical: np.ndarray
    stderr: np.ndarray
    bound: np.ndarray
    seed: int
    samples: int
    steps: int
    params: dict = field(default_factory=dict)

    @property
    def margin(self):
        return self.bound - self.empirical

    @property
    def violations(self):
        return int(np.count_nonzero(self.empirical > self.bound + 3 * self.stderr))

    @property
    def passed(self):
        return self.violations == 0

    def rows(self):
        return [
            (float(r), float(t), float(e), float(b), float(b - e))
            for r, t, e, b in zip(self.R.ravel(), self.t.ravel(), self.empirical.ravel(), self.bound.ravel())
        ]


def check_martingale_bound(g, R_grid=(0.25, 0.5, 1.0, 2.0, 3.0), t_grid=(0.01, 0.1, 0.5, 1.0), samples=100_000,
                           steps=1024, seed=0, workers=1):
    """``P(sup_{s<=t} |W_H(s)| >= R) <= 2 exp(-R**2 / (2 m t))`` for standard Brownian motion.

    ``W_H`` is the horizontal part of the group driver divided by sqrt 2, so
    it has variance ``t`` per coordinate. The check is uniform over the grid.
    """
    m = g.m

    def chunk(lo, hi, rng):
        n = hi - lo
        out = np.zeros(n)
        w = np.zeros((n, m))
        for _ in range(steps):
            w += rng.standard_normal((n, m)) * math.sqrt(1.0 / steps)
            np.maximum(out, np.sqrt(np.sum(w * w, axis=1)), out=out)
        return out

    sup1 = np.concatenate(run_chunks(chunk, samples, seed, "martingale", workers))
    R, T = np.meshgrid(np.asarray(R_grid, float), np.asarray(t_grid, float), indexing="ij")
    p, se = _prob(sup1, (R / np.sqrt(T)).ravel())
    bound = 2.0 * np.exp(-(R**2) / (2 * m * T))
    return BoundReport(R, T, p.reshape(R.shape), se.reshape(R.shape), bound, seed, samples, steps, {"m": m})


# exit-bound calibration


@dataclass
class CalibrationReport:
    betas: tuple
    fitted: dict
    best: tuple
    grid: BoundReport
    form: BoundForm
    c_max: float

    @property
    def passed(self):
        return self.best is not None and self.form.structure_ok()


def _dominates(form, R, T, emp, se, use):
    return bool(np.all((form(R, T) >= emp + 3 * se)[use]))


def fit_exit_bound_constants(g, form=None, R_grid=(0.5, 1.0, 2.0, 3.0, 4.0), t_grid=(0.01, 0.03, 0.1, 0.3, 1.0),
                             betas=(0.5, 1.0, 2.0), samples=100_000, steps=512, seed=0, workers=1, c_max=1e3,
                             min_ratio=0.0):
    """Smallest ``c`` per ``beta`` such that the bound dominates ``P(sup d_inf > R)`` on the grid.

    The bound is increasing in ``c``, so the smallest dominating ``c`` is
    found by bisection in ``log c`` on ``[1e-3, c_max]``. ``best`` is the
    ``(c, beta)`` pair with the smallest ``c``, or None if nothing dominates.
    Cells with ``R / sqrt(t) < min_ratio`` are left out: the estimate is only
    claimed for ``R`` beyond a multiple of ``sqrt(t)``, and a single Gaussian
    term can never dominate a probability of one.
    """
    form = form or BoundForm.theorem(g.step)
    sup1 = sup_sample(g, 2.0, samples, steps, seed, workers)[:, 1]
    R, T = np.meshgrid(np.asarray(R_grid, float), np.asarray(t_grid, float), indexing="ij")
    p, se = _prob(sup1, (R / np.sqrt(T)).ravel())
    p, se = p.reshape(R.shape), se.reshape(R.shape)
    use = R / np.sqrt(T) >= min_ratio
    fitted = {}
    for b in betas:
        lo, hi = math.log(1e-3), math.log(c_max)
        if not _dominates(form.with_constants(c_max, b), R, T, p, se, use):
            fitted[b] = None
            continue
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if _dominates(form.with_constants(math.exp(mid), b), R, T, p, se, use):
                hi = mid
            else:
                lo = mid
        fitted[b] = math.exp(hi)
    ok = {b: c for b, c in fitted.items() if c is not None}
    best = None
    if ok:
        b = min(ok, key=ok.get)
        best = (ok[b], b)
    shown = form.with_constants(*best) if best else form
    grid = BoundReport(R, T, p, se, shown(R, T), seed, samples, steps, {"group": g.name, "min_ratio": min_ratio})
    return CalibrationReport(tuple(betas), fitted, best, grid, shown, c_max)


# tail lemmas


@dataclass
class TailReport:
    alpha: float
    R: float
    t: np.ndarray
    prob: np.ndarray
    stderr: np.ndarray
    slope: float
    resolution_limited: bool
    seed: int
    samples: int

    @property
    def passed(self):
        return self.resolution_limited or self.slope >= 0.9


def check_tail_order(g, alpha, R=1.0, t_grid=(1e-1, 3e-2, 1e-2, 3e-3, 1e-3), samples=100_000, steps=512, seed=0,
                     workers=1, fit_points=3):
    """Slope of ``log P(sup d_inf > R)`` against ``log t`` over the smallest resolved grid points."""
    t = np.asarray(t_grid, dtype=float)
    if np.any(np.diff(t) >= 0):
        raise ValueError("t grid must be decreasing")
    sup1 = sup_sample(g, alpha, samples, steps, seed, workers)[:, 1]
    p, se = _prob(sup1, R / t ** (1.0 / alpha))
    resolved = p > 0
    if resolved.sum() < 2:
        return TailReport(alpha, R, t, p, se, float("nan"), True, seed, samples)
    tt, pp = t[resolved][-fit_points:], p[resolved][-fit_points:]
    slope = float(np.polyfit(np.log(tt), np.log(pp), 1)[0])
    return TailReport(alpha, R, t, p, se, slope, False, seed, samples)


@dataclass
class ExpectationReport:
    alpha: float
    R: float
    kappa: float
    t: np.ndarray
    ratio_sup: np.ndarray
    ratio_sup_stderr: np.ndarray
    ratio_moment: np.ndarray
    ratio_moment_stderr: np.ndarray
    seed: int
    samples: int

    @property
    def sup_ok(self):
        return abs(self.ratio_sup[-1] - 1.0) <= 0.1

    @property
    def moment_ok(self):
        return bool(np.all(np.diff(self.ratio_moment) < 0) and self.ratio_moment[-1] < 0.1)

    @property
    def passed(self):
        return self.sup_ok and self.moment_ok


def check_sup_expectation_limits(g, alpha, R=1.0, kappa=1.0, t_grid=(1e-2, 1e-3, 1e-4, 1e-5), samples=100_000,
                                 steps=1024, seed=0, workers=1, rate=None):
    """Two limits along a decreasing ``t`` grid.

    (i) ``E[sup x_1 ; sup d_inf <= R] / mu_alpha(t)`` should approach 1;
    (ii) ``E[(sup d_inf)**(1 + kappa) ^ R] / mu_alpha(t)`` should decrease to 0.
    """
    if not 1.0 <= alpha <= 2.0:
        raise ValueError("the limits are stated for 1 <= alpha <= 2")
    rate = rate or RateFunction.for_alpha(alpha, source="exact" if alpha == 2.0 else "mc")
    t = np.asarray(t_grid, dtype=float)
    s = sup_sample(g, alpha, samples, steps, seed, workers)
    sq = math.sqrt(samples)
    r1, e1, r2, e2 = [], [], [], []
    for tt in t:
        scale = tt ** (1.0 / alpha)
        mu = float(mu_alpha(rate, tt))
        a = scale * s[:, 0] * (scale * s[:, 1] <= R) / mu
        b = np.minimum((scale * s[:, 1]) ** (1.0 + kappa), R) / mu
        r1.append(a.mean())
        e1.append(a.std(ddof=1) / sq)
        r2.append(b.mean())
        e2.append(b.std(ddof=1) / sq)
    return ExpectationReport(alpha, R, kappa, t, np.array(r1), np.array(e1), np.array(r2), np.array(e2), seed,
                             samples)
