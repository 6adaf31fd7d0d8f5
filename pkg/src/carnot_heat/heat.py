"""Monte Carlo heat content and the small-time ratio.

``Q(t) = int_Omega P_x(no exit by time t) dx`` is estimated from start
points in the bounding box. The quantity of interest is the loss
``|Omega| - Q(t)``, which is of order ``mu_alpha(t)``; it is estimated
directly from one point cloud so that ``|Omega|`` and ``Q`` share noise.

Start points are stratified by ``d(x) = phi / |grad_H phi|`` in geometric
bands of ``t**(1/alpha)``. A small pilot run estimates the spread of the
loss in each band and the remaining budget is allocated in proportion to
band volume times spread (Neyman allocation). For ``alpha < 2`` the bands
reach out to the size of the domain, because jumps make far starts
contribute a fixed fraction of the loss. Band volumes come from the same
uniform candidate stream that supplies the points.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .calculus import SmoothFunction, indicator, mollify
from .groups import GroupError
from .rng import run_chunks, stream
from .stable import RateFunction, mu_alpha

__all__ = [
    "HeatContentEstimate",
    "RatioCurve",
    "estimate_Q",
    "estimate_Q_f",
    "ratio_curve",
    "verify_lower_bound",
    "verify_mollification_monotonicity",
    "verify_smooth_limit",
    "interval_heat_content",
    "interval_survival",
    "default_t_grid",
]

@dataclass
class HeatContentEstimate:
    """One heat-content estimate; ``loss = volume - Q`` with its own stderr."""

    t: float
    alpha: float
    Q: float
    stderr: float
    loss: float
    loss_stderr: float
    volume: float
    n_starts: int
    steps: int
    domain: str
    seed: int
    bridge: bool = False
    design: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 0 < self.t < 1:
            raise ValueError("t must lie in (0, 1)")


BAND_EDGES = {
    "brownian": (0.0, 0.5, 1.0, 2.0, 3.0, 5.0, np.inf),
    "stable": (0.0, 1.0, 3.0, 10.0, 30.0, 100.0, 300.0, 1e3, 3e3, 1e4, np.inf),
}
PILOT_FRACTION = 0.1
MIN_BAND = 64
CANDIDATE_CHUNK = 1 << 18
MAX_CHUNKS = 4096


class _Candidates:
    """Uniform box points sorted into bands, kept in arrival order up to a quota."""

    def __init__(self, g, domain, edges, seed, label):
        self.g, self.domain, self.edges = g, domain, np.asarray(edges, dtype=float)
        self.seed, self.label = seed, label
        self.nb = len(edges) - 1
        self.kept = [[] for _ in range(self.nb)]
        self.have = np.zeros(self.nb, dtype=int)
        self.counts = np.zeros(self.nb, dtype=np.int64)
        self.chunks = 0

    @property
    def total(self):
        return self.chunks * CANDIDATE_CHUNK

    def _next_chunk(self, quota):
        lo, hi = self.domain.box
        x = stream(self.seed, self.label, self.chunks).uniform(lo, hi, size=(CANDIDATE_CHUNK, self.domain.dim))
        phi = np.asarray(self.domain.level(x))
        inside = phi > 0
        x, phi = x[inside], phi[inside]
        d = phi / np.maximum(self.domain.hgrad_norm(self.g, x), 1e-300)
        b = np.searchsorted(self.edges[1:-1], d, side="right")
        self.chunks += 1
        for j in range(self.nb):
            sel = x[b == j]
            self.counts[j] += len(sel)
            take = min(len(sel), quota[j] - self.have[j])
            if take > 0:
                self.kept[j].append(sel[:take])
                self.have[j] += take

    def fill(self, quota):
        """Draw chunks until each band meets its quota or is too thin to fill within the cap."""
        quota = np.asarray(quota, dtype=int)
        while True:
            short = self.have < quota
            if not short.any():
                break
            if self.chunks >= 16:
                rate = self.counts / self.total
                reachable = rate * MAX_CHUNKS * CANDIDATE_CHUNK >= quota
                if not np.any(short & reachable):
                    break
            if self.chunks >= MAX_CHUNKS:
                break
            self._next_chunk(quota)

    def points(self, band, lo, hi):
        arr = np.concatenate(self.kept[band]) if self.kept[band] else np.empty((0, self.domain.dim))
        return arr[lo:hi]


def _tail_model(alpha, lo_edges, ell, means, counts):
    """Exit-probability floor per band from the tail of the running supremum.

    Brownian: ``erfc(d / 2 sqrt(t))`` at the inner edge. Stable: ``c (d/ell)**-alpha``
    with ``c`` the largest value seen in pilot bands that recorded exits.
    """
    rel = np.maximum(lo_edges / ell, 1e-12)
    if alpha == 2.0:
        return np.array([math.erfc(r / 2.0) for r in rel])
    ok = (counts >= 5) & (rel >= 1.0)
    c = float(np.max(means[ok] * rel[ok] ** alpha)) if ok.any() else 1.0
    return np.minimum(1.0, c * rel**-alpha)


def _survival_batch(g, fn, starts, alpha, t, M, seed, label, workers, mode, bridge, gcap, early_exit=True):
    if len(starts) == 0:
        return np.empty(0)

    def chunk(lo, hi, rng):
        return kernels.survival(g, fn, starts[lo:hi], alpha, t, M, rng, mode, bridge, gcap, early_exit=early_exit)

    return np.concatenate(run_chunks(chunk, len(starts), seed, label, workers))


def estimate_Q(g, domain, alpha, t, samples=200_000, steps=512, seed=0, workers=1, bridge=None,
               stratify=True):
    """Heat content ``Q(t)`` of ``domain`` for the subordinated process.

    ``bridge`` (default: on for ``alpha = 2``) multiplies the survival weight
    of each Brownian step by the probability that the bridge between the two
    grid points does not cross the locally linearized boundary. With
    ``stratify=False`` start points are plain uniform box samples.
    """
    alpha = float(alpha)
    if not 0 < t < 1:
        raise ValueError(f"t must lie in (0, 1), got {t}")
    if g.dim != domain.dim:
        raise GroupError(f"domain {domain.name} has dimension {domain.dim}, group has {g.dim}")
    bridge = (alpha == 2.0) if bridge is None else bool(bridge)
    if bridge and alpha != 2.0:
        raise ValueError("the bridge correction applies to alpha = 2 only")
    gcap = domain.gradient_cap(g) if bridge else np.inf
    box = domain.box_volume

    def run(x, label):
        return _survival_batch(g, domain.level, x, alpha, t, steps, seed, label, workers, 0, bridge, gcap)

    if not stratify:
        lo, hi = domain.box
        x = np.concatenate(run_chunks(lambda a, b, rng: rng.uniform(lo, hi, size=(b - a, domain.dim)),
                                      samples, seed, "starts-uniform"))
        w = run(x, "paths")
        inside = domain.contains(x).astype(float)
        sq = math.sqrt(samples)
        q = box * w
        lossv = box * (inside - w)
        return HeatContentEstimate(
            t, alpha, float(q.mean()), float(q.std(ddof=1) / sq), float(lossv.mean()),
            float(lossv.std(ddof=1) / sq), float(box * inside.mean()), samples, steps, domain.name,
            seed, bridge, {"stratified": False},
        )

    ell = t ** (1.0 / alpha)
    edges = np.asarray(BAND_EDGES["brownian" if alpha == 2.0 else "stable"]) * ell
    cand = _Candidates(g, domain, edges, seed, f"starts:{t!r}")
    nb = cand.nb

    # pilot: equal share per band, used only to choose the allocation
    n_pilot = max(MIN_BAND, int(PILOT_FRACTION * samples) // nb)
    cand.fill(np.full(nb, n_pilot))
    live = cand.counts > 0
    means = np.zeros(nb)
    events = np.zeros(nb)
    for b in np.flatnonzero(live):
        loss = 1.0 - run(cand.points(b, 0, n_pilot), f"pilot:{b}")
        means[b] = loss.mean()
        events[b] = np.count_nonzero(loss > 0.5)
    prior = _tail_model(alpha, edges[:-1], ell, means, events)
    p_hat = np.where(events >= 5, means, np.maximum(means, prior))
    spread = np.sqrt(np.clip(p_hat * (1.0 - p_hat), 1e-12, None))
    score = np.where(live, cand.counts / cand.total * spread, 0.0)
    budget = max(samples - n_pilot * int(live.sum()), MIN_BAND * int(live.sum()))
    alloc = np.where(live, np.maximum(MIN_BAND, np.round(budget * score / score.sum())), 0).astype(int)
    cand.fill(n_pilot + alloc)

    m_loss = np.zeros(nb)
    v_loss = np.zeros(nb)
    sizes = np.zeros(nb, dtype=int)
    for b in np.flatnonzero(live):
        x = cand.points(b, n_pilot, n_pilot + alloc[b])
        sizes[b] = len(x)
        if len(x) == 0:
            continue
        loss = 1.0 - run(x, f"paths:{b}")
        m_loss[b] = loss.mean()
        v_loss[b] = loss.var(ddof=1) / len(x) if len(x) > 1 else loss.mean() ** 2
    p = cand.counts / cand.total
    V = box * p
    loss = float(np.sum(V * m_loss))
    vol = float(V.sum())
    # multinomial band-volume noise plus within-band path noise
    path_var = float(np.sum(V**2 * v_loss))
    var_loss = box**2 / cand.total * (np.sum(p * m_loss**2) - np.sum(p * m_loss) ** 2) + path_var
    m_q = np.where(live, 1.0 - m_loss, 0.0)
    var_q = box**2 / cand.total * (np.sum(p * m_q**2) - np.sum(p * m_q) ** 2) + path_var
    return HeatContentEstimate(
        t, alpha, vol - loss, math.sqrt(max(var_q, 0.0)), loss, math.sqrt(max(var_loss, 0.0)), vol,
        int(sizes.sum()), steps, domain.name, seed, bridge,
        {"stratified": True, "band_edges": edges.tolist(), "band_sizes": sizes.tolist(),
         "band_volumes": V.tolist(), "band_loss": m_loss.tolist(), "candidates": int(cand.total),
         "pilot_per_band": n_pilot},
    )


def estimate_Q_f(g, f, alpha, t, samples=200_000, steps=512, seed=0, workers=1, box=None, early_exit=True):
    """``Q_f(t) = int E_x[min_{s <= t} f(B_s)] dx`` over uniform starts in the support box.

    The loss ``int f - Q_f`` is estimated from the same starts. Start points
    and path streams match ``estimate_Q(..., stratify=False, bridge=False)``,
    so an indicator gives the identical number.
    """
    alpha = float(alpha)
    if not 0 < t < 1:
        raise ValueError(f"t must lie in (0, 1), got {t}")
    if not isinstance(f, SmoothFunction):
        box = box or f.box
        f = indicator(f)
    if box is None:
        if f.support is None:
            raise ValueError("estimate_Q_f needs a compactly supported function or an explicit box")
        box = f.support
    lo, hi = (np.asarray(b, dtype=float) for b in box)
    vol = float(np.prod(hi - lo))
    x = np.concatenate(run_chunks(lambda a, b, rng: rng.uniform(lo, hi, size=(b - a, f.dim)),
                                  samples, seed, "starts-uniform"))
    f0 = np.asarray(f(x), dtype=float)
    if np.any(f0 < 0):
        raise ValueError(f"{f.name} takes negative values; Q_f needs f >= 0")
    mins = _survival_batch(g, f, x, alpha, t, steps, seed, "paths", workers, 1, False, np.inf, early_exit)
    if f.smoothness == "indicator":
        mins = (mins > 0) * 1.0
    sq = math.sqrt(samples)
    q = vol * mins
    lossv = vol * (f0 - mins)
    return HeatContentEstimate(
        t, alpha, float(q.mean()), float(q.std(ddof=1) / sq), float(lossv.mean()),
        float(lossv.std(ddof=1) / sq), float(vol * f0.mean()), samples, steps, f.name, seed, False,
        {"stratified": False, "box": [lo.tolist(), hi.tolist()]},
    )


# ratio curve


@dataclass
class RatioCurve:
    t: np.ndarray
    ratio: np.ndarray
    stderr: np.ndarray
    estimates: list
    limit: float
    limit_stderr: float
    exponent: float
    method: str
    free_exponent: float = float("nan")

    def rows(self):
        return [(e.t, e.Q, e.stderr, r, s) for e, r, s in zip(self.estimates, self.ratio, self.stderr)]


def default_t_grid(alpha, count=6):
    """Geometric grid from ``1e-2`` down to ``1e-5`` (``1e-4`` for ``alpha = 2``)."""
    stop = 1e-4 if alpha == 2.0 else 1e-5
    return np.geomspace(1e-2, stop, count)


def correction_exponent(alpha):
    """Leading correction to the ratio: ``t**(1/2)`` for Brownian motion.

    For ``alpha < 2`` the jump part of the loss from starts at distance of
    order one is ``O(t)``, i.e. ``t**(1 - 1/alpha)`` relative to
    ``mu_alpha``, which dominates the ``t**(1/alpha)`` curvature term.
    """
    return 0.5 if alpha == 2.0 else 1.0 - 1.0 / alpha


def _weighted_fit(x, y, s):
    A = np.stack([np.ones_like(x), x], axis=1)
    W = 1.0 / np.maximum(s, 1e-300) ** 2
    cov = np.linalg.inv(A.T @ (W[:, None] * A))
    coef = cov @ (A.T @ (W * y))
    return coef, cov


def _free_exponent(t, r, s):
    best = (np.inf, float("nan"))
    for gam in np.linspace(0.1, 1.5, 57):
        coef, _ = _weighted_fit(t**gam, r, s)
        res = np.sum(((r - coef[0] - coef[1] * t**gam) / s) ** 2)
        if res < best[0]:
            best = (res, float(gam))
    return best[1]


def ratio_curve(g, domain, alpha, t_grid=None, samples=200_000, steps=512, seed=0, workers=1, rate=None,
                exponent=None, bridge=None):
    """``R(t) = (|Omega| - Q(t)) / mu_alpha(t)`` on a decreasing grid and its extrapolated limit.

    The limit is the intercept of a weighted fit ``R = L + a t**gamma`` with
    ``gamma = exponent`` (default :func:`correction_exponent`).
    """
    alpha = float(alpha)
    t_grid = default_t_grid(alpha) if t_grid is None else np.asarray(t_grid, dtype=float)
    if np.any(np.diff(t_grid) >= 0) or np.any((t_grid <= 0) | (t_grid >= 1)):
        raise ValueError("t grid must be strictly decreasing inside (0, 1)")
    rate = rate or RateFunction.for_alpha(alpha)
    gam = correction_exponent(alpha) if exponent is None else float(exponent)
    ests, R, S = [], [], []
    for t in t_grid:
        e = estimate_Q(g, domain, alpha, t, samples, steps, seed, workers, bridge)
        mu = mu_alpha(rate, t)
        r = e.loss / mu
        ests.append(e)
        R.append(r)
        S.append(math.hypot(e.loss_stderr / mu, r * rate.relative_error()))
    R, S = np.array(R), np.array(S)
    if len(t_grid) >= 3:
        coef, cov = _weighted_fit(t_grid**gam, R, S)
        limit, lse = float(coef[0]), float(math.sqrt(cov[0, 0]))
        free = _free_exponent(t_grid, R, S)
    else:
        limit, lse, free = float(R[-1]), float(S[-1]), float("nan")
    return RatioCurve(t_grid, R, S, ests, limit, lse, gam, f"fit L + a t^{gam:.4g}", free)


# verification drivers


@dataclass
class LowerBoundReport:
    t: float
    ratio: float
    stderr: float
    perimeter: float
    tol: float
    resolved: bool

    @property
    def passed(self):
        return self.resolved and self.ratio >= self.perimeter * (1 - self.tol) - 3 * self.stderr


def verify_lower_bound(g, domain, alpha, t_grid, perimeter, samples=200_000, steps=512, seed=0, workers=1,
                       rate=None, tol=0.1):
    """``R(t_min) >= |dOmega|_H (1 - tol) - 3 stderr``, asserted only once the loss exceeds 10 stderr."""
    t_grid = np.asarray(t_grid, dtype=float)
    rate = rate or RateFunction.for_alpha(alpha)
    t = float(t_grid.min())
    e = estimate_Q(g, domain, alpha, t, samples, steps, seed, workers)
    mu = mu_alpha(rate, t)
    r = e.loss / mu
    se = math.hypot(e.loss_stderr / mu, r * rate.relative_error())
    return LowerBoundReport(t, r, se, float(perimeter), tol, e.loss > 10 * e.loss_stderr)


@dataclass
class MollificationReport:
    eps: np.ndarray
    base: float
    base_stderr: float
    values: np.ndarray
    diffs: np.ndarray
    diff_stderrs: np.ndarray

    @property
    def passed(self):
        return bool(np.all(self.diffs >= -3 * self.diff_stderrs))


def verify_mollification_monotonicity(g, f, eps_grid, alpha, t, samples=20_000, steps=128, seed=0, workers=1,
                                      n_nodes=64):
    """``Q_{f_eps}(t) >= Q_f(t)`` up to 3 joint stderr, with shared starts and paths.

    Paths run to the end of the grid regardless of outcome, so every function
    sees the same random numbers.
    """
    base_f = f if isinstance(f, SmoothFunction) else indicator(f)
    eps_grid = np.asarray(eps_grid, dtype=float)
    molls = [mollify(g, f, e, n_nodes, seed) for e in eps_grid]
    lo = np.min([m.support[0] for m in molls] + [base_f.support[0]], axis=0)
    hi = np.max([m.support[1] for m in molls] + [base_f.support[1]], axis=0)
    box = (lo, hi)
    vol = float(np.prod(hi - lo))
    base = estimate_Q_f(g, base_f, alpha, t, samples, steps, seed, workers, box, early_exit=False)
    x = np.concatenate(run_chunks(lambda a, b, rng: rng.uniform(lo, hi, size=(b - a, g.dim)),
                                  samples, seed, "starts-uniform"))
    m0 = _survival_batch(g, base_f, x, alpha, t, steps, seed, "paths", workers, 1, False, np.inf, False)
    if base_f.smoothness == "indicator":
        m0 = (m0 > 0) * 1.0
    vals, diffs, dses = [], [], []
    sq = math.sqrt(samples)
    for m in molls:
        me = _survival_batch(g, m, x, alpha, t, steps, seed, "paths", workers, 1, False, np.inf, False)
        d = vol * (me - m0)
        vals.append(vol * me.mean())
        diffs.append(d.mean())
        dses.append(d.std(ddof=1) / sq)
    return MollificationReport(eps_grid, base.Q, base.stderr, np.array(vals), np.array(diffs), np.array(dses))


@dataclass
class SmoothLimitReport:
    t: float
    ratio: float
    stderr: float
    variation: float
    variation_stderr: float

    @property
    def rel_gap(self):
        return abs(self.ratio - self.variation) / self.variation


def verify_smooth_limit(g, f, alpha, t, variation, variation_stderr=0.0, samples=200_000, steps=512, seed=0,
                        workers=1, rate=None):
    """``(int f - Q_f(t)) / mu_alpha(t)`` next to ``Var_H(f)``."""
    rate = rate or RateFunction.for_alpha(alpha)
    e = estimate_Q_f(g, f, alpha, t, samples, steps, seed, workers)
    mu = mu_alpha(rate, t)
    r = e.loss / mu
    return SmoothLimitReport(t, r, math.hypot(e.loss_stderr / mu, r * rate.relative_error()),
                             float(variation), float(variation_stderr))


# interval oracle


def interval_survival(x, t, length=1.0):
    """``P_x(no exit from (0, L) by t)`` for Brownian motion with variance ``2t``."""
    x = np.asarray(x, dtype=float) / length
    tt = t / length**2
    K = int(math.sqrt(60.0 / (math.pi**2 * tt))) + 3
    k = np.arange(1, K + 1, 2, dtype=float)
    terms = 4.0 / (k * np.pi) * np.exp(-(k**2) * np.pi**2 * tt)
    return np.sin(np.multiply.outer(x, k) * np.pi) @ terms


def interval_heat_content(t, length=1.0):
    """``Q(t)`` of ``(0, L)``: ``L sum_{k odd} 8/(k pi)^2 exp(-k^2 pi^2 t / L^2)``."""
    tt = t / length**2
    K = int(math.sqrt(60.0 / (math.pi**2 * tt))) + 3
    k = np.arange(1, K + 1, 2, dtype=float)
    return float(length * np.sum(8.0 / (k * np.pi) ** 2 * np.exp(-(k**2) * np.pi**2 * tt)))
