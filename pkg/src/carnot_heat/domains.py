"""Level-set domains ``{phi > 0}`` and their horizontal perimeter.

Three perimeter estimators are provided and kept independent:

* ``boundary-quadrature``: tensor quadrature of ``|nu_H|`` over a boundary
  chart (trapezoid in periodic chart variables, Gauss-Legendre otherwise);
* ``shell-coarea``: ``(1/2 eta) int_{|phi - r| < eta} |grad_H phi| dx`` by
  randomized quasi-Monte Carlo, which tends to ``int_{phi = r} |nu_H| dH`` by
  the Euclidean coarea formula;
* ``mollified-variation``: ``Var_H(1_Omega * rho_eps)`` for a decreasing
  list of ``eps``, extrapolated to ``eps = 0`` by a fit in ``eps^2``.

Here ``|nu_H| = sqrt(sum_i <X_i, nu>^2) = |grad_H phi| / |grad phi|``.
"""
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import spatial
from scipy.stats import qmc

from .calculus import SmoothFunction, polynomial
from .groups import GroupError, dinf_norm, left_invariant_frame, multiply

__all__ = [
    "BoundaryChart",
    "LevelSetDomain",
    "PerimeterEstimate",
    "CharacteristicReport",
    "contains",
    "detect_characteristic_points",
    "horizontal_perimeter",
    "perimeter_continuity_scan",
    "nu_h",
    "interval",
    "ball",
    "superellipse",
    "h1_ball",
    "h1_torus",
    "hn_torus",
    "polynomial_domain",
    "domain_from_name",
    "METHODS",
]

METHODS = ("boundary-quadrature", "shell-coarea", "mollified-variation")


class EmptyLevel(ValueError):
    pass


@dataclass(frozen=True)
class BoundaryChart:
    """Map from ``[0, 1]^d`` onto the level set ``{phi = r}``.

    ``fn(u, r)`` returns points of shape ``(K, N)``. With ``d = 0`` the level
    set is a finite point set and ``fn(None, r)`` returns all of it.
    """

    fn: object
    dim: int
    periodic: tuple = ()

    def nodes(self, n):
        if self.dim == 0:
            return None, None
        axes = []
        for k in range(self.dim):
            if self.periodic[k]:
                u = (np.arange(n) + 0.5) / n
                w = np.full(n, 1.0 / n)
            else:
                x, w = np.polynomial.legendre.leggauss(n)
                u, w = 0.5 * (x + 1.0), 0.5 * w
            axes.append((u, w))
        grids = np.meshgrid(*[a[0] for a in axes], indexing="ij")
        weights = np.meshgrid(*[a[1] for a in axes], indexing="ij")
        u = np.stack([gr.ravel() for gr in grids], axis=1)
        w = np.prod(np.stack([wt.ravel() for wt in weights], axis=1), axis=1)
        return u, w

    def surface(self, n, r=0.0):
        """Boundary points, quadrature weights times surface element."""
        if self.dim == 0:
            pts = np.atleast_2d(self.fn(None, r))
            return pts, np.ones(len(pts))
        u, w = self.nodes(n)
        pts = self.fn(u, r)
        h = 1e-6
        cols = []
        for k in range(self.dim):
            e = np.zeros(self.dim)
            e[k] = h
            cols.append((self.fn(u + e, r) - self.fn(u - e, r)) / (2 * h))
        J = np.stack(cols, axis=-1)  # (K, N, d)
        gram = np.einsum("kna,knb->kab", J, J)
        return pts, w * np.sqrt(np.abs(np.linalg.det(gram)))


@dataclass(frozen=True, eq=False)
class LevelSetDomain:
    """``Omega = {phi > 0}`` inside an axis-aligned box."""

    level: SmoothFunction
    box: tuple
    name: str = "domain"
    chart: BoundaryChart = None
    exact_volume: float = None
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        lo, hi = (np.asarray(b, dtype=float) for b in self.box)
        if lo.shape != (self.level.dim,) or np.any(hi <= lo):
            raise ValueError(f"bad bounding box for {self.name}: {self.box}")
        object.__setattr__(self, "box", (lo, hi))
        if self.level.grad is None:
            raise ValueError("level function needs an analytic gradient")

    @property
    def dim(self):
        return self.level.dim

    @property
    def params(self):
        return self.level.params

    @property
    def phi(self):
        return self.level.value

    @property
    def jitted(self):
        return self.level.jitted

    @property
    def box_volume(self):
        lo, hi = self.box
        return float(np.prod(hi - lo))

    def __call__(self, x):
        return self.level(x)

    def contains(self, x):
        return np.asarray(self.level(x)) > 0.0

    def volume(self, n=1_000_000, seed=0):
        """Exact volume if known, else a Monte Carlo estimate over the box."""
        if self.exact_volume is not None:
            return self.exact_volume
        return self._mc_volume(n, seed)

    def _mc_volume(self, n, seed):
        rng = np.random.default_rng(seed)
        lo, hi = self.box
        hits = 0
        for a in range(0, n, 200_000):
            x = rng.uniform(lo, hi, size=(min(200_000, n - a), self.dim))
            hits += int(np.count_nonzero(self.contains(x)))
        return self.box_volume * hits / n

    def hgrad_norm(self, g, x):
        """``|grad_H phi|`` at points ``x``."""
        gr = self.level.gradient(x)
        frame = left_invariant_frame(g, x, g.m)
        return np.linalg.norm(np.einsum("...l,...li->...i", gr, frame), axis=-1)

    def nu_h(self, g, x):
        """``|grad_H phi| / |grad phi|``: length of the horizontal part of the unit normal."""
        return self.hgrad_norm(g, x) / np.linalg.norm(self.level.gradient(x), axis=-1)

    @cached_property
    def _caps(self):
        return {}

    def gradient_cap(self, g, n=20_000, seed=0):
        """Twice the largest sampled ``|grad_H phi|^2`` in the box."""
        key = id(g)
        if key not in self._caps:
            rng = np.random.default_rng(seed)
            lo, hi = self.box
            x = rng.uniform(lo, hi, size=(n, self.dim))
            self._caps[key] = 2.0 * float(np.max(self.hgrad_norm(g, x) ** 2))
        return self._caps[key]

    def boundary_points(self, n, seed=0, r=0.0):
        """Points on ``{phi = r}`` by bisection along chords between inside and outside samples."""
        rng = np.random.default_rng(seed)
        lo, hi = self.box
        inside, outside = [], []
        got_in = got_out = 0
        for _ in range(200):
            x = rng.uniform(lo, hi, size=(max(4 * n, 10_000), self.dim))
            v = np.asarray(self.level(x)) - r
            inside.append(x[v > 0])
            outside.append(x[v <= 0])
            got_in += len(inside[-1])
            got_out += len(outside[-1])
            if got_in >= n and got_out >= n:
                break
        if got_in == 0 or got_out == 0:
            raise EmptyLevel(f"{self.name}: no boundary found for level {r} in the box")
        a = np.concatenate(inside)
        b = np.concatenate(outside)
        a = a[rng.integers(0, len(a), n)]
        b = b[rng.integers(0, len(b), n)]
        for _ in range(60):
            mid = 0.5 * (a + b)
            pos = (np.asarray(self.level(mid)) - r) > 0
            a = np.where(pos[:, None], mid, a)
            b = np.where(pos[:, None], b, mid)
        return 0.5 * (a + b)


def contains(domain, x):
    return domain.contains(x)


def nu_h(g, domain, x):
    return domain.nu_h(g, x)


# characteristic points


@dataclass
class CharacteristicReport:
    points: np.ndarray
    ratios: np.ndarray
    probes: int
    tol: float
    min_ratio: float

    @property
    def empty(self):
        return len(self.points) == 0


def detect_characteristic_points(g, domain, tol=1e-3, probes=100_000, seed=0):
    """Boundary probes where ``|grad_H phi| / |grad phi| < tol``."""
    if not tol > 0:
        raise ValueError("tol must be positive")
    pts = domain.boundary_points(probes, seed)
    ratio = domain.nu_h(g, pts)
    bad = ratio < tol
    return CharacteristicReport(pts[bad], ratio[bad], probes, tol, float(ratio.min()))


# perimeter


@dataclass
class PerimeterEstimate:
    value: float
    stderr: float
    method: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.value < 0 or self.stderr < 0:
            raise ValueError("perimeter estimates are nonnegative")


def _quadrature(g, domain, nodes=256, r=0.0):
    if domain.chart is None:
        raise ValueError(f"{domain.name}: boundary quadrature needs a boundary chart")

    def at(n):
        pts, w = domain.chart.surface(n, r)
        return float(np.sum(w * domain.nu_h(g, pts)))

    v = at(nodes)
    if domain.chart.dim == 0:
        return PerimeterEstimate(v, 0.0, "boundary-quadrature", {"nodes": 0, "level": r})
    err = abs(v - at(max(nodes // 2, 4)))
    return PerimeterEstimate(v, err, "boundary-quadrature", {"nodes": nodes, "level": r})


def _shell_points(domain, n, replicates, seed):
    lo, hi = domain.box
    for k in range(replicates):
        sob = qmc.Sobol(domain.dim, scramble=True, seed=np.random.default_rng([seed, k]))
        yield lo + (hi - lo) * sob.random(n)


def _boundary_grad_scale(domain, seed):
    pts = domain.boundary_points(2000, seed)
    return float(np.median(np.linalg.norm(domain.level.gradient(pts), axis=-1)))


def _face_max(domain, n=4096, seed=0):
    """Largest ``phi`` seen on the faces of the bounding box."""
    rng = np.random.default_rng(seed)
    lo, hi = domain.box
    best = -np.inf
    for axis in range(domain.dim):
        for side in (lo[axis], hi[axis]):
            x = rng.uniform(lo, hi, size=(n, domain.dim))
            x[:, axis] = side
            best = max(best, float(np.max(domain.level(x))))
    return best


def _shell(g, domain, eps=0.01, n=1 << 20, replicates=8, seed=0, levels=(0.0,)):
    if not eps > 0:
        raise ValueError("shell width must be positive")
    if n & (n - 1):
        raise ValueError("shell-coarea sample count must be a power of two")
    eta = eps * _boundary_grad_scale(domain, seed)
    if min(levels) - eta <= _face_max(domain, seed=seed):
        raise EmptyLevel(f"{domain.name}: the shell around level {min(levels)} reaches the bounding box")
    vals = np.zeros((replicates, len(levels)))
    vol = domain.box_volume
    for k, x in enumerate(_shell_points(domain, n, replicates, seed)):
        phi = np.asarray(domain.level(x))
        near = np.zeros(len(x), dtype=bool)
        for r in levels:
            near |= np.abs(phi - r) < eta
        xs, ps = x[near], phi[near]
        gh = domain.hgrad_norm(g, xs)
        for j, r in enumerate(levels):
            sel = np.abs(ps - r) < eta
            vals[k, j] = vol * np.sum(gh[sel]) / n / (2 * eta)
    means = vals.mean(axis=0)
    ses = vals.std(axis=0, ddof=1) / math.sqrt(replicates)
    return [
        PerimeterEstimate(float(m), float(s), "shell-coarea",
                          {"eps": eps, "eta": eta, "n": n, "replicates": replicates, "level": r})
        for m, s, r in zip(means, ses, levels)
    ]


def _rho_norm_constant(g, n=1 << 16, seed=0):
    # int over the unit d_inf ball of (1 - ||y||^2)^3 dy
    sob = qmc.Sobol(g.dim, scramble=True, seed=seed)
    u = 2.0 * sob.random(n) - 1.0
    r = dinf_norm(g, u)
    return (2.0**g.dim) * float(np.mean(np.clip(1.0 - r**2, 0.0, None) ** 3))


def _mollified_variation_at(g, domain, eps, nodes, samples, seed, replicates=8):
    """``Var_H(1_Omega * rho_eps)`` by importance sampling near the boundary.

    ``X_i f_eps(x) = -int_{dOmega} rho_eps(x p^{-1}) <X_i(p), nu(p)> dH(p)``.
    Points ``x = y * p`` with ``p`` drawn from the surface measure and ``y``
    from ``rho_eps`` have density ``G(x)/A`` with
    ``G(x) = int rho_eps(x p^{-1}) dH(p)``, so the variation equals
    ``A * E[|F(x)| / G(x)]``.
    """
    if g.step > 2:
        raise GroupError("mollified-variation is implemented for step <= 2")
    if domain.chart is None:
        raise ValueError(f"{domain.name}: mollified-variation needs a boundary chart")
    pts, w = domain.chart.surface(nodes)
    gr = domain.level.gradient(pts)
    nu = gr / np.linalg.norm(gr, axis=-1, keepdims=True)
    frame = left_invariant_frame(g, pts, g.m)
    nuh = np.einsum("kl,kli->ki", nu, frame)  # (K, m)
    area = float(w.sum())
    rng = np.random.default_rng(seed)
    c = _rho_norm_constant(g, seed=seed) * eps**g.Q

    def rho(y):
        r = dinf_norm(g, y) / eps
        return np.clip(1.0 - r**2, 0.0, None) ** 3 / c

    # y ~ rho_eps by rejection from the box around the d_inf ball
    half = np.array([(eps / g.eps[j - 1]) ** j for j in g.layer])
    ys = []
    need = samples
    while need > 0:
        u = rng.uniform(-1, 1, size=(4 * need + 64, g.dim)) * half
        r = dinf_norm(g, u) / eps
        acc = rng.random(len(u)) < np.clip(1.0 - r**2, 0.0, None) ** 3
        ys.append(u[acc][:need])
        need -= len(ys[-1])
    y = np.concatenate(ys)
    per = samples // replicates
    pick = rng.choice(len(pts), size=per * replicates, p=w / area)
    x = multiply(g, y[: len(pick)], pts[pick])

    tree = spatial.cKDTree(pts)
    lo, hi = domain.box
    reach_h = np.max(np.abs(np.concatenate([lo, hi])))
    ck = float(np.max(np.abs(g.structure))) if g.step > 1 else 0.0
    radius = math.sqrt(eps**2 + ((eps / min(g.eps)) ** 2 + ck * reach_h * eps) ** 2) * 1.05
    vals = np.empty(len(pick))
    for i, idx in enumerate(tree.query_ball_point(x, radius)):
        idx = np.asarray(idx, dtype=int)
        rr = rho(multiply(g, x[i], -pts[idx])) * w[idx]
        G = rr.sum()
        F = rr @ nuh[idx]
        vals[i] = np.linalg.norm(F) / G if G > 0 else 0.0
    rep = area * vals.reshape(replicates, per).mean(axis=1)
    return float(rep.mean()), float(rep.std(ddof=1) / math.sqrt(replicates))


def _mollified(g, domain, eps_grid=(0.2, 0.1, 0.05), nodes=256, samples=4096, seed=0):
    eps_grid = np.asarray(eps_grid, dtype=float)
    rows = [_mollified_variation_at(g, domain, e, nodes, samples, seed + i) for i, e in enumerate(eps_grid)]
    vals = np.array([r[0] for r in rows])
    ses = np.array([r[1] for r in rows])
    if len(eps_grid) >= 2:
        # the bump is symmetric, so the first-order term in eps cancels
        A = np.stack([np.ones_like(eps_grid), eps_grid**2], axis=1)
        W = 1.0 / np.maximum(ses, 1e-12) ** 2
        cov = np.linalg.inv(A.T @ (W[:, None] * A))
        coef = cov @ (A.T @ (W * vals))
        value, se = float(coef[0]), float(math.sqrt(cov[0, 0]))
    else:
        value, se = float(vals[0]), float(ses[0])
    return PerimeterEstimate(max(value, 0.0), se, "mollified-variation",
                             {"eps_grid": eps_grid.tolist(), "values": vals.tolist(), "stderrs": ses.tolist(),
                              "nodes": nodes, "samples": samples})


def horizontal_perimeter(g, domain, method="boundary-quadrature", seed=0, **params):
    """``|dOmega|_H`` by the named method; see the module docstring."""
    if g.dim != domain.dim:
        raise GroupError(f"domain {domain.name} has dimension {domain.dim}, group has {g.dim}")
    if method == "boundary-quadrature":
        return _quadrature(g, domain, **params)
    if method == "shell-coarea":
        return _shell(g, domain, seed=seed, **params)[0]
    if method == "mollified-variation":
        return _mollified(g, domain, seed=seed, **params)
    raise ValueError(f"unknown perimeter method {method!r}; choose from {METHODS}")


@dataclass
class ContinuityScan:
    levels: np.ndarray
    values: np.ndarray
    stderrs: np.ndarray
    empty: list
    method: str

    def reference(self):
        i = int(np.argmin(np.abs(self.levels)))
        return self.values[i], self.stderrs[i]

    @property
    def monotone(self):
        """``|value(r) - value(0)|`` nonincreasing as ``|r|`` shrinks, up to 2 stderr, on each side."""
        v0, s0 = self.reference()
        ok = True
        for side in (self.levels > 0, self.levels < 0):
            idx = np.flatnonzero(side)
            idx = idx[np.argsort(np.abs(self.levels[idx]))]
            d = np.abs(self.values[idx] - v0)
            tol = 2 * np.hypot(self.stderrs[idx], s0)
            ok &= bool(np.all(np.diff(d) >= -tol[1:]))
        return ok

    @property
    def converges(self):
        """The level closest to 0 on each side is within 2 stderr of ``value(0)``."""
        v0, s0 = self.reference()
        ok = True
        for side in (self.levels > 0, self.levels < 0):
            idx = np.flatnonzero(side)
            if idx.size:
                i = idx[np.argmin(np.abs(self.levels[idx]))]
                ok &= abs(self.values[i] - v0) < 2 * math.hypot(self.stderrs[i], s0) + 1e-12
        return ok


def perimeter_continuity_scan(g, domain, levels, method="boundary-quadrature", seed=0, **params):
    """``|d{phi > r}|_H`` for each ``r`` in ``levels``; unreachable levels are reported and skipped."""
    levels = np.asarray(sorted(set(float(r) for r in levels) | {0.0}))
    kept, empty = [], []
    for r in levels:
        try:
            domain.boundary_points(64, seed, r)
            kept.append(r)
        except EmptyLevel:
            empty.append(r)
    kept = np.asarray(kept)
    if method == "shell-coarea":
        # levels whose shell is clipped by the box would be biased low
        eta = params.get("eps", 0.01) * _boundary_grad_scale(domain, seed)
        top = _face_max(domain, seed=seed)
        clipped = kept - eta <= top
        empty += kept[clipped].tolist()
        kept = kept[~clipped]
        est = _shell(g, domain, seed=seed, levels=tuple(kept), **params)
    elif method == "boundary-quadrature":
        est = [_quadrature(g, domain, r=r, **params) for r in kept]
    else:
        raise ValueError("continuity scans use boundary-quadrature or shell-coarea")
    return ContinuityScan(kept, np.array([e.value for e in est]), np.array([e.stderr for e in est]), empty, method)


# built-in domains


def _interval_value(x, p):
    return (x[0] - p[0]) * (p[1] - x[0]) / (p[1] - p[0])


def _interval_grad(x, p, out):
    out[0] = (p[0] + p[1] - 2.0 * x[0]) / (p[1] - p[0])


def interval(a=0.0, b=1.0):
    """``(a, b)`` in ``R^1``; ``phi = (x - a)(b - x)/(b - a)``."""
    a, b = float(a), float(b)
    if not b > a:
        raise ValueError("interval needs a < b")
    L = b - a

    def roots(_, r):
        disc = L * L - 4.0 * r * L
        if disc < 0:
            return np.empty((0, 1))
        s = math.sqrt(disc)
        return np.array([[0.5 * (a + b - s)], [0.5 * (a + b + s)]])

    f = SmoothFunction(_interval_value, 1, np.array([a, b]), _interval_grad, "Cinf", None, None, "interval")
    pad = 0.1 * L
    return LevelSetDomain(f, ([a - pad], [b + pad]), f"interval:{a:g},{b:g}", BoundaryChart(roots, 0), L)


def _ball_value(x, p):
    r2 = 0.0
    for i in range(int(p[1])):
        r2 = r2 + x[i] * x[i]
    return 1.0 - r2 / (p[0] * p[0])


def _ball_grad(x, p, out):
    for i in range(int(p[1])):
        out[i] = -2.0 * x[i] / (p[0] * p[0])


def _sphere_chart(dim, radius):
    if dim == 2:
        def fn(u, r):
            rr = radius * math.sqrt(max(1.0 - r, 0.0))
            t = 2 * np.pi * u[:, 0]
            return rr * np.stack([np.cos(t), np.sin(t)], axis=1)

        return BoundaryChart(fn, 1, (True,))
    if dim == 3:
        def fn(u, r):
            rr = radius * math.sqrt(max(1.0 - r, 0.0))
            th = np.pi * u[:, 0]
            ph = 2 * np.pi * u[:, 1]
            return rr * np.stack([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)], axis=1)

        return BoundaryChart(fn, 2, (False, True))
    return None


def ball(dim, radius=1.0, name=None):
    """Euclidean ball; ``phi = 1 - |x|^2 / radius^2``."""
    radius = float(radius)
    f = SmoothFunction(_ball_value, dim, np.array([radius, dim]), _ball_grad, "Cinf", None, None, "ball")
    vol = math.pi ** (dim / 2) / math.gamma(dim / 2 + 1) * radius**dim
    m = 1.05 * radius
    return LevelSetDomain(f, ([-m] * dim, [m] * dim), name or f"ball{dim}:{radius:g}",
                          _sphere_chart(dim, radius), vol)


def h1_ball(radius=1.0):
    """Euclidean ball in the coordinates of ``heisenberg:1`` (characteristic at the poles)."""
    return ball(3, radius, f"h1-ball:{float(radius):g}")


def _superellipse_value(x, p):
    s = 0.0
    for i in range(int(p[2])):
        s = s + (x[i] / p[0]) ** int(p[1])
    return 1.0 - s


def _superellipse_grad(x, p, out):
    k = int(p[1])
    for i in range(int(p[2])):
        out[i] = -k * (x[i] / p[0]) ** (k - 1) / p[0]


def superellipse(dim, half_width=1.0, power=4):
    """Box with smoothed corners: ``phi = 1 - sum (x_i / a)^p`` for even ``p``."""
    a = float(half_width)
    p = int(power)
    if p < 2 or p % 2:
        raise ValueError("superellipse power must be an even integer >= 2")
    f = SmoothFunction(_superellipse_value, dim, np.array([a, p, dim]), _superellipse_grad, "Cinf",
                       None, None, "superellipse")
    vol = (2 * a * math.gamma(1 + 1 / p)) ** dim / math.gamma(1 + dim / p)
    chart = None
    if dim == 2:
        def fn(u, r):
            t = 2 * np.pi * u[:, 0]
            c, s = np.cos(t), np.sin(t)
            rad = a * max(1.0 - r, 0.0) ** (1.0 / p) * (c**p + s**p) ** (-1.0 / p)
            return rad[:, None] * np.stack([c, s], axis=1)

        chart = BoundaryChart(fn, 1, (True,))
    m = 1.05 * a
    return LevelSetDomain(f, ([-m] * dim, [m] * dim), f"superellipse{dim}:{a:g},{p}", chart, vol)


def _torus_value(x, p):
    # p = (R, r, n): horizontal radius over the first 2n coordinates, last one vertical
    n2 = 2 * int(p[2])
    h2 = 0.0
    for i in range(n2):
        h2 = h2 + x[i] * x[i]
    rho = np.sqrt(h2 + 1e-300)
    z = x[n2]
    return 1.0 - ((rho - p[0]) ** 2 + z * z) / (p[1] * p[1])


def _torus_grad(x, p, out):
    n2 = 2 * int(p[2])
    h2 = 0.0
    for i in range(n2):
        h2 = h2 + x[i] * x[i]
    rho = np.sqrt(h2 + 1e-300)
    c = -2.0 * (rho - p[0]) / (rho * p[1] * p[1])
    for i in range(n2):
        out[i] = c * x[i]
    out[n2] = -2.0 * x[n2] / (p[1] * p[1])


def hn_torus(n=1, R=2.0, r=0.5):
    """Solid torus ``{(|h| - R)^2 + z^2 < r^2}`` in ``heisenberg:n`` (non-characteristic)."""
    R, r = float(R), float(r)
    if not 0 < r < R:
        raise ValueError("torus needs 0 < r < R")
    dim = 2 * n + 1
    f = SmoothFunction(_torus_value, dim, np.array([R, r, n]), _torus_grad, "Cinf", None, None, "torus")
    chart = None
    if n == 1:
        def fn(u, lev):
            rr = r * math.sqrt(max(1.0 - lev, 0.0))
            a = 2 * np.pi * u[:, 0]
            v = 2 * np.pi * u[:, 1]
            rho = R + rr * np.cos(v)
            return np.stack([rho * np.cos(a), rho * np.sin(a), rr * np.sin(v)], axis=1)

        chart = BoundaryChart(fn, 2, (True, True))
    # |S^{2n-1}| int (R + s)^{2n-1} over the disk of radius r in (s, z)
    sphere = 2 * math.pi**n / math.gamma(n)
    from scipy import integrate

    vol = sphere * integrate.dblquad(lambda z, s: (R + s) ** (2 * n - 1), -r, r,
                                     lambda s: -math.sqrt(r * r - s * s), lambda s: math.sqrt(r * r - s * s))[0]
    m = 1.05 * (R + r)
    lo = [-m] * (2 * n) + [-1.05 * r]
    hi = [m] * (2 * n) + [1.05 * r]
    name = f"h1-torus:{R:g},{r:g}" if n == 1 else f"hn-torus:{n},{R:g},{r:g}"
    return LevelSetDomain(f, (lo, hi), name, chart, vol)


def h1_torus(R=2.0, r=0.5):
    return hn_torus(1, R, r)


def polynomial_domain(exponents, coefs, box, name="poly"):
    """Custom domain ``{sum_k c_k x^e_k > 0}`` inside an explicit box."""
    f = polynomial(exponents, coefs, name)
    lo, hi = box
    return LevelSetDomain(f, (lo, hi), name)


def domain_from_name(spec, dim=None):
    """Resolve ``interval:a,b``, ``disk:r``, ``ball:r`` (needs ``dim``), ``superellipse:a,p``,
    ``h1-ball:r``, ``h1-torus:R,r``, ``hn-torus:n,R,r``."""
    kind, _, arg = str(spec).partition(":")
    args = [float(a) for a in arg.split(",") if a.strip()] if arg else []
    try:
        if kind == "interval":
            return interval(*(args or [0.0, 1.0]))
        if kind == "disk":
            return ball(2, *(args or [1.0]), name=f"disk:{(args or [1.0])[0]:g}")
        if kind == "ball":
            if dim is None:
                raise ValueError("ball needs the ambient dimension")
            return ball(dim, *(args or [1.0]))
        if kind == "superellipse":
            if dim is None:
                raise ValueError("superellipse needs the ambient dimension")
            a = args[0] if args else 1.0
            p = int(args[1]) if len(args) > 1 else 4
            return superellipse(dim, a, p)
        if kind == "h1-ball":
            return h1_ball(*(args or [1.0]))
        if kind == "h1-torus":
            return h1_torus(*(args or [2.0, 0.5]))
        if kind == "hn-torus":
            n = int(args[0]) if args else 1
            return hn_torus(n, *(args[1:] or [2.0, 0.5]))
    except TypeError as exc:
        raise ValueError(f"bad parameters for domain {spec!r}: {exc}") from exc
    raise KeyError(f"unknown domain {spec!r}")
