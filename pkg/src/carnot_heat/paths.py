"""Sample paths of horizontal Brownian motion and its subordinated version.

Paths are stepped by the group law: each grid step multiplies the current
point by an increment in exponential coordinates, so step-1 and step-2
marginals are exact in law apart from the piecewise Levy area.
"""
import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .groups import dinf_norm
from .rng import run_chunks
from .stable import SubordinatorSpec

__all__ = [
    "PathSample",
    "simulate_hbm",
    "simulate_subordinated",
    "running_sup_distance",
    "first_exit_index",
    "endpoints",
    "exit_frequency",
    "dump_path",
    "write_batch_csv",
]


@dataclass
class PathSample:
    """Grid ``times`` (process time), subordinated ``clock`` and ``points``.

    For Brownian paths ``clock == times``; for subordinated paths ``clock``
    holds ``S_{t_j}`` and ``points[j] = B(S_{t_j})``.
    """

    times: np.ndarray
    points: np.ndarray
    clock: np.ndarray
    subordinated: bool = False
    alpha: float = 2.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.times) < 2 or len(self.times) != len(self.points):
            raise ValueError("a path needs M >= 1 steps and one point per grid time")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("grid times must be strictly increasing")
        if np.any(np.diff(self.clock) < 0):
            raise ValueError("subordinated clock must be nondecreasing")

    @property
    def start(self):
        return self.points[0]

    @property
    def steps(self):
        return len(self.times) - 1


def simulate_hbm(g, x0, T, h, rng, nsub=kernels.NSUB):
    """Horizontal Brownian motion from ``x0`` on ``[0, T]`` with step ``h``.

    The last step is shortened so the grid ends at ``T``.
    """
    if not h > 0:
        raise ValueError(f"step must be positive, got {h}")
    if not T >= h:
        raise ValueError(f"horizon {T} shorter than step {h}")
    M = int(math.ceil(T / h - 1e-12))
    times = np.minimum(np.arange(M + 1) * h, T)
    times[-1] = T
    pts = kernels.simulate_paths(g, x0, np.diff(times)[None, :], rng, nsub)[0]
    return PathSample(times, pts, times.copy(), False, 2.0, {"h": h, "nsub": nsub})


def simulate_subordinated(g, spec, x0, T, M, rng, nsub=kernels.NSUB):
    """``B(S_t)`` on a uniform grid of ``M`` steps over ``[0, T]``.

    Subordinator increments over the grid are drawn first, then ``B`` is
    stepped between consecutive subordinated times.
    """
    if not isinstance(spec, SubordinatorSpec):
        spec = SubordinatorSpec(spec)
    if M < 2:
        raise ValueError(f"need at least 2 grid steps, got {M}")
    times = np.linspace(0.0, T, M + 1)
    ds = kernels.subordinator_increments(rng, spec.alpha, T / M, M)
    clock = np.concatenate([[0.0], np.cumsum(ds)])
    if spec.alpha == 2.0:
        clock = times.copy()
        ds = np.diff(times)
    pts = kernels.simulate_paths(g, x0, ds[None, :], rng, nsub)[0]
    return PathSample(times, pts, clock, spec.alpha != 2.0, spec.alpha, {"M": M, "nsub": nsub})


def running_sup_distance(path, g):
    """``max_j ||p_j||`` over the grid (the path must start at the origin)."""
    return float(np.max(dinf_norm(g, path.points)))


def first_exit_index(path, domain):
    """First grid index outside the domain, or None."""
    inside = domain.contains(path.points)
    out = np.flatnonzero(~inside)
    return int(out[0]) if out.size else None


def endpoints(g, alpha, T, M, n, seed, workers=1, label="endpoints", x0=None):
    """Terminal points of ``n`` paths from ``x0`` (default origin)."""
    x0 = np.zeros(g.dim) if x0 is None else np.asarray(x0, dtype=float)

    def chunk(lo, hi, rng):
        ds = kernels.subordinator_increments(rng, alpha, T / M, (hi - lo) * M).reshape(hi - lo, M)
        return kernels.simulate_paths(g, x0, ds, rng)[:, -1]

    return np.concatenate(run_chunks(chunk, n, seed, label, workers))


def exit_frequency(g, domain, x0, alpha, t, M, n, seed, workers=1, bridge=False):
    """Fraction of paths from ``x0`` that leave the domain by time ``t``.

    Returns ``(p, stderr)``. This is ``1 - u_alpha(x0, t)``.
    """
    starts = np.broadcast_to(np.asarray(x0, dtype=float), (n, g.dim))
    gcap = domain.gradient_cap(g) if bridge else np.inf

    def chunk(lo, hi, rng):
        return kernels.survival(g, domain.level, starts[lo:hi], alpha, t, M, rng, 0, bridge, gcap)

    w = np.concatenate(run_chunks(chunk, n, seed, "exit", workers))
    return float(1.0 - w.mean()), float(w.std(ddof=1) / math.sqrt(n))


def dump_path(path, fh):
    """Plain-text table, one row per grid point: ``t, clock, x_1..x_N``."""
    n = path.points.shape[1]
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["t", "clock"] + [f"x{i + 1}" for i in range(n)])
    for t, c, p in zip(path.times, path.clock, path.points):
        w.writerow([repr(float(t)), repr(float(c))] + [repr(float(v)) for v in p])


def write_batch_csv(rows, fh):
    """Batch estimates ``(estimate, stderr, N, M, seed)`` as CSV."""
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["estimate", "stderr", "N", "M", "seed"])
    for r in rows:
        w.writerow([repr(float(r[0])), repr(float(r[1])), int(r[2]), int(r[3]), int(r[4])])
