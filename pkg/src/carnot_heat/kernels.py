"""Path kernels: compiled per-path loops and vectorized numpy equivalents.

The compiled kernels draw from the chunk's ``numpy.random.Generator``
inside the loop and stop a path as soon as its outcome is settled (exit,
or a running minimum of zero). The numpy kernels advance a whole chunk one
grid step at a time. Both sample the same law; they do not consume random
numbers in the same order, so results agree statistically, not bitwise.

Conventions shared by both backends:

* drivers have variance ``2 dS`` over a subordinated time step ``dS``;
* for ``alpha < 2``, ``dS = h**(2/alpha) * S_1`` with ``S_1`` from Kanter's
  representation of the positive ``alpha/2``-stable law;
* step-2 increments carry the exact Levy area of ``nsub`` linear pieces plus
  an independent Gaussian term restoring the area variance those pieces
  miss; higher step groups compose the pieces with the group law.
"""
from functools import lru_cache

import numpy as np

from ._accel import NJIT_OPTS, USE_NUMBA, njit
from .groups import multiply

__all__ = [
    "group_arrays",
    "NSUB",
    "SURVIVAL_NSUB",
    "stable_unit",
    "subordinator_increments",
    "survival",
    "sup_stats",
    "simulate_paths",
    "sup_1d",
    "make_mollified_kernel",
]

NSUB = 16
# survival only needs the area at the scale of one step, where it is dominated
# by the horizontal displacement; 4 pieces keep the kurtosis within 10%
SURVIVAL_NSUB = 4
_U_SHIFT = 0.5 * 2.0**-53


@lru_cache(maxsize=None)
def group_arrays(g):
    """Flattened group data: ``(step, m, n, ti, tj, tl, tc, coefs, words, lengths, layer, eps)``."""
    C = g.structure
    ti, tj, tl = np.nonzero(C)
    tc = C[ti, tj, tl].copy()
    coefs, words, lengths = g.bch_tables
    layer = np.asarray(g.layer, dtype=np.int64)
    eps = np.asarray(g.eps, dtype=float)
    return (
        int(g.step), int(g.m), int(g.dim),
        ti.astype(np.int64), tj.astype(np.int64), tl.astype(np.int64), tc,
        coefs, words, lengths, layer, eps,
    )


# ---------------------------------------------------------------- numpy side


def stable_unit(rng, a, size):
    """Positive stable variables with ``E exp(-lam S) = exp(-lam**a)``, ``0 < a < 1``."""
    u = np.pi * (rng.random(size) + _U_SHIFT)
    e = rng.standard_exponential(size)
    return np.sin(a * u) / np.sin(u) ** (1.0 / a) * (np.sin((1.0 - a) * u) / e) ** ((1.0 - a) / a)


def subordinator_increments(rng, alpha, h, size):
    """Increments of ``S^alpha`` over steps of length ``h``."""
    if alpha == 2.0:
        return np.full(size, float(h))
    return h ** (2.0 / alpha) * stable_unit(rng, alpha / 2.0, size)


def _np_increment(g, rng, ds, nsub):
    """Group increments for a batch of subordinated time steps ``ds`` (shape (n,))."""
    n = ds.shape[0]
    m, dim = g.m, g.dim
    scale = np.sqrt(2.0 * ds)
    if g.step == 1:
        inc = np.zeros((n, dim))
        inc[:, :m] = scale[:, None] * rng.standard_normal((n, m))
        return inc
    dw = (scale / np.sqrt(nsub))[:, None, None] * rng.standard_normal((n, nsub, m))
    pieces = np.zeros((n, nsub, dim))
    pieces[:, :, :m] = dw
    area = np.zeros((n, dim))
    for a, b in _area_pairs(g):
        xi = (ds / np.sqrt(nsub)) * rng.standard_normal(n)
        area += xi[:, None] * g.structure[a, b]
    if g.step == 2:
        w = np.cumsum(dw, axis=1)
        before = w - dw
        inc = np.zeros((n, dim))
        inc[:, :m] = w[:, -1]
        C = g.structure[:m, :m, :]
        inc += 0.5 * np.einsum("nka,nkb,abl->nl", before, dw, C)
        return inc + area
    inc = pieces[:, 0]
    for k in range(1, nsub):
        inc = multiply(g, inc, pieces[:, k])
    return multiply(g, inc, area)


@lru_cache(maxsize=None)
def _area_pairs(g):
    m = g.m
    return [(a, b) for a in range(m) for b in range(a + 1, m) if np.any(g.structure[a, b] != 0)]


def _np_hgrad2(g, grad, params, x):
    from .groups import left_invariant_frame

    gr = np.empty((g.dim, x.shape[0]))
    grad(x.T, params, gr)
    frame = left_invariant_frame(g, x, g.m)
    xh = np.einsum("ln,nli->ni", gr, frame)
    return np.sum(xh * xh, axis=1)


def _np_survival(g, phi, grad, params, starts, alpha, t, M, nsub, bridge, mode, rng):
    x = np.array(starts, dtype=float)
    n = x.shape[0]
    h = t / M
    val = np.asarray(phi(x.T, params), dtype=float).copy()
    if mode == 0:
        w = (val > 0.0).astype(float)
    else:
        w = val.copy()
    for _ in range(M):
        ds = subordinator_increments(rng, alpha, h, n)
        inc = _np_increment(g, rng, ds, nsub)
        xn = multiply(g, x, inc)
        vn = np.asarray(phi(xn.T, params), dtype=float)
        if mode == 0:
            alive = vn > 0.0
            if bridge:
                g2 = _np_hgrad2(g, grad, params, x)
                with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
                    cross = np.where(g2 > 0, np.exp(-val * vn / (g2 * ds)), 0.0)
                w = w * np.where(alive, 1.0 - cross, 0.0)
            else:
                w = w * alive
        else:
            w = np.minimum(w, vn)
        x, val = xn, vn
    return w


def _np_sup(g, alpha, t, M, nsub, n, rng):
    x = np.zeros((n, g.dim))
    from .groups import dinf_norm

    out = np.zeros((n, 2))
    h = t / M
    for _ in range(M):
        ds = subordinator_increments(rng, alpha, h, n)
        x = multiply(g, x, _np_increment(g, rng, ds, nsub))
        np.maximum(out[:, 0], x[:, 0], out=out[:, 0])
        np.maximum(out[:, 1], dinf_norm(g, x), out=out[:, 1])
    return out


def _np_paths(g, x0, ds, nsub, rng):
    n, M = ds.shape
    pts = np.empty((n, M + 1, g.dim))
    pts[:, 0] = x0
    for j in range(M):
        pts[:, j + 1] = multiply(g, pts[:, j], _np_increment(g, rng, ds[:, j], nsub))
    return pts


def _np_sup_1d(alpha, M, n, bridge, rng):
    h = 1.0 / M
    x = np.zeros(n)
    out = np.zeros((n, 4))
    anchors = [x, x]
    for j in range(M):
        ds = subordinator_increments(rng, alpha, h, n)
        xn = x + np.sqrt(2.0 * ds) * rng.standard_normal(n)
        if bridge:
            e = rng.standard_exponential(n)
            top = 0.5 * (x + xn + np.sqrt((xn - x) ** 2 + 4.0 * e * ds))
        else:
            top = xn
        np.maximum(out[:, 0], top, out=out[:, 0])
        for lev, span in ((1, 2), (2, 4)):
            if j % span == span - 1:
                a = anchors[lev - 1]
                if bridge:
                    e = rng.standard_exponential(n)
                    top = 0.5 * (a + xn + np.sqrt((xn - a) ** 2 + 4.0 * span * e * ds))
                else:
                    top = xn
                np.maximum(out[:, lev], top, out=out[:, lev])
                anchors[lev - 1] = xn
        x = xn
    out[:, 3] = x
    return out


# ------------------------------------------------------------- compiled side


@njit(**NJIT_OPTS)
def _nb_stable_unit(rng, a):
    u = np.pi * (rng.random() + _U_SHIFT)
    e = rng.standard_exponential()
    return np.sin(a * u) / np.sin(u) ** (1.0 / a) * (np.sin((1.0 - a) * u) / e) ** ((1.0 - a) / a)


@njit(**NJIT_OPTS)
def _nb_ds(rng, alpha, h):
    if alpha == 2.0:
        return h
    return h ** (2.0 / alpha) * _nb_stable_unit(rng, alpha / 2.0)


# Helpers for step <= 2 stay free of allocations and calls so numba can drop
# the per-call refcounting on their array arguments. Kernels receive the
# helpers for their step as function arguments (see step_ops); a branch to
# the generic BCH helper anywhere in a loop slows the whole loop tenfold.


@njit(**NJIT_OPTS)
def _nb_bracket(u, v, out, ti, tj, tl, tc):
    out[:] = 0.0
    for k in range(ti.shape[0]):
        out[tl[k]] += tc[k] * u[ti[k]] * v[tj[k]]


@njit(**NJIT_OPTS)
def _nb_mul12(x, y, out, n, ti, tj, tl, tc, coefs, words, lengths, work):
    for l in range(n):
        out[l] = x[l] + y[l]
    for k in range(ti.shape[0]):
        out[tl[k]] += 0.5 * tc[k] * x[ti[k]] * y[tj[k]]


@njit(**NJIT_OPTS)
def _nb_mul_bch(x, y, out, n, ti, tj, tl, tc, coefs, words, lengths, work):
    for l in range(n):
        out[l] = x[l] + y[l]
    v = work[0]
    tmp = work[1]
    for q in range(coefs.shape[0]):
        L = lengths[q]
        last = words[q, L - 1]
        for l in range(n):
            v[l] = y[l] if last == 1 else x[l]
        for r in range(L - 2, -1, -1):
            if words[q, r] == 1:
                _nb_bracket(y, v, tmp, ti, tj, tl, tc)
            else:
                _nb_bracket(x, v, tmp, ti, tj, tl, tc)
            v[:] = tmp
        for l in range(n):
            out[l] += coefs[q] * v[l]


@njit(**NJIT_OPTS)
def _nb_area(rng, ds, nsub, m, n, ti, tj, tl, tc, area):
    # second moments of the Levy area missed by the linear pieces
    for l in range(n):
        area[l] = 0.0
    s = ds / np.sqrt(nsub)
    pa = -1
    pb = -1
    xi = 0.0
    for q in range(ti.shape[0]):
        a = ti[q]
        b = tj[q]
        if a >= b or b >= m:
            continue
        if a != pa or b != pb:
            xi = s * rng.standard_normal()
            pa = a
            pb = b
        area[tl[q]] += tc[q] * xi


@njit(**NJIT_OPTS)
def _nb_inc1(rng, ds, nsub, m, n, ti, tj, tl, tc, coefs, words, lengths, inc, w, piece, tmp, work):
    s = np.sqrt(2.0 * ds)
    for a in range(m):
        inc[a] = s * rng.standard_normal()
    for l in range(m, n):
        inc[l] = 0.0


@njit(**NJIT_OPTS)
def _nb_inc2(rng, ds, nsub, m, n, ti, tj, tl, tc, coefs, words, lengths, inc, w, piece, tmp, work):
    s = np.sqrt(2.0 * ds / nsub)
    for l in range(n):
        inc[l] = 0.0
        w[l] = 0.0
    for k in range(nsub):
        for a in range(m):
            piece[a] = s * rng.standard_normal()
        for q in range(ti.shape[0]):
            inc[tl[q]] += 0.5 * tc[q] * w[ti[q]] * piece[tj[q]]
        for a in range(m):
            w[a] += piece[a]
    for a in range(m):
        inc[a] = w[a]
    # area completion, inlined to keep this leaf call-free
    s = ds / np.sqrt(nsub)
    pa = -1
    pb = -1
    xi = 0.0
    for q in range(ti.shape[0]):
        a = ti[q]
        b = tj[q]
        if a >= b or b >= m:
            continue
        if a != pa or b != pb:
            xi = s * rng.standard_normal()
            pa = a
            pb = b
        inc[tl[q]] += tc[q] * xi


@njit(**NJIT_OPTS)
def _nb_inc_bch(rng, ds, nsub, m, n, ti, tj, tl, tc, coefs, words, lengths, inc, w, piece, tmp, work):
    s = np.sqrt(2.0 * ds / nsub)
    inc[:] = 0.0
    piece[:] = 0.0
    for k in range(nsub):
        for a in range(m):
            piece[a] = s * rng.standard_normal()
        _nb_mul_bch(inc, piece, tmp, n, ti, tj, tl, tc, coefs, words, lengths, work)
        inc[:] = tmp
    _nb_area(rng, ds, nsub, m, n, ti, tj, tl, tc, piece)
    _nb_mul_bch(inc, piece, tmp, n, ti, tj, tl, tc, coefs, words, lengths, work)
    inc[:] = tmp


def step_ops(g):
    """Compiled ``(mul, increment)`` pair for the step of ``g``.

    Kernels take these as arguments so each compiled loop only contains the
    helpers it calls.
    """
    if g.step == 1:
        return _nb_mul12, _nb_inc1
    if g.step == 2:
        return _nb_mul12, _nb_inc2
    return _nb_mul_bch, _nb_inc_bch


@njit(**NJIT_OPTS)
def _nb_hg12(mul, x, gbuf, m, n, ti, tj, tl, tc, coefs, words, lengths, col, ybuf, zbuf, work):
    # |grad_H phi|^2 from the Euclidean gradient in gbuf; X_i = d_i + sum 0.5 c x_a d_l over [X_a, X_i]
    total = 0.0
    for i in range(m):
        d = gbuf[i]
        for q in range(ti.shape[0]):
            if tj[q] == i:
                d += 0.5 * tc[q] * x[ti[q]] * gbuf[tl[q]]
        total += d * d
    return total


@njit(**NJIT_OPTS)
def _nb_hg_fd(mul, x, gbuf, m, n, ti, tj, tl, tc, coefs, words, lengths, col, ybuf, zbuf, work):
    # frame columns by central differences of the product
    hstep = 1e-4
    total = 0.0
    for i in range(m):
        ybuf[:] = 0.0
        ybuf[i] = hstep
        mul(x, ybuf, col, n, ti, tj, tl, tc, coefs, words, lengths, work)
        ybuf[i] = -hstep
        mul(x, ybuf, zbuf, n, ti, tj, tl, tc, coefs, words, lengths, work)
        d = 0.0
        for l in range(n):
            d += gbuf[l] * (col[l] - zbuf[l]) / (2.0 * hstep)
        total += d * d
    return total


def hgrad_op(g):
    """Compiled ``|grad_H phi|^2`` helper for the step of ``g``."""
    return _nb_hg12 if g.step <= 2 else _nb_hg_fd


@njit(**NJIT_OPTS)
def _nb_survival(phi, grad, params, starts, alpha, t, M, nsub, G, mul, incr, hg, bridge, gcap, mode, early_exit, rng, out):
    # unpack once: pulling arrays out of the tuple inside helpers is slow
    step, m, n, ti, tj, tl, tc, coefs, words, lengths, layer, eps = G
    h = t / M
    x = np.empty(n)
    xn = np.empty(n)
    inc = np.empty(n)
    w = np.empty(n)
    piece = np.empty(n)
    tmp = np.empty(n)
    work = np.empty((2, n))
    gbuf = np.empty(n)
    col = np.empty(n)
    ybuf = np.empty(n)
    zbuf = np.empty(n)
    for p in range(starts.shape[0]):
        for l in range(n):
            x[l] = starts[p, l]
        val = phi(x, params)
        if mode == 0:
            wt = 1.0 if val > 0.0 else 0.0
        else:
            wt = val
        for _ in range(M):
            if early_exit and wt <= 0.0:
                break
            ds = _nb_ds(rng, alpha, h)
            incr(rng, ds, nsub, m, n, ti, tj, tl, tc, coefs, words, lengths, inc, w, piece, tmp, work)
            mul(x, inc, xn, n, ti, tj, tl, tc, coefs, words, lengths, work)
            vn = phi(xn, params)
            if mode == 0:
                if vn <= 0.0:
                    wt = 0.0
                elif bridge and val * vn < 40.0 * gcap * ds:
                    grad(x, params, gbuf)
                    g2 = hg(mul, x, gbuf, m, n, ti, tj, tl, tc, coefs, words, lengths, col, ybuf, zbuf, work)
                    if g2 > 0.0:
                        wt *= 1.0 - np.exp(-val * vn / (g2 * ds))
            else:
                if vn < wt:
                    wt = vn
            x[:] = xn
            val = vn
        out[p] = wt if wt > 0.0 else 0.0


@njit(**NJIT_OPTS)
def _nb_dinf(x, step, m, n, ti, tj, tl, tc, coefs, words, lengths, layer, eps):
    best = 0.0
    for j in range(1, step + 1):
        s = 0.0
        for l in range(n):
            if layer[l] == j:
                s += x[l] * x[l]
        v = eps[j - 1] * s ** (0.5 / j)
        if v > best:
            best = v
    return best


@njit(**NJIT_OPTS)
def _nb_sup(alpha, t, M, nsub, G, mul, incr, rng, out):
    # unpack once: pulling arrays out of the tuple inside helpers is slow
    step, m, n, ti, tj, tl, tc, coefs, words, lengths, layer, eps = G
    h = t / M
    x = np.empty(n)
    xn = np.empty(n)
    inc = np.empty(n)
    w = np.empty(n)
    piece = np.empty(n)
    tmp = np.empty(n)
    work = np.empty((2, n))
    for p in range(out.shape[0]):
        x[:] = 0.0
        s0 = 0.0
        sd = 0.0
        for _ in range(M):
            ds = _nb_ds(rng, alpha, h)
            incr(rng, ds, nsub, m, n, ti, tj, tl, tc, coefs, words, lengths, inc, w, piece, tmp, work)
            mul(x, inc, xn, n, ti, tj, tl, tc, coefs, words, lengths, work)
            x[:] = xn
            if x[0] > s0:
                s0 = x[0]
            d = _nb_dinf(x, step, m, n, ti, tj, tl, tc, coefs, words, lengths, layer, eps)
            if d > sd:
                sd = d
        out[p, 0] = s0
        out[p, 1] = sd


@njit(**NJIT_OPTS)
def _nb_paths(x0, ds, nsub, G, mul, incr, rng, pts):
    # unpack once: pulling arrays out of the tuple inside helpers is slow
    step, m, n, ti, tj, tl, tc, coefs, words, lengths, layer, eps = G
    inc = np.empty(n)
    w = np.empty(n)
    piece = np.empty(n)
    tmp = np.empty(n)
    work = np.empty((2, n))
    for p in range(ds.shape[0]):
        pts[p, 0] = x0
        for j in range(ds.shape[1]):
            incr(rng, ds[p, j], nsub, m, n, ti, tj, tl, tc, coefs, words, lengths, inc, w, piece, tmp, work)
            mul(pts[p, j], inc, pts[p, j + 1], n, ti, tj, tl, tc, coefs, words, lengths, work)


@njit(**NJIT_OPTS)
def _nb_sup_1d(alpha, M, bridge, rng, out):
    # columns: sup on the M-step grid, on every 2nd point, on every 4th point, endpoint
    h = 1.0 / M
    for p in range(out.shape[0]):
        x = 0.0
        a2 = 0.0
        a4 = 0.0
        s1 = 0.0
        s2 = 0.0
        s4 = 0.0
        for j in range(M):
            ds = _nb_ds(rng, alpha, h)
            xn = x + np.sqrt(2.0 * ds) * rng.standard_normal()
            top = xn
            if bridge:
                e = rng.standard_exponential()
                top = 0.5 * (x + xn + np.sqrt((xn - x) ** 2 + 4.0 * e * ds))
            if top > s1:
                s1 = top
            if j % 2 == 1:
                top = xn
                if bridge:
                    e = rng.standard_exponential()
                    top = 0.5 * (a2 + xn + np.sqrt((xn - a2) ** 2 + 8.0 * e * ds))
                if top > s2:
                    s2 = top
                a2 = xn
            if j % 4 == 3:
                top = xn
                if bridge:
                    e = rng.standard_exponential()
                    top = 0.5 * (a4 + xn + np.sqrt((xn - a4) ** 2 + 16.0 * e * ds))
                if top > s4:
                    s4 = top
                a4 = xn
            x = xn
        out[p, 0] = s1
        out[p, 1] = s2
        out[p, 2] = s4
        out[p, 3] = x


# -------------------------------------------------------------- dispatchers


def survival(g, fn, starts, alpha, t, M, rng, mode=0, bridge=False, gcap=np.inf, nsub=SURVIVAL_NSUB, early_exit=True):
    """Per-start outcome over ``M`` steps of horizon ``t``.

    ``fn`` provides ``value``/``grad`` (numpy) and ``jitted``/``jitted_grad``.
    Mode 0 returns the survival weight of ``{fn > 0}`` (bridge-corrected if
    asked), mode 1 the running minimum of ``fn`` along the grid. With
    ``early_exit=False`` every path consumes the same random numbers whatever
    ``fn`` is, which pairs estimates for different functions.
    """
    starts = np.ascontiguousarray(starts, dtype=float)
    if USE_NUMBA:
        out = np.empty(starts.shape[0])
        grad = fn.jitted_grad if bridge else _nb_no_grad
        _nb_survival(fn.jitted, grad, fn.params, starts, float(alpha), float(t), int(M), int(nsub),
                     group_arrays(g), *step_ops(g), hgrad_op(g), bool(bridge), float(gcap), int(mode), bool(early_exit), rng, out)
        return out
    return _np_survival(g, fn.value, fn.grad, fn.params, starts, float(alpha), float(t), int(M),
                        int(nsub), bool(bridge), int(mode), rng)


@njit(**NJIT_OPTS)
def _nb_no_grad_impl(x, p, out):
    out[:] = 0.0


_nb_no_grad = _nb_no_grad_impl


def sup_stats(g, alpha, t, M, n, rng, nsub=NSUB):
    """``(sup x_1, sup d_inf(x, 0))`` over the grid for ``n`` paths from the origin."""
    if USE_NUMBA:
        out = np.empty((n, 2))
        _nb_sup(float(alpha), float(t), int(M), int(nsub), group_arrays(g), *step_ops(g), rng, out)
        return out
    return _np_sup(g, float(alpha), float(t), int(M), int(nsub), int(n), rng)


def simulate_paths(g, x0, ds, rng, nsub=NSUB):
    """Grid points of paths from ``x0`` with subordinated time steps ``ds`` (shape (n, M))."""
    ds = np.ascontiguousarray(np.atleast_2d(ds), dtype=float)
    x0 = np.asarray(x0, dtype=float)
    if USE_NUMBA:
        pts = np.empty((ds.shape[0], ds.shape[1] + 1, g.dim))
        _nb_paths(x0, ds, int(nsub), group_arrays(g), *step_ops(g), rng, pts)
        return pts
    return _np_paths(g, x0, ds, int(nsub), rng)


def sup_1d(alpha, M, n, rng, bridge=False, coarse=False):
    """Running supremum over ``[0, 1]`` of the first coordinate on an ``M``-step grid.

    With ``coarse=True`` returns shape ``(n, 4)``: the statistic on the
    ``M``, ``M/2`` and ``M/4`` step subgrids of the same paths, then the
    endpoint. ``M`` must be a multiple of 4.
    """
    if M % 4:
        raise ValueError(f"grid size must be a multiple of 4, got {M}")
    if USE_NUMBA:
        out = np.empty((n, 4))
        _nb_sup_1d(float(alpha), int(M), bool(bridge), rng, out)
    else:
        out = _np_sup_1d(float(alpha), int(M), int(n), bool(bridge), rng)
    return out if coarse else out[:, 0]


def make_mollified_kernel(inner, neg_nodes, weights, g):
    """Compiled ``f_eps(x, p) = sum_q w_q inner(y_q^{-1} * x, p)``."""
    step, m, n, ti, tj, tl, tc, coefs, words, lengths, layer, eps = group_arrays(g)
    mul = step_ops(g)[0]
    nodes = np.ascontiguousarray(neg_nodes)
    wts = np.ascontiguousarray(weights)

    def value(x, p):
        z = np.empty(n)
        work = np.empty((2, n))
        acc = 0.0
        for q in range(wts.shape[0]):
            mul(nodes[q], x, z, n, ti, tj, tl, tc, coefs, words, lengths, work)
            acc += wts[q] * inner(z, p)
        return acc

    return njit(value, **NJIT_OPTS)
