"""Calculus with left-invariant vector fields.

Test functions are written "coordinate first": ``value(x, p)`` reads
``x[0], x[1], ...`` and ``p[0], ...``. The same source then runs on a single
point inside compiled kernels (``x`` of shape ``(N,)``) and on a batch in
numpy (``x`` of shape ``(N, n)``). Gradients follow the same convention with
an explicit output: ``grad(x, p, out)`` fills ``out[0..N-1]``.

Derivatives along the frame use the analytic Euclidean gradient for first
order when one is supplied and central differences otherwise.
"""
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.stats import qmc

from . import _accel
from .groups import dinf_norm, left_invariant_frame, multiply

__all__ = [
    "SmoothFunction",
    "apply_vector_fields",
    "horizontal_gradient",
    "taylor_polynomial",
    "taylor_decay_exponent",
    "mollify",
    "variation_smooth",
    "bump",
    "trig",
    "polynomial",
    "koranyi_bump",
    "function_from_name",
    "indicator",
]


class UnsupportedOrder(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class SmoothFunction:
    """Real function on ``R^N`` with optional analytic gradient.

    ``support`` is a bounding box ``(lo, hi)`` of the support, or ``None``
    for functions without compact support.
    """

    value: object
    dim: int
    params: np.ndarray = field(default_factory=lambda: np.zeros(1))
    grad: object = None
    smoothness: str = "Cinf"
    support: tuple = None
    support_radius: float = None
    name: str = "f"
    jit_value: object = None

    def __post_init__(self):
        object.__setattr__(self, "params", np.ascontiguousarray(self.params, dtype=float))
        if self.support is not None:
            lo, hi = (np.asarray(b, dtype=float) for b in self.support)
            object.__setattr__(self, "support", (lo, hi))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.asarray(self.value(np.moveaxis(x, -1, 0), self.params), dtype=float)
        if out.shape != x.shape[:-1]:
            out = np.broadcast_to(out, x.shape[:-1]).copy()
        return float(out) if out.ndim == 0 else out

    def gradient(self, x):
        """Euclidean gradient, analytic if available, else central differences."""
        x = np.asarray(x, dtype=float)
        if self.grad is not None:
            out = np.empty((self.dim,) + x.shape[:-1])
            self.grad(np.moveaxis(x, -1, 0), self.params, out)
            return np.moveaxis(out, 0, -1)
        return fd_gradient(self, x)

    @cached_property
    def jitted(self):
        """Scalar compiled ``value(x, p)`` for use inside kernels."""
        if self.jit_value is not None:
            return self.jit_value
        return _accel.njit(self.value)

    @cached_property
    def jitted_grad(self):
        if self.grad is None:
            raise ValueError(f"{self.name}: no analytic gradient to compile")
        return _accel.njit(self.grad)

    def check_gradient(self, n_probe=64, seed=0, rel_tol=1e-4):
        """Compare the analytic gradient with central differences (step 1e-5)."""
        if self.grad is None:
            return True
        rng = np.random.default_rng(seed)
        if self.support is not None:
            lo, hi = self.support
            x = rng.uniform(lo, hi, size=(n_probe, self.dim))
        else:
            x = rng.standard_normal((n_probe, self.dim))
        exact = self.gradient(x)
        approx = fd_gradient(self, x, step=1e-5)
        scale = np.maximum(np.abs(exact).max(), 1e-8)
        return bool(np.all(np.abs(exact - approx) <= rel_tol * scale))


def fd_gradient(f, x, step=None):
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    h = 1e-5 * (1.0 + np.abs(x)) if step is None else np.full_like(x, step)
    out = np.empty_like(x)
    for i in range(n):
        e = np.zeros(n)
        e[i] = 1.0
        hi = h[..., i : i + 1]
        out[..., i] = (f(x + hi * e) - f(x - hi * e)) / (2 * hi[..., 0])
    return out


def _derivative(g, f, x, idx):
    if not idx:
        return f(x)
    i, rest = idx[0], idx[1:]
    if not rest and f.grad is not None:
        frame = left_invariant_frame(g, x)
        return np.einsum("...l,...l->...", f.gradient(x), frame[..., :, i])
    if rest:
        h = 1e-4
    else:
        h = 1e-5 * (1.0 + np.linalg.norm(x, axis=-1))[..., None]
    e = np.zeros(g.dim)
    e[i] = 1.0
    plus = _derivative(g, f, multiply(g, x, h * e), rest)
    minus = _derivative(g, f, multiply(g, x, -h * e), rest)
    return (plus - minus) / (2 * (h[..., 0] if np.ndim(h) else h))


def apply_vector_fields(g, f, x, multi_index):
    """``X_{i1} ... X_{ir} f(x)`` for 0-based indices, ``r <= 3``.

    ``X_{ir}`` acts first. Nested derivatives are central differences of the
    inner derivative along ``h -> x * (h e_i)``.
    """
    idx = tuple(int(i) for i in multi_index)
    if len(idx) > 3:
        raise UnsupportedOrder(f"derivatives of order {len(idx)} are not supported (max 3)")
    if any(not 0 <= i < g.dim for i in idx):
        raise IndexError(f"vector field index out of range for dimension {g.dim}: {idx}")
    return _derivative(g, f, np.asarray(x, dtype=float), idx)


def horizontal_gradient(g, f, x):
    """``(X_1 f, ..., X_m f)`` at ``x``; shape ``(..., m)``."""
    x = np.asarray(x, dtype=float)
    frame = left_invariant_frame(g, x, g.m)
    return np.einsum("...l,...li->...i", f.gradient(x), frame)


def taylor_polynomial(g, phi, x, h, order):
    """Stratified Taylor polynomial of ``phi`` at ``x`` evaluated at increment ``h``.

    Sums run over all ``N`` coordinates, higher layers included.
    """
    if order not in (1, 2):
        raise UnsupportedOrder(f"Taylor order must be 1 or 2, got {order}")
    x = np.asarray(x, dtype=float)
    h = np.asarray(h, dtype=float)
    n = g.dim
    total = phi(x)
    for i in range(n):
        total = total + h[..., i] * apply_vector_fields(g, phi, x, (i,))
    if order == 2:
        for i in range(n):
            for j in range(n):
                total = total + 0.5 * h[..., i] * h[..., j] * apply_vector_fields(g, phi, x, (i, j))
    return total


def taylor_decay_exponent(g, phi, x, h0, scales=None):
    """Log-log slope of the first-order remainder along ``h = delta_s(h0)``.

    Returns ``(slope, scales, remainders, norms)``; the slope is fitted
    against ``s`` itself.
    """
    from .groups import dilate

    scales = 2.0 ** -np.arange(4, 11) if scales is None else np.asarray(scales, dtype=float)
    rem = []
    norms = []
    for s in scales:
        h = dilate(g, s, h0)
        exact = phi(multiply(g, x, h))
        rem.append(abs(exact - taylor_polynomial(g, phi, x, h, 1)))
        norms.append(float(dinf_norm(g, h)))
    rem = np.asarray(rem, dtype=float)
    slope = np.polyfit(np.log(scales), np.log(np.maximum(rem, 1e-300)), 1)[0]
    return float(slope), scales, rem, np.asarray(norms)


# test functions


def _bump_value(x, p):
    r2 = 0.0
    for i in range(p.shape[0] - 1):
        r2 = r2 + (x[i] / p[i + 1]) ** 2
    return p[0] * np.exp(1.0 - 1.0 / np.maximum(1.0 - r2, 1e-150))


def _bump_grad(x, p, out):
    r2 = 0.0
    n = p.shape[0] - 1
    for i in range(n):
        r2 = r2 + (x[i] / p[i + 1]) ** 2
    d = np.maximum(1.0 - r2, 1e-150)
    f = p[0] * np.exp(1.0 - 1.0 / d)
    for i in range(n):
        out[i] = -f * 2.0 * x[i] / p[i + 1] ** 2 / d**2


def bump(dim, scales=1.0, height=1.0):
    """``height * exp(1 - 1/(1 - r^2))`` with ``r^2 = sum (x_i/a_i)^2``; C-infinity, compact."""
    a = np.broadcast_to(np.asarray(scales, dtype=float), (dim,))
    return SmoothFunction(
        _bump_value,
        dim,
        np.concatenate([[height], a]),
        _bump_grad,
        "Cinf",
        (-a, a),
        None,
        "bump",
    )


def _trig_value(x, p):
    return np.sin(x[0]) * np.cos(x[int(p[0])])


def _trig_grad(x, p, out):
    k = int(p[0])
    for i in range(int(p[1])):
        out[i] = 0.0 * x[0]
    out[0] = np.cos(x[0]) * np.cos(x[k])
    out[k] = out[k] - np.sin(x[0]) * np.sin(x[k])


def trig(dim):
    """``sin(x_0) cos(x_{N-1})``; smooth, not compactly supported."""
    return SmoothFunction(_trig_value, dim, np.array([dim - 1.0, dim]), _trig_grad, "Cinf", None, None, "trig")


def _poly_value(x, p):
    nt = int(p[0])
    nd = int(p[1])
    val = 0.0 * x[0]
    for k in range(nt):
        term = p[2 + k] + 0.0 * x[0]
        for d in range(nd):
            e = int(p[2 + nt + k * nd + d])
            if e > 0:
                term = term * x[d] ** e
        val = val + term
    return val


def _poly_grad(x, p, out):
    nt = int(p[0])
    nd = int(p[1])
    for i in range(nd):
        out[i] = 0.0 * x[0]
    for k in range(nt):
        for i in range(nd):
            ei = int(p[2 + nt + k * nd + i])
            if ei == 0:
                continue
            term = p[2 + k] * ei * x[i] ** (ei - 1)
            for d in range(nd):
                e = int(p[2 + nt + k * nd + d])
                if d != i and e > 0:
                    term = term * x[d] ** e
            out[i] = out[i] + term


def poly_params(exponents, coefs):
    exps = np.atleast_2d(np.asarray(exponents, dtype=int))
    coefs = np.atleast_1d(np.asarray(coefs, dtype=float))
    if exps.shape[0] != coefs.shape[0] or np.any(exps < 0):
        raise ValueError("need one row of nonnegative exponents per coefficient")
    return np.concatenate([[exps.shape[0], exps.shape[1]], coefs, exps.ravel()]).astype(float)


def polynomial(exponents, coefs, name="poly"):
    """``sum_k coefs[k] * prod_d x_d ** exponents[k][d]``."""
    p = poly_params(exponents, coefs)
    return SmoothFunction(_poly_value, int(p[1]), p, _poly_grad, "Cinf", None, None, name)


def _koranyi_value(x, p):
    r2 = x[0] ** 2 + x[1] ** 2
    n = (r2 * r2 + 16.0 * x[2] ** 2) / p[0] ** 4
    return np.maximum(1.0 - n, 0.0) ** 2


def _koranyi_grad(x, p, out):
    r2 = x[0] ** 2 + x[1] ** 2
    a4 = p[0] ** 4
    n = (r2 * r2 + 16.0 * x[2] ** 2) / a4
    c = -2.0 * np.maximum(1.0 - n, 0.0) / a4
    out[0] = c * 4.0 * r2 * x[0]
    out[1] = c * 4.0 * r2 * x[1]
    out[2] = c * 32.0 * x[2]


def koranyi_bump(radius=1.0):
    """``max(0, 1 - ||x||_K^4)^2`` on H^1 with ``||x||_K^4 = (x^2+y^2)^2 + 16 z^2``; C^{1,1}."""
    a = float(radius)
    box = (np.array([-a, -a, -a * a / 4]), np.array([a, a, a * a / 4]))
    return SmoothFunction(_koranyi_value, 3, np.array([a]), _koranyi_grad, "C1,1", box, a, "koranyi-bump")


def function_from_name(spec, dim):
    """Resolve ``bump[:a1,...]``, ``trig``, ``poly:<degree>``, ``koranyi[:r]``."""
    kind, _, arg = str(spec).partition(":")
    args = [float(a) for a in arg.split(",") if a.strip()] if arg else []
    if kind == "bump":
        return bump(dim, args if args else 1.0)
    if kind == "trig":
        return trig(dim)
    if kind == "poly":
        deg = int(args[0]) if args else 2
        return polynomial(np.eye(dim, dtype=int) * deg, np.ones(dim), name=f"poly:{deg}")
    if kind == "koranyi":
        if dim != 3:
            raise ValueError("koranyi bump lives on heisenberg:1")
        return koranyi_bump(args[0] if args else 1.0)
    raise KeyError(f"unknown function {spec!r}")


# indicators and mollification


def indicator(domain):
    """Sharp indicator ``1{phi > 0}`` of a level-set domain as a degenerate SmoothFunction."""
    phi = domain.phi

    def value(x, p):
        return (phi(x, p) > 0.0) * 1.0

    jit_value = None
    if _accel.USE_NUMBA:
        phi_nb = domain.jitted

        def _value_nb(x, p):
            return 1.0 if phi_nb(x, p) > 0.0 else 0.0

        jit_value = _accel.njit(_value_nb)
    lo, hi = domain.box
    return SmoothFunction(value, domain.dim, domain.params, None, "indicator", (lo, hi), None,
                          f"1[{domain.name}]", jit_value)


def mollifier_nodes(g, eps, n_nodes=512, seed=0):
    """Scrambled Sobol nodes ``y`` in the ``d_inf`` ball of radius ``eps`` and weights.

    Weights are ``(1 - (||y||/eps)^2)^3`` normalized to unit sum, so the
    discrete mollifier has unit mass exactly.
    """
    if not eps > 0:
        raise ValueError(f"mollifier radius must be positive, got {eps}")
    sob = qmc.Sobol(g.dim, scramble=True, seed=seed)
    u = 2.0 * sob.random(n_nodes) - 1.0
    r = dinf_norm(g, u)
    w = np.clip(1.0 - r**2, 0.0, None) ** 3
    keep = w > 0
    u, w = u[keep], w[keep]
    y = u * float(eps) ** g.layer
    return y, w / w.sum()


def mollify(g, f, eps, n_nodes=512, seed=0):
    """``f_eps(x) = sum_q w_q f(y_q^{-1} * x)``, a quadrature of ``f * rho_eps``.

    ``f`` is a SmoothFunction or a level-set domain (its indicator is used).
    """
    if not isinstance(f, SmoothFunction):
        f = indicator(f)
    nodes, weights = mollifier_nodes(g, eps, n_nodes, seed)
    inner = f.value
    neg = -nodes

    def value(x, p):
        # x: (N, ...) coordinate-first batch
        xb = np.moveaxis(np.asarray(x, dtype=float), 0, -1)
        lead = xb.shape[:-1]
        flat = xb.reshape(-1, g.dim)
        out = np.zeros(flat.shape[0])
        block = max(1, 200_000 // len(weights))
        for lo in range(0, flat.shape[0], block):
            pts = multiply(g, neg[None, :, :], flat[lo : lo + block, None, :])
            vals = inner(np.moveaxis(pts, -1, 0), p)
            out[lo : lo + block] = np.asarray(vals) @ weights
        return out.reshape(lead) if lead else float(out[0])

    jit_value = None
    if _accel.USE_NUMBA:
        from .kernels import make_mollified_kernel

        jit_value = make_mollified_kernel(f.jitted, neg, weights, g)

    support = None
    if f.support is not None:
        # f_eps vanishes off y * supp(f); images of the box corners bound it
        # exactly in step 2 (affine in the box point) and closely otherwise
        lo, hi = f.support
        corners = np.array(np.meshgrid(*zip(lo, hi), indexing="ij")).reshape(g.dim, -1).T
        img = multiply(g, nodes[:, None, :], corners[None, :, :]).reshape(-1, g.dim)
        pad = 0.05 * (hi - lo)
        support = (np.minimum(img.min(0), lo) - pad, np.maximum(img.max(0), hi) + pad)
    return SmoothFunction(value, g.dim, f.params, None, "C2", support, None,
                          f"moll[{f.name},{eps:g}]", jit_value)


def variation_smooth(g, f, n=200_000, seed=0):
    """``Var_H(f) = int |grad_H f| dx`` by Monte Carlo over the support box.

    Returns ``(value, stderr)``.
    """
    if f.support is None:
        raise ValueError("variation needs a compactly supported function (support box)")
    lo, hi = f.support
    rng = np.random.default_rng(seed)
    vol = float(np.prod(hi - lo))
    vals = np.empty(n)
    block = 50_000
    for a in range(0, n, block):
        x = rng.uniform(lo, hi, size=(min(block, n - a), g.dim))
        vals[a : a + len(x)] = np.linalg.norm(horizontal_gradient(g, f, x), axis=-1)
    return vol * vals.mean(), vol * vals.std(ddof=1) / np.sqrt(n)
