"""Carnot groups in exponential coordinates.

A group is described by its strata dimensions and the structure constants
``C[i, j, l]`` of the bracket ``[X_i, X_j] = sum_l C[i, j, l] X_l`` in a basis
adapted to the stratification. Points are plain float arrays of shape
``(..., N)``; the identity is the zero vector and the inverse is negation.

The product is the Baker-Campbell-Hausdorff series in Dynkin's form,
truncated at bracket length equal to the step, which is exact for nilpotent
algebras.
"""
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import cached_property, lru_cache
from itertools import product
from math import factorial
from pathlib import Path

import numpy as np

from . import kv

__all__ = [
    "CarnotGroup",
    "multiply",
    "inverse",
    "dilate",
    "dinf_norm",
    "distance",
    "left_invariant_frame",
    "bracket",
    "euclidean",
    "heisenberg",
    "free_step2",
    "engel",
    "from_name",
    "load_group",
    "calibrate_epsilons",
    "closed_form_product",
]


class GroupError(ValueError):
    pass


def dynkin_terms(k):
    """Dynkin's BCH terms up to bracket length ``k``.

    Returns a list of ``(coef, word)`` where ``word`` is a tuple over
    {0: X, 1: Y} read as the right-nested bracket ``[w0, [w1, [..., wL]]]``.
    """
    acc = {}
    pairs = [(r, s) for r in range(k + 1) for s in range(k + 1) if 1 <= r + s <= k]
    for n in range(1, k + 1):
        for seq in product(pairs, repeat=n):
            total = sum(r + s for r, s in seq)
            if total > k:
                continue
            denom = total
            word = []
            for r, s in seq:
                denom *= factorial(r) * factorial(s)
                word += [0] * r + [1] * s
            word = tuple(word)
            if len(word) >= 2 and word[-1] == word[-2]:
                continue
            coef = Fraction((-1) ** (n - 1), n * denom)
            acc[word] = acc.get(word, Fraction(0)) + coef
    return [(c, w) for w, c in sorted(acc.items(), key=lambda kv_: (len(kv_[0]), kv_[0])) if c != 0]


@dataclass(frozen=True, eq=False)
class CarnotGroup:
    """Stratified nilpotent group ``R^N`` with a graded bracket."""

    strata: tuple
    structure: np.ndarray = field(repr=False)
    eps: tuple = None
    name: str = "custom"

    def __post_init__(self):
        strata = tuple(int(s) for s in self.strata)
        if not strata or any(s < 1 for s in strata):
            raise GroupError(f"strata dimensions must be positive, got {self.strata}")
        object.__setattr__(self, "strata", strata)
        n = sum(strata)
        C = np.asarray(self.structure, dtype=float)
        if C.shape != (n, n, n):
            raise GroupError(f"structure constants must have shape {(n, n, n)}, got {C.shape}")
        C = C.copy()
        C.setflags(write=False)
        object.__setattr__(self, "structure", C)
        eps = (1.0,) * len(strata) if self.eps is None else tuple(float(e) for e in self.eps)
        if len(eps) != len(strata):
            raise GroupError("need one norm weight per stratum")
        if eps[0] != 1.0 or any(not (0.0 < e <= 1.0) for e in eps):
            raise GroupError(f"norm weights need eps_1 = 1 and eps_j in (0, 1], got {eps}")
        object.__setattr__(self, "eps", eps)
        self._validate()

    def _validate(self, tol=1e-12):
        C = self.structure
        if np.abs(C + C.transpose(1, 0, 2)).max(initial=0.0) > tol:
            raise GroupError("structure constants are not antisymmetric")
        lay = self.layer
        mask = lay[:, None, None] + lay[None, :, None] != lay[None, None, :]
        if np.abs(C[mask]).max(initial=0.0) > tol:
            raise GroupError("structure constants do not respect the grading")
        # Jacobi: [a,[b,c]] + [b,[c,a]] + [c,[a,b]] = 0
        inner = np.einsum("bcp,apo->abco", C, C)
        jac = inner + inner.transpose(1, 2, 0, 3) + inner.transpose(2, 0, 1, 3)
        if np.abs(jac).max(initial=0.0) > 1e-10:
            raise GroupError("structure constants violate the Jacobi identity")
        for j in range(1, self.step):
            src = C[self.slices[0]][:, self.slices[j - 1]][..., self.slices[j]]
            rank = np.linalg.matrix_rank(src.reshape(-1, self.strata[j]))
            if rank != self.strata[j]:
                raise GroupError(f"[V_1, V_{j}] does not span V_{j + 1}")

    @property
    def step(self):
        return len(self.strata)

    @property
    def m(self):
        return self.strata[0]

    @property
    def dim(self):
        return sum(self.strata)

    N = dim

    @property
    def Q(self):
        return sum((j + 1) * s for j, s in enumerate(self.strata))

    @cached_property
    def layer(self):
        """1-based layer index of each coordinate."""
        return np.repeat(np.arange(1, self.step + 1), self.strata)

    @cached_property
    def slices(self):
        edges = np.concatenate([[0], np.cumsum(self.strata)])
        return [slice(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:])]

    @cached_property
    def bch(self):
        return dynkin_terms(self.step)

    @cached_property
    def bch_tables(self):
        """BCH terms as arrays ``(coef, words, lengths)`` for compiled kernels."""
        terms = [t for t in self.bch if len(t[1]) >= 2]
        k = max([len(w) for _, w in terms], default=2)
        words = np.zeros((len(terms), k), dtype=np.int64)
        lengths = np.zeros(len(terms), dtype=np.int64)
        coefs = np.zeros(len(terms))
        for i, (c, w) in enumerate(terms):
            words[i, : len(w)] = w
            lengths[i] = len(w)
            coefs[i] = float(c)
        return coefs, words, lengths

    @property
    def is_abelian(self):
        return self.step == 1

    def __repr__(self):
        return f"CarnotGroup(name={self.name!r}, strata={self.strata}, eps={self.eps})"


def _points(g, x):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != g.dim:
        raise GroupError(f"expected points of dimension {g.dim}, got shape {x.shape}")
    return x


@lru_cache(maxsize=None)
def _sparse_structure(g):
    ti, tj, tl = np.nonzero(g.structure)
    return tuple(zip(ti.tolist(), tj.tolist(), tl.tolist(), g.structure[ti, tj, tl].tolist()))


def bracket(g, u, v):
    """Lie bracket of algebra elements in coordinates."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    out = np.zeros(np.broadcast_shapes(u.shape, v.shape))
    for i, j, l, c in _sparse_structure(g):
        out[..., l] += c * u[..., i] * v[..., j]
    return out


def multiply(g, x, y):
    """Group product ``x * y`` (broadcasts over leading axes)."""
    x = _points(g, x)
    y = _points(g, y)
    if g.step == 1:
        return x + y
    if g.step == 2:
        return x + y + 0.5 * bracket(g, x, y)
    x, y = np.broadcast_arrays(x, y)
    letters = (x, y)
    out = x + y
    memo = {}

    def nested(word):
        if len(word) == 1:
            return letters[word[0]]
        if word not in memo:
            memo[word] = bracket(g, letters[word[0]], nested(word[1:]))
        return memo[word]

    for coef, word in g.bch:
        if len(word) >= 2:
            out = out + float(coef) * nested(word)
    return out


def inverse(g, x):
    return -_points(g, x)


def dilate(g, lam, x):
    """Dilation: layer ``j`` scaled by ``lam**j``."""
    if not lam > 0:
        raise GroupError(f"dilation factor must be positive, got {lam}")
    return _points(g, x) * float(lam) ** g.layer


def dinf_norm(g, x):
    """Layered max norm ``max_j eps_j |xi_j|**(1/j)``."""
    x = _points(g, x)
    vals = [
        e * np.linalg.norm(x[..., s], axis=-1) ** (1.0 / (j + 1))
        for j, (e, s) in enumerate(zip(g.eps, g.slices))
    ]
    return np.max(np.stack(vals, axis=0), axis=0)


def distance(g, x, y):
    """``d_inf(x, y) = ||y^{-1} * x||``."""
    return dinf_norm(g, multiply(g, inverse(g, y), x))


def left_invariant_frame(g, x, cols=None):
    """Matrix whose column ``i`` is the coordinate vector of ``X_i`` at ``x``.

    Exact: only BCH terms linear in the second argument contribute to
    ``d/dh (x * h e_i)`` at ``h = 0``. ``cols`` limits the result to the
    first ``cols`` fields (``g.m`` gives the horizontal frame).
    """
    x = _points(g, x)
    n = g.dim
    k = n if cols is None else int(cols)
    lead = x.shape[:-1]
    frame = np.zeros(lead + (n, k))
    for i in range(k):
        e = np.zeros(n)
        e[i] = 1.0
        col = np.broadcast_to(e, lead + (n,)).copy()
        if g.step > 1:
            for coef, word in g.bch:
                if word.count(1) != 1 or len(word) < 2:
                    continue
                v = e if word[-1] == 1 else x
                for a in reversed(word[:-1]):
                    v = bracket(g, e if a == 1 else x, v)
                col += float(coef) * v
        frame[..., :, i] = col
    return frame


# built-in groups


def euclidean(n):
    return CarnotGroup((n,), np.zeros((n, n, n)), name=f"euclidean:{n}")


def heisenberg(n=1):
    """``H^n`` with coordinates ``(x_1..x_n, y_1..y_n, z)`` and ``[X_i, Y_i] = Z``."""
    N = 2 * n + 1
    C = np.zeros((N, N, N))
    for i in range(n):
        C[i, n + i, 2 * n] = 1.0
        C[n + i, i, 2 * n] = -1.0
    return CarnotGroup((2 * n, 1), C, name=f"heisenberg:{n}")


def free_step2(m):
    """Free step-2 group on ``m`` generators; ``[X_a, X_b] = X_(a,b)`` for a < b."""
    if m < 2:
        raise GroupError("free step-2 group needs at least 2 generators")
    pairs = [(a, b) for a in range(m) for b in range(a + 1, m)]
    N = m + len(pairs)
    C = np.zeros((N, N, N))
    for k, (a, b) in enumerate(pairs):
        C[a, b, m + k] = 1.0
        C[b, a, m + k] = -1.0
    return CarnotGroup((m, len(pairs)), C, name=f"free2:{m}")


def engel():
    """Engel group: strata (2, 1, 1), ``[X1, X2] = X3``, ``[X1, X3] = X4``."""
    C = np.zeros((4, 4, 4))
    C[0, 1, 2], C[1, 0, 2] = 1.0, -1.0
    C[0, 2, 3], C[2, 0, 3] = 1.0, -1.0
    return CarnotGroup((2, 1, 1), C, name="engel")


def closed_form_product(g):
    """Textbook product law for the built-in groups, used as a test oracle."""
    kind = g.name.split(":")[0]
    if kind == "euclidean":
        return lambda x, y: np.asarray(x) + np.asarray(y)
    if kind == "heisenberg":
        n = (g.dim - 1) // 2

        def prod(x, y):
            x, y = np.asarray(x, float), np.asarray(y, float)
            out = x + y
            sym = x[..., :n] * y[..., n : 2 * n] - x[..., n : 2 * n] * y[..., :n]
            out[..., 2 * n] += 0.5 * sym.sum(axis=-1)
            return out

        return prod
    if kind == "free2":
        m = g.m
        pairs = [(a, b) for a in range(m) for b in range(a + 1, m)]

        def prod(x, y):
            x, y = np.asarray(x, float), np.asarray(y, float)
            out = x + y
            for k, (a, b) in enumerate(pairs):
                out[..., m + k] += 0.5 * (x[..., a] * y[..., b] - x[..., b] * y[..., a])
            return out

        return prod
    raise GroupError(f"no closed-form product for {g.name!r}")


def from_name(spec):
    """Resolve ``euclidean:n``, ``heisenberg:n``, ``free2:m``, ``engel`` or a group file path."""
    if isinstance(spec, CarnotGroup):
        return spec
    if spec == "engel":
        return engel()
    kind, _, arg = str(spec).partition(":")
    makers = {"euclidean": euclidean, "heisenberg": heisenberg, "free2": free_step2}
    if kind in makers:
        try:
            n = int(arg) if arg else 1
        except ValueError:
            raise GroupError(f"bad group size in {spec!r}") from None
        return makers[kind](n)
    path = Path(spec)
    if path.suffix and path.exists():
        return load_group(path)
    raise GroupError(f"unknown group {spec!r}")


def load_group(path):
    """Read a group file.

    Format (1-based indices)::

        name = engel
        strata = 2, 1, 1
        eps = 1, 0.5, 0.5
        bracket = 1 2 3 1.0     # [X1, X2] = 1.0 X3
        bracket = 1 3 4 1.0

    Each ``bracket`` line gives one structure constant; the antisymmetric
    partner is filled in automatically.
    """
    d = kv.parse_kv(Path(path).read_text(), repeated=("bracket",))
    strata = d.get("strata")
    if strata is None:
        raise GroupError("group file needs 'strata'")
    strata = (strata,) if isinstance(strata, int) else tuple(strata)
    if "step" in d and int(d["step"]) != len(strata):
        raise GroupError("'step' disagrees with the number of strata")
    n = sum(strata)
    C = np.zeros((n, n, n))
    for row in d.get("bracket", []):
        if not isinstance(row, tuple) or len(row) != 4:
            raise GroupError(f"bracket line needs 'i j l value', got {row!r}")
        i, j, l_, val = int(row[0]) - 1, int(row[1]) - 1, int(row[2]) - 1, float(row[3])
        C[i, j, l_] = val
        C[j, i, l_] = -val
    eps = d.get("eps")
    if eps is not None:
        eps = (eps,) if not isinstance(eps, tuple) else eps
    return CarnotGroup(strata, C, eps=eps, name=str(d.get("name", Path(path).stem)))


def _random_points(g, n, rng):
    lam = np.exp(rng.uniform(np.log(0.1), np.log(10.0), size=(n, 1)))
    return rng.standard_normal((n, g.dim)) * lam ** g.layer


def triangle_violations(g, n=100_000, seed=0):
    """Count triples with ``d(x, z) > d(x, y) + d(y, z)`` (relative slack 1e-12)."""
    rng = np.random.default_rng(seed)
    x, y, z = (_random_points(g, n, rng) for _ in range(3))
    lhs = distance(g, x, z)
    rhs = distance(g, x, y) + distance(g, y, z)
    return int(np.count_nonzero(lhs > rhs * (1 + 1e-12)))


def calibrate_epsilons(g, n=100_000, seed=0, shrink=0.9, max_rounds=200):
    """Shrink the higher-layer weights until ``d_inf`` passes the triangle test."""
    eps = list(g.eps)
    h = g
    for _ in range(max_rounds):
        if triangle_violations(h, n, seed) == 0:
            return h
        eps = [eps[0]] + [e * shrink for e in eps[1:]]
        h = replace(h, eps=tuple(eps))
    raise GroupError("could not calibrate norm weights")
