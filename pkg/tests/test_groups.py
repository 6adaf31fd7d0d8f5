import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.linalg import expm

from carnot_heat.groups import (
    CarnotGroup,
    GroupError,
    bracket,
    calibrate_epsilons,
    closed_form_product,
    dilate,
    dinf_norm,
    distance,
    engel,
    euclidean,
    free_step2,
    from_name,
    heisenberg,
    inverse,
    left_invariant_frame,
    load_group,
    multiply,
    triangle_violations,
)

GROUPS = [euclidean(3), heisenberg(1), heisenberg(2), free_step2(3), engel()]
coord = st.floats(-3, 3, allow_nan=False)


def points(g, n):
    return st.lists(coord, min_size=g.dim * n, max_size=g.dim * n).map(lambda v: np.reshape(v, (n, g.dim)))


def matrix_rep(g):
    """Faithful nilpotent matrix representation for the step >= 2 test groups."""
    if g.name == "heisenberg:1":
        E = lambda i, j: np.eye(3)[:, [i]] @ np.eye(3)[[j], :]  # noqa: E731
        return [E(0, 1), E(1, 2), E(0, 2)]
    if g.name == "engel":
        E = lambda i, j: np.eye(4)[:, [i]] @ np.eye(4)[[j], :]  # noqa: E731
        # X1 = E12 + E23, X2 = E34: [X1, X2] = E24 = X3, [X1, X3] = E14 = X4
        return [E(0, 1) + E(1, 2), E(2, 3), E(1, 3), E(0, 3)]
    raise KeyError(g.name)


# spec examples


def test_euclidean_product_is_addition():
    assert np.allclose(multiply(euclidean(2), [1, 2], [3, 4]), [4, 6])


def test_heisenberg_product_example():
    assert np.allclose(multiply(heisenberg(1), [1, 0, 0], [0, 1, 0]), [1, 1, 0.5])


@pytest.mark.parametrize("g", GROUPS, ids=lambda g: g.name)
def test_inverse_is_negation(g, rng):
    x = rng.standard_normal(g.dim)
    assert np.allclose(multiply(g, x, inverse(g, x)), 0)
    assert np.allclose(multiply(g, x, -x), 0)


def test_norm_examples():
    assert dinf_norm(euclidean(2), [3, 4]) == pytest.approx(5)
    h = heisenberg(1)
    assert dinf_norm(h, [0, 0, 4]) == pytest.approx(2)
    h2 = CarnotGroup(h.strata, h.structure, eps=(1.0, 0.5), name="h")
    assert dinf_norm(h2, [0, 0, 4]) == pytest.approx(1)


def test_frame_examples():
    assert np.allclose(left_invariant_frame(euclidean(3), [1.0, 2.0, 3.0]), np.eye(3))
    x, y, z = 0.7, -1.3, 2.0
    F = left_invariant_frame(heisenberg(1), [x, y, z])
    assert np.allclose(F[:, 0], [1, 0, -y / 2])
    assert np.allclose(F[:, 1], [0, 1, x / 2])
    assert np.allclose(F[:, 2], [0, 0, 1])
    for g in GROUPS:
        assert np.allclose(left_invariant_frame(g, np.zeros(g.dim)), np.eye(g.dim))


def test_dilation_example():
    assert np.allclose(dilate(heisenberg(1), 2.0, [1, 1, 1]), [2, 2, 4])
    with pytest.raises(GroupError):
        dilate(heisenberg(1), 0.0, [1, 1, 1])


# properties


@pytest.mark.parametrize("g", GROUPS, ids=lambda g: g.name)
def test_associative(g):
    @given(points(g, 3))
    def check(p):
        x, y, z = p
        lhs = multiply(g, multiply(g, x, y), z)
        rhs = multiply(g, x, multiply(g, y, z))
        assert np.allclose(lhs, rhs, atol=1e-9 * (1 + np.abs(lhs).max()))

    check()


@pytest.mark.parametrize("g", GROUPS, ids=lambda g: g.name)
def test_dilation_is_automorphism_and_norm_homogeneous(g):
    @given(points(g, 2), st.floats(0.1, 10))
    def check(p, lam):
        x, y = p
        a = dilate(g, lam, multiply(g, x, y))
        b = multiply(g, dilate(g, lam, x), dilate(g, lam, y))
        assert np.allclose(a, b, rtol=1e-9, atol=1e-9 * lam**g.step)
        assert dinf_norm(g, dilate(g, lam, x)) == pytest.approx(lam * dinf_norm(g, x), rel=1e-9, abs=1e-12)

    check()


@pytest.mark.parametrize("g", [heisenberg(1), heisenberg(3), free_step2(2), free_step2(4)], ids=lambda g: g.name)
def test_bch_matches_closed_form(g):
    prod = closed_form_product(g)

    @given(points(g, 2))
    def check(p):
        assert np.allclose(multiply(g, p[0], p[1]), prod(p[0], p[1]), atol=1e-10)

    check()


@pytest.mark.parametrize("g", [heisenberg(1), engel()], ids=lambda g: g.name)
def test_bch_matches_matrix_exponential(g):
    rep = matrix_rep(g)

    def ex(v):
        return expm(sum(c * R for c, R in zip(v, rep)))

    @given(points(g, 2))
    def check(p):
        x, y = p
        assert np.allclose(ex(x) @ ex(y), ex(multiply(g, x, y)), atol=1e-8)

    check()


def test_engel_bracket_relations():
    g = engel()
    e = np.eye(4)
    assert np.allclose(bracket(g, e[0], e[1]), e[2])
    assert np.allclose(bracket(g, e[0], e[2]), e[3])
    assert np.allclose(bracket(g, e[1], e[2]), 0)
    assert g.step == 3 and g.m == 2 and g.Q == 2 + 2 + 3


@pytest.mark.parametrize("g", GROUPS, ids=lambda g: g.name)
def test_frame_is_derivative_of_product(g, rng):
    x = rng.standard_normal(g.dim)
    F = left_invariant_frame(g, x)
    h = 1e-6
    for i in range(g.dim):
        e = np.zeros(g.dim)
        e[i] = h
        fd = (multiply(g, x, e) - multiply(g, x, -e)) / (2 * h)
        assert np.allclose(F[:, i], fd, atol=1e-6)


@pytest.mark.parametrize("g", [euclidean(2), heisenberg(1), heisenberg(2)], ids=lambda g: g.name)
def test_distance_left_invariant_and_triangle(g, rng):
    x, y, z = rng.standard_normal((3, 500, g.dim))
    assert np.allclose(distance(g, multiply(g, z, x), multiply(g, z, y)), distance(g, x, y), rtol=1e-9)
    assert triangle_violations(g, 20_000) == 0


def test_calibrate_epsilons_gives_valid_norm():
    g = calibrate_epsilons(free_step2(3), n=20_000)
    assert triangle_violations(g, 20_000) == 0
    assert g.eps[0] == 1.0 and all(0 < e <= 1 for e in g.eps)


def test_invalid_structures_rejected():
    C = np.zeros((3, 3, 3))
    C[0, 1, 2] = 1.0  # missing antisymmetric partner
    with pytest.raises(GroupError):
        CarnotGroup((2, 1), C)
    with pytest.raises(GroupError):
        CarnotGroup((2, 1), np.zeros((3, 3, 3)))  # V_1 does not generate V_2
    with pytest.raises(GroupError):
        CarnotGroup((0,), np.zeros((0, 0, 0)))
    with pytest.raises(GroupError):
        multiply(heisenberg(1), [1, 2], [3, 4])


def test_registry_and_group_file(tmp_path):
    assert from_name("heisenberg:2").dim == 5
    assert from_name("free2:3").strata == (3, 3)
    assert from_name("engel").strata == (2, 1, 1)
    with pytest.raises(GroupError):
        from_name("nilpotent:7")
    p = tmp_path / "engel.txt"
    p.write_text("name = engel-file\nstrata = 2, 1, 1\neps = 1, 0.5, 0.5\nbracket = 1 2 3 1.0\nbracket = 1 3 4 1.0\n")
    g = load_group(p)
    assert np.allclose(g.structure, engel().structure)
    assert g.eps == (1.0, 0.5, 0.5)
    assert from_name(str(p)).name == "engel-file"
