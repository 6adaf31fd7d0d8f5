import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from carnot_heat.domains import (
    EmptyLevel,
    ball,
    detect_characteristic_points,
    domain_from_name,
    horizontal_perimeter,
    hn_torus,
    perimeter_continuity_scan,
    polynomial_domain,
    superellipse,
)
from carnot_heat.groups import GroupError, euclidean, heisenberg, left_invariant_frame

H1_BALL = 2 * math.pi * quad(lambda z: math.sqrt((1 - z * z) * (1 + z * z / 4)), -1, 1)[0]


def test_contains_and_boxes():
    d = domain_from_name("h1-torus:2,0.5")
    assert d.contains(np.array([2.0, 0.0, 0.0]))
    assert not d.contains(np.array([0.0, 0.0, 0.0]))
    lo, hi = d.box
    x = d.boundary_points(500)
    assert np.all((x > lo) & (x < hi))
    assert np.allclose(d.level(x), 0, atol=1e-9)


def test_characteristic_points():
    h = heisenberg(1)
    rep = detect_characteristic_points(h, domain_from_name("h1-ball:1"), tol=0.05, probes=200_000)
    assert not rep.empty
    assert np.all(np.abs(np.abs(rep.points[:, 2]) - 1) < 0.05)
    assert detect_characteristic_points(h, domain_from_name("h1-torus:2,0.5"), probes=50_000).empty
    assert detect_characteristic_points(euclidean(2), domain_from_name("disk:1"), probes=20_000).empty


@given(st.floats(-1, 1), st.floats(0, 2 * math.pi))
def test_nu_h_identity_on_sphere(z, th):
    # sqrt(sum <X_i, nu>^2) = |grad_H phi| / |grad phi| on the unit sphere in H^1
    g = heisenberg(1)
    d = domain_from_name("h1-ball:1")
    r = math.sqrt(max(1 - z * z, 0.0))
    p = np.array([r * math.cos(th), r * math.sin(th), z])
    F = left_invariant_frame(g, p, 2)
    direct = math.sqrt(float(np.sum((p @ F) ** 2)))
    assert d.nu_h(g, p) == pytest.approx(direct, abs=1e-12)
    assert direct == pytest.approx(math.sqrt((1 - z * z) * (1 + z * z / 4)), abs=1e-12)


@pytest.mark.parametrize("method", ["boundary-quadrature", "shell-coarea", "mollified-variation"])
def test_disk_perimeter_all_methods(method):
    est = horizontal_perimeter(euclidean(2), domain_from_name("disk:1"), method)
    tol = 1e-6 if method == "boundary-quadrature" else 0.01
    assert est.value == pytest.approx(2 * math.pi, rel=tol)
    assert est.method == method


def test_h1_ball_quadrature_matches_oracle():
    est = horizontal_perimeter(heisenberg(1), domain_from_name("h1-ball:1"))
    assert est.value == pytest.approx(H1_BALL, rel=1e-5)


def test_torus_methods_agree():
    g = heisenberg(1)
    d = domain_from_name("h1-torus:2,0.5")
    q = horizontal_perimeter(g, d).value
    s = horizontal_perimeter(g, d, "shell-coarea").value
    assert abs(q - s) / q < 0.01


def test_interval_perimeter_counts_endpoints():
    assert horizontal_perimeter(euclidean(1), domain_from_name("interval:0,3")).value == pytest.approx(2)


def test_euclidean_sphere_area():
    est = horizontal_perimeter(euclidean(3), ball(3, 2.0))
    assert est.value == pytest.approx(4 * math.pi * 4, rel=1e-6)


def test_superellipse_methods_agree():
    g = euclidean(2)
    d = superellipse(2, 1.0, 4)
    s = horizontal_perimeter(g, d, "shell-coarea")
    m = horizontal_perimeter(g, d, "mollified-variation")
    assert abs(s.value - m.value) / s.value < 0.02


def test_disk_continuity_scan_matches_circle():
    scan = perimeter_continuity_scan(euclidean(2), domain_from_name("disk:1"), [-0.2, -0.1, 0.1, 0.2])
    assert np.allclose(scan.values, 2 * math.pi * np.sqrt(1 - scan.levels), rtol=1e-6)
    assert scan.monotone


def test_shell_scan_skips_levels_outside_the_box():
    g = heisenberg(1)
    d = domain_from_name("h1-torus:2,0.5")
    scan = perimeter_continuity_scan(g, d, [-0.1, -0.001, 0.001], "shell-coarea", n=1 << 16)
    assert -0.1 in scan.empty
    scan = perimeter_continuity_scan(g, d, [1.5], "boundary-quadrature")
    assert 1.5 in scan.empty
    with pytest.raises(EmptyLevel):
        horizontal_perimeter(g, d, "shell-coarea", levels=(-0.1,))


def test_hn_torus_and_custom_domain():
    d = hn_torus(2, 2.0, 0.5)
    assert d.dim == 5 and d.chart is None
    est = horizontal_perimeter(heisenberg(2), d, "shell-coarea", n=1 << 16, replicates=4)
    assert est.value > 0
    # disk as a custom polynomial domain: 1 - x^2 - y^2
    p = polynomial_domain([[0, 0], [2, 0], [0, 2]], [1.0, -1.0, -1.0], ([-1.1, -1.1], [1.1, 1.1]))
    s = horizontal_perimeter(euclidean(2), p, "shell-coarea")
    assert s.value == pytest.approx(2 * math.pi, rel=0.01)


def test_errors():
    with pytest.raises(KeyError):
        domain_from_name("pentagon:1")
    with pytest.raises(ValueError):
        domain_from_name("ball:1")
    with pytest.raises(ValueError):
        domain_from_name("h1-torus:0.5,2")
    with pytest.raises(GroupError):
        horizontal_perimeter(heisenberg(1), domain_from_name("disk:1"))
    with pytest.raises(ValueError):
        horizontal_perimeter(heisenberg(2), hn_torus(2), "boundary-quadrature")
    with pytest.raises(ValueError):
        horizontal_perimeter(euclidean(2), domain_from_name("disk:1"), "guess")


def test_volumes():
    assert domain_from_name("disk:2").volume() == pytest.approx(4 * math.pi)
    d = domain_from_name("h1-torus:2,0.5")
    assert d.volume() == pytest.approx(2 * math.pi**2 * 2 * 0.25, rel=1e-8)
    assert d._mc_volume(400_000, 0) == pytest.approx(d.volume(), rel=0.02)
