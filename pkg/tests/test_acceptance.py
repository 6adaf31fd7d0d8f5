"""Acceptance suite: one test per criterion, each a full CLI run at the stated tolerances.

Every run writes its CSV and JSON summary into a shared directory; the last
test replays all of them with a different worker count. Criterion outcomes
are collected by ``record_criterion`` and printed at the end of the session.
"""
import json
import math

import pytest

from carnot_heat import cli
from carnot_heat.config import ExperimentConfig

pytestmark = pytest.mark.acceptance

H1_BALL_PERIMETER = 10.169071  # 1-D quadrature of the horizontal perimeter of the unit ball in H^1
LEVELS = "-0.05, -0.02, -0.01, -0.005, -0.002, -0.001, 0.001, 0.002, 0.005, 0.01, 0.02, 0.05"

SUMMARIES = {}


@pytest.fixture(scope="module")
def outdir(tmp_path_factory):
    return tmp_path_factory.mktemp("acceptance")


def launch(outdir, tag, kind, **fields):
    params = fields.pop("params", {})
    cfg = ExperimentConfig(kind=kind, out=str(outdir / tag), params=params, **fields)
    status = cli.run(cfg.validate(), quiet=True)
    path = outdir / tag / f"{kind}.json"
    assert status in (0, 1), f"{tag}: exit status {status}"
    SUMMARIES[tag] = path
    return json.loads(path.read_text())


def test_c01_subordinator_laplace(outdir, record_criterion):
    s = launch(outdir, "c01", "subordinator", samples=1_000_000, params={"alphas": (1.0, 1.2, 1.5, 1.8)})
    ok = all(s["checks"][f"laplace[{a:g}]"] for a in (1.0, 1.2, 1.5, 1.8))
    record_criterion(1, "subordinator Laplace transform within 3 stderr", ok, f"checks={s['checks']}")
    assert ok


def test_c02_mu2_constant(outdir, record_criterion):
    s = launch(outdir, "c02", "subordinator", alpha=2.0, samples=1000,
               params={"kappa": True, "kappa_samples": 1_000_000, "kappa_steps": 64})
    k = s["values"]["kappa[2]"]
    gap = abs(k["estimate"] - 2 / math.sqrt(math.pi)) / (2 / math.sqrt(math.pi))
    ok = s["checks"]["kappa[2]"] and gap <= 0.01
    record_criterion(2, "sup constant at alpha=2 equals 2/sqrt(pi) within 1%", ok,
                     f"estimate={k['estimate']:.5f} +- {k['stderr']:.5f}, rel gap {gap:.2%}")
    assert ok


def test_c03_interval(outdir, record_criterion):
    s = launch(outdir, "c03", "heat-content", group="euclidean:1", domain="interval:0,1", alpha=2.0,
               samples=200_000, steps=512, params={"tol": 0.03})
    v = s["values"]
    ok = s["passed"] and abs(v["target"] - 2.0) < 1e-9
    record_criterion(3, "interval alpha=2 limit within 3% of 2", ok,
                     f"L={v['limit']:.4f} +- {v['limit_stderr']:.4f}, gap {v['rel_gap']:.2%}")
    assert ok


def test_c04_disk(outdir, record_criterion):
    s = launch(outdir, "c04", "heat-content", group="euclidean:2", domain="disk:1", alpha=1.5,
               samples=200_000, t_grid=(1e-2, 1e-5, 6), params={"tol": 0.1})
    v = s["values"]
    ok = s["passed"] and abs(v["target"] - 2 * math.pi) < 1e-6
    record_criterion(4, "disk alpha=1.5 limit within 10% of 2 pi", ok,
                     f"L={v['limit']:.4f} +- {v['limit_stderr']:.4f}, gap {v['rel_gap']:.2%}")
    assert ok


@pytest.mark.parametrize("alpha", [1.5, 2.0])
def test_c05_torus(outdir, record_criterion, alpha):
    s = launch(outdir, f"c05_{alpha:g}", "heat-content", group="heisenberg:1", domain="h1-torus:2,0.5",
               alpha=alpha, samples=200_000, params={"tol": 0.1, "cross_check": "shell-coarea"})
    v = s["values"]
    ok = s["passed"]
    record_criterion(5, f"H1 torus alpha={alpha:g}: limit within 10%, perimeter methods within 1%", ok,
                     f"L={v['limit']:.3f} +- {v['limit_stderr']:.3f} vs {v['target']:.3f} (gap {v['rel_gap']:.2%}),"
                     f" methods differ {v['perimeter_rel_diff']:.3%}")
    assert ok


@pytest.mark.parametrize("group", ["euclidean:1", "heisenberg:1"])
def test_c06_smooth_function(outdir, record_criterion, group):
    s = launch(outdir, f"c06_{group.split(':')[0]}", "smooth-function", group=group, function="bump", alpha=1.5,
               samples=200_000, t_values=(1e-4,), params={"tol": 0.1})
    v = s["values"]
    ok = s["passed"]
    record_criterion(6, f"smooth bump on {group}: ratio within 10% of the variation", ok,
                     f"ratio={v['ratio']:.4f} +- {v['ratio_stderr']:.4f}, variation {v['variation']:.4f},"
                     f" gap {v['rel_gap']:.2%}")
    assert ok


def test_c07_lower_bound(outdir, record_criterion):
    s = launch(outdir, "c07", "lower-bound", group="heisenberg:1", domain="h1-ball:1", alpha=1.5,
               samples=200_000, t_values=(1e-4,), params={"perimeter": H1_BALL_PERIMETER, "tol": 0.1})
    v = s["values"]
    ok = s["passed"]
    record_criterion(7, "H1 ball alpha=1.5: R(1e-4) >= 0.9 perimeter - 3 stderr", ok,
                     f"R={v['ratio']:.4f} +- {v['stderr']:.4f}, bound {0.9 * v['perimeter'] - 3 * v['stderr']:.4f}")
    assert ok


def test_c08_mollification(outdir, record_criterion):
    s = launch(outdir, "c08", "mollification", group="euclidean:1", domain="interval:0,1", alpha=1.5,
               samples=100_000, params={"eps": (0.05, 0.1)})
    ok = s["passed"]
    record_criterion(8, "mollified heat content dominates within 3 joint stderr", ok,
                     f"min z={s['values']['min_z']}")
    assert ok


def test_c09_martingale(outdir, record_criterion):
    s = launch(outdir, "c09", "exit-bounds", group="heisenberg:1", samples=100_000,
               params={"check": "martingale"})
    ok = s["passed"] and s["values"]["martingale_violations"] == 0
    record_criterion(9, "martingale bound: no violations beyond 3 stderr", ok,
                     f"violations={s['values']['martingale_violations']}")
    assert ok


def test_c10_calibration(outdir, record_criterion):
    s = launch(outdir, "c10", "exit-bounds", group="heisenberg:1", samples=100_000,
               params={"check": "calibration", "radii": (0.5, 1.0, 2.0, 3.0, 4.0)})
    ok = s["passed"] and s["values"]["best"] is not None
    record_criterion(10, "exit-bound constants found on H1", ok,
                     f"best={s['values']['best']}, fitted={s['values']['fitted_c']}")
    assert ok


def test_c11_taylor(outdir, record_criterion):
    s = launch(outdir, "c11", "taylor", group="heisenberg:1")
    ok = s["passed"] and s["values"]["min_slope"] >= 1.85
    record_criterion(11, "first-order Taylor remainder exponent >= 1.85 on H1", ok,
                     f"min slope={s['values']['min_slope']:.3f}")
    assert ok


def test_c12_tail_lemmas(outdir, record_criterion):
    s = launch(outdir, "c12", "tail-checks", group="heisenberg:1", samples=100_000,
               params={"alphas": (1.5, 2.0)})
    v = s["values"]
    ok = s["passed"]
    record_criterion(12, "tail order slope >= 0.9 and expectation limits at alpha 1.5, 2 on H1", ok,
                     f"slopes={v['tail_slope[1.5]']:.3f}/{v['tail_slope[2]']:.3f},"
                     f" sup ratio end {v['ratio_sup[1.5]'][-1]:.3f}/{v['ratio_sup[2]'][-1]:.3f}")
    assert ok


def test_c13_perimeter_continuity(outdir, record_criterion):
    torus = launch(outdir, "c13_torus", "perimeter", group="heisenberg:1", domain="h1-torus:2,0.5",
                   params={"methods": "shell-coarea", "levels": LEVELS})
    disk = launch(outdir, "c13_disk", "perimeter", group="euclidean:2", domain="disk:1",
                  params={"levels": LEVELS, "ref_tol": 0.005})
    ok_t = torus["checks"]["continuity[shell-coarea]"]
    ok_d = disk["checks"]["matches_circle"]
    record_criterion(13, "torus level scan converges; disk scan within 0.5% of 2 pi sqrt(1-r)", ok_t and ok_d,
                     f"torus={ok_t}, disk max dev {disk['values']['max_rel_dev_from_circle']:.2e}")
    assert ok_t and ok_d


def test_c14_replay(record_criterion):
    assert SUMMARIES, "no runs to replay"
    bad = [tag for tag, path in sorted(SUMMARIES.items()) if cli.replay(path, workers=2, quiet=True) != 0]
    record_criterion(14, "every run replays bit-identically with 2 workers", not bad,
                     f"{len(SUMMARIES)} runs, mismatches: {bad or 'none'}")
    assert not bad
