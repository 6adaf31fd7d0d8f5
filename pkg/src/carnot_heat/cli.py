"""Command-line experiment driver.

``carnot-heat <kind> --config FILE [--seed S] [--workers W] [--out DIR]``
runs one experiment and writes ``<kind>.csv`` plus ``<kind>.json`` into the
output directory. ``carnot-heat replay SUMMARY.json`` re-runs the embedded
configuration and compares the CSV cell by cell.

Exit status: 0 when every asserted check passes, 1 when a check fails (or
replay diverges), 2 for configuration and resolution errors. Files are only
written after the experiment finishes, through a temporary name and a
rename, so a failed run leaves nothing behind.
"""
import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, _accel
from .calculus import function_from_name, taylor_decay_exponent, variation_smooth
from .checks import check_martingale_bound, check_sup_expectation_limits, check_tail_order, fit_exit_bound_constants
from .config import KINDS, ConfigError, ExperimentConfig, load_config, resolve_group
from .domains import domain_from_name, horizontal_perimeter, perimeter_continuity_scan
from .groups import dilate, dinf_norm
from .heat import (
    default_t_grid,
    estimate_Q_f,
    ratio_curve,
    verify_lower_bound,
    verify_mollification_monotonicity,
)
from .kv import parse_value
from .rng import stream
from .stable import RateFunction, check_laplace, closed_form_kappa, estimate_sup_constant, mu_alpha

__all__ = ["Outcome", "execute", "run", "replay", "main"]

SCHEMA = 1


@dataclass
class Outcome:
    """What a runner produces: CSV table, named verdicts and summary values."""

    header: list
    rows: list
    checks: dict = field(default_factory=dict)
    values: dict = field(default_factory=dict)

    @property
    def failed(self):
        return [k for k, ok in self.checks.items() if not ok]

    def csv_text(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.header)
        for row in self.rows:
            w.writerow([_cell(v) for v in row])
        return buf.getvalue()


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


class _Params:
    """Typed access to the free-form ``params`` of a config."""

    def __init__(self, params):
        self.d = dict(params)

    def get(self, key, default=None):
        return self.d.get(key, default)

    def float(self, key, default):
        return float(self.d.get(key, default))

    def int(self, key, default):
        return int(self.d.get(key, default))

    def floats(self, key, default):
        v = self.d.get(key, default)
        if isinstance(v, str):
            v = parse_value(v)
        return tuple(float(x) for x in (v if isinstance(v, (list, tuple)) else (v,)))

    def words(self, key, default):
        v = self.d.get(key, default)
        if isinstance(v, (list, tuple)):
            return tuple(str(x) for x in v)
        return tuple(w.strip() for w in str(v).split(",") if w.strip())


def _rate(cfg, P, alpha=None):
    alpha = float(cfg.alpha if alpha is None else alpha)
    source = P.get("kappa_source", "exact" if alpha == 2.0 else "mc")
    return RateFunction.for_alpha(alpha, source, P.int("kappa_samples", 200_000), P.int("kappa_steps", 2048),
                                  cfg.seed, cfg.workers)


def _reference_perimeter(g, dom, P):
    """Target perimeter: an explicit ``perimeter`` param, else the chart quadrature, else shell-coarea."""
    if P.get("perimeter") is not None:
        return P.float("perimeter", 0.0), "given"
    method = P.get("perimeter_method", "boundary-quadrature" if dom.chart is not None else "shell-coarea")
    return horizontal_perimeter(g, dom, method, seed=0).value, method


# runners


def run_heat_content(cfg, g, P):
    """Ratio curve and extrapolated limit; params ``tol`` (0.1), ``exponent``, ``bridge``,
    ``perimeter``, ``perimeter_method``, ``cross_check`` (second perimeter method), ``agree_tol`` (0.01)."""
    dom = domain_from_name(cfg.domain, g.dim)
    t = cfg.t_points(default_t_grid(cfg.alpha))
    rate = _rate(cfg, P)
    bridge = P.get("bridge")
    curve = ratio_curve(g, dom, cfg.alpha, t, cfg.samples, cfg.steps, cfg.seed, cfg.workers, rate,
                        P.get("exponent"), None if bridge is None else bool(bridge))
    target, tmethod = _reference_perimeter(g, dom, P)
    gap = abs(curve.limit - target) / target
    tol = P.float("tol", 0.1)
    checks = {"limit_within_tol": bool(gap <= tol)}
    values = {"limit": curve.limit, "limit_stderr": curve.limit_stderr, "target": target,
              "target_method": tmethod, "rel_gap": gap, "tol": tol, "exponent": curve.exponent,
              "free_exponent": curve.free_exponent, "kappa": rate.kappa, "kappa_stderr": rate.stderr}
    if P.get("cross_check"):
        other = horizontal_perimeter(g, dom, P.get("cross_check"), seed=cfg.seed).value
        agree = abs(other - target) / target
        values.update(cross_check=other, cross_check_method=P.get("cross_check"), perimeter_rel_diff=agree)
        checks["perimeter_methods_agree"] = bool(agree <= P.float("agree_tol", 0.01))
    return Outcome(["t", "Q", "stderr", "ratio", "ratio_stderr"], curve.rows(), checks, values)


def run_smooth_function(cfg, g, P):
    """``(int f - Q_f(t)) / mu_alpha(t)`` against ``Var_H(f)``; params ``tol`` (0.1), ``variation_samples``."""
    f = function_from_name(cfg.function, g.dim)
    t = cfg.t_points((1e-4,))
    rate = _rate(cfg, P)
    var, var_se = variation_smooth(g, f, P.int("variation_samples", 200_000), cfg.seed)
    rows = []
    for tt in t:
        e = estimate_Q_f(g, f, cfg.alpha, tt, cfg.samples, cfg.steps, cfg.seed, cfg.workers)
        mu = mu_alpha(rate, tt)
        r = e.loss / mu
        se = math.hypot(e.loss_stderr / mu, r * rate.relative_error())
        rows.append((tt, e.Q, e.stderr, r, se, var))
    gap = abs(rows[-1][3] - var) / var
    tol = P.float("tol", 0.1)
    return Outcome(["t", "Q", "stderr", "ratio", "ratio_stderr", "variation"], rows,
                   {"smooth_limit_within_tol": bool(gap <= tol)},
                   {"variation": var, "variation_stderr": var_se, "ratio": rows[-1][3],
                    "ratio_stderr": rows[-1][4], "rel_gap": gap, "tol": tol})


def run_lower_bound(cfg, g, P):
    """``R(t_min) >= (1 - tol) |dOmega|_H - 3 stderr``; params ``tol`` (0.1), ``perimeter``."""
    dom = domain_from_name(cfg.domain, g.dim)
    t = cfg.t_points((1e-4,))
    rate = _rate(cfg, P)
    per, method = _reference_perimeter(g, dom, P)
    rep = verify_lower_bound(g, dom, cfg.alpha, t, per, cfg.samples, cfg.steps, cfg.seed, cfg.workers, rate,
                             P.float("tol", 0.1))
    bound = per * (1 - rep.tol) - 3 * rep.stderr
    return Outcome(["t", "ratio", "stderr", "perimeter", "bound"], [(rep.t, rep.ratio, rep.stderr, per, bound)],
                   {"resolved": rep.resolved, "lower_bound": bool(rep.ratio >= bound)},
                   {"ratio": rep.ratio, "stderr": rep.stderr, "perimeter": per, "perimeter_method": method,
                    "tol": rep.tol})


def _circle_reference(dom):
    """``2 pi rho sqrt(1 - r)`` for the level sets of a disk, else None."""
    if dom.dim != 2 or dom.level.name != "ball":
        return None
    rho = float(dom.params[0])
    return lambda r: 2 * math.pi * rho * math.sqrt(1 - r)


def run_perimeter(cfg, g, P):
    """Perimeter by several methods, optionally over levels ``phi = r``.

    Params: ``methods`` (comma list), ``levels`` (list of r), ``agree_tol``
    (0.01), ``ref_tol`` (0.005), ``shell_eps``, ``shell_n``, ``nodes``.
    """
    dom = domain_from_name(cfg.domain, g.dim)
    default = "boundary-quadrature, shell-coarea" if dom.chart is not None else "shell-coarea"
    methods = P.words("methods", default)
    levels = P.floats("levels", ()) if P.get("levels") is not None else ()
    extra = {}
    if P.get("shell_eps") is not None:
        extra["shell-coarea"] = {"eps": P.float("shell_eps", 0.01)}
    if P.get("shell_n") is not None:
        extra.setdefault("shell-coarea", {})["n"] = P.int("shell_n", 1 << 20)
    if P.get("nodes") is not None:
        extra["boundary-quadrature"] = {"nodes": P.int("nodes", 256)}
    ref = _circle_reference(dom)
    rows, checks, values = [], {}, {}
    at_zero = {}
    for m in methods:
        kw = extra.get(m, {})
        if levels:
            scan = perimeter_continuity_scan(g, dom, levels, m, cfg.seed, **kw)
            for r, v, s in zip(scan.levels, scan.values, scan.stderrs):
                rows.append((m, r, v, s, ref(r) if ref else float("nan")))
            # a deterministic rule has no stderr to converge into; it only has to approach monotonically
            stochastic = m != "boundary-quadrature"
            checks[f"continuity[{m}]"] = bool(scan.monotone and (scan.converges or not stochastic))
            at_zero[m] = scan.reference()[0]
            if scan.empty:
                values[f"empty_levels[{m}]"] = [float(r) for r in scan.empty]
        else:
            est = horizontal_perimeter(g, dom, m, seed=cfg.seed, **kw)
            rows.append((m, 0.0, est.value, est.stderr, ref(0.0) if ref else float("nan")))
            at_zero[m] = est.value
        values[f"perimeter[{m}]"] = at_zero[m]
    if len(at_zero) >= 2:
        v = np.array(list(at_zero.values()))
        spread = float((v.max() - v.min()) / v.min())
        values["rel_spread"] = spread
        checks["methods_agree"] = spread <= P.float("agree_tol", 0.01)
    if ref:
        tol = P.float("ref_tol", 0.005)
        dev = max(abs(row[2] - row[4]) / row[4] for row in rows)
        values["max_rel_dev_from_circle"] = dev
        checks["matches_circle"] = bool(dev <= tol)
    return Outcome(["method", "r", "value", "stderr", "reference"], rows, checks, values)


def run_subordinator(cfg, g, P):
    """Laplace transform of ``S_t``; params ``alphas`` (default: ``alpha``), ``lambdas``, ``ts``,
    ``kappa`` (also estimate the supremum constant), ``kappa_samples``, ``kappa_steps``, ``kappa_tol`` (0.01)."""
    alphas = P.floats("alphas", cfg.alpha)
    rows, checks, values = [], {}, {}
    for a in alphas:
        got = check_laplace(a, P.floats("lambdas", (0.5, 1.0, 2.0, 4.0)), P.floats("ts", (0.5, 1.0)),
                            cfg.samples, cfg.seed, cfg.workers)
        rows += [(a, lam, t, emp, exact, se) for lam, t, emp, se, exact, _ in got]
        checks[f"laplace[{a:g}]"] = all(r[-1] for r in got)
        if P.get("kappa") and 1.0 < a <= 2.0:
            k = estimate_sup_constant(a, P.int("kappa_samples", 1_000_000), P.int("kappa_steps", 4096), cfg.seed,
                                      cfg.workers)
            exact = closed_form_kappa(a)
            values[f"kappa[{a:g}]"] = {"estimate": k.kappa, "stderr": k.stderr, "closed_form": exact}
            checks[f"kappa[{a:g}]"] = abs(k.kappa - exact) / exact <= P.float("kappa_tol", 0.01)
    return Outcome(["alpha", "lambda", "t", "empirical", "exact", "stderr"], rows, checks, values)


def run_exit_bounds(cfg, g, P):
    """Martingale inequality and exit-bound calibration; params ``check`` (martingale | calibration | both),
    ``radii``, ``betas``, ``c_max``, ``min_ratio``. ``t_values`` overrides the default time grids."""
    which = P.get("check", "both")
    if which not in ("martingale", "calibration", "both"):
        raise ConfigError(f"exit-bounds check must be martingale, calibration or both, got {which!r}")
    t_over = tuple(cfg.t_points()) if (cfg.t_values or cfg.t_grid) else None
    rows, checks, values = [], {}, {}
    if which in ("martingale", "both"):
        kw = {"R_grid": P.floats("radii", ())} if P.get("radii") is not None else {}
        if t_over:
            kw["t_grid"] = t_over
        rep = check_martingale_bound(g, samples=cfg.samples, steps=cfg.steps, seed=cfg.seed, workers=cfg.workers, **kw)
        rows += [("martingale",) + r for r in rep.rows()]
        checks["martingale"] = rep.passed
        values["martingale_violations"] = rep.violations
    if which in ("calibration", "both"):
        kw = {"R_grid": P.floats("radii", ())} if P.get("radii") is not None else {}
        if t_over:
            kw["t_grid"] = t_over
        cal = fit_exit_bound_constants(g, None, betas=P.floats("betas", (0.5, 1.0, 2.0)), samples=cfg.samples,
                                       steps=cfg.steps, seed=cfg.seed, workers=cfg.workers,
                                       c_max=P.float("c_max", 1e3), min_ratio=P.float("min_ratio", 0.0), **kw)
        rows += [("calibration",) + r for r in cal.grid.rows()]
        checks["calibration"] = cal.passed
        values["fitted_c"] = {f"{b:g}": c for b, c in cal.fitted.items()}
        values["best"] = None if cal.best is None else {"c": cal.best[0], "beta": cal.best[1]}
        values["structure_ok"] = cal.form.structure_ok()
    return Outcome(["check", "R", "t", "empirical", "bound", "margin"], rows, checks, values)


def run_tail_checks(cfg, g, P):
    """Tail order and the two expectation limits; params ``alphas``, ``radius`` (1), ``kappa_exp`` (1),
    ``order_t`` and ``limit_t`` (time grids)."""
    alphas = P.floats("alphas", cfg.alpha)
    R = P.float("radius", 1.0)
    rows, checks, values = [], {}, {}
    for a in alphas:
        kw = {"t_grid": P.floats("order_t", ())} if P.get("order_t") is not None else {}
        tail = check_tail_order(g, a, R, samples=cfg.samples, steps=cfg.steps, seed=cfg.seed, workers=cfg.workers,
                                **kw)
        ok = tail.prob > 0
        ref = (tail.prob[ok][0] * tail.t / tail.t[ok][0]) if ok.any() else np.full_like(tail.t, np.nan)
        rows += [(f"tail[{a:g}]", R, t, p, b, b - p) for t, p, b in zip(tail.t, tail.prob, ref)]
        checks[f"tail_order[{a:g}]"] = tail.passed
        values[f"tail_slope[{a:g}]"] = tail.slope
        kw = {"t_grid": P.floats("limit_t", ())} if P.get("limit_t") is not None else {}
        lim = check_sup_expectation_limits(g, a, R, P.float("kappa_exp", 1.0), samples=cfg.samples,
                                           steps=cfg.steps, seed=cfg.seed, workers=cfg.workers,
                                           rate=_rate(cfg, P, a), **kw)
        rows += [(f"sup[{a:g}]", R, t, v, 1.0, 1.0 - v) for t, v in zip(lim.t, lim.ratio_sup)]
        rows += [(f"moment[{a:g}]", R, t, v, 0.0, -v) for t, v in zip(lim.t, lim.ratio_moment)]
        checks[f"sup_limit[{a:g}]"] = lim.sup_ok
        checks[f"moment_limit[{a:g}]"] = lim.moment_ok
        values[f"ratio_sup[{a:g}]"] = lim.ratio_sup.tolist()
        values[f"ratio_moment[{a:g}]"] = lim.ratio_moment.tolist()
    return Outcome(["check", "R", "t", "empirical", "bound", "margin"], rows, checks, values)


def run_taylor(cfg, g, P):
    """First-order remainder decay along dilations; params ``functions``, ``trials`` (8), ``min_slope`` (1.85)."""
    names = P.words("functions", "trig, poly:3, bump")
    trials = P.int("trials", 8)
    rng = stream(cfg.seed, "taylor")
    rows = []
    for name in names:
        phi = function_from_name(name, g.dim)
        for k in range(trials):
            x = dilate(g, 0.3, rng.uniform(-1, 1, g.dim))
            h0 = rng.standard_normal(g.dim)
            h0 = dilate(g, 1.0 / float(dinf_norm(g, h0)), h0)
            slope = taylor_decay_exponent(g, phi, x, h0)[0]
            rows.append((name, k, slope))
    worst = min(r[2] for r in rows)
    floor = P.float("min_slope", 1.85)
    return Outcome(["function", "trial", "slope"], rows, {"remainder_order": bool(worst >= floor)},
                   {"min_slope": worst, "threshold": floor})


def run_mollification(cfg, g, P):
    """``Q_{f_eps}(t) >= Q_f(t)`` with shared randomness; ``f`` is the indicator of ``domain``
    (default the unit interval) or ``function``. Params ``eps`` (0.05, 0.1), ``nodes`` (64)."""
    if cfg.function is not None:
        f = function_from_name(cfg.function, g.dim)
    else:
        f = domain_from_name(cfg.domain or "interval:0,1", g.dim)
    eps = P.floats("eps", (0.05, 0.1))
    rows, ok = [], True
    for t in cfg.t_points((1e-3,)):
        rep = verify_mollification_monotonicity(g, f, eps, cfg.alpha, t, cfg.samples, cfg.steps, cfg.seed,
                                                cfg.workers, P.int("nodes", 64))
        rows += [(t, e, v, rep.base, d, s) for e, v, d, s in zip(rep.eps, rep.values, rep.diffs, rep.diff_stderrs)]
        ok &= rep.passed
    return Outcome(["t", "eps", "Q_eps", "Q", "diff", "diff_stderr"], rows, {"monotone": bool(ok)},
                   {"min_z": min(r[4] / r[5] for r in rows if r[5] > 0) if any(r[5] > 0 for r in rows) else None})


RUNNERS = {
    "heat-content": run_heat_content,
    "smooth-function": run_smooth_function,
    "lower-bound": run_lower_bound,
    "perimeter": run_perimeter,
    "subordinator": run_subordinator,
    "exit-bounds": run_exit_bounds,
    "tail-checks": run_tail_checks,
    "taylor": run_taylor,
    "mollification": run_mollification,
}


# orchestration


def execute(cfg):
    """Run a validated config in memory; returns ``(Outcome, wall_clock_seconds)``."""
    cfg.validate()
    g = resolve_group(cfg.group)
    start = time.perf_counter()
    out = RUNNERS[cfg.kind](cfg, g, _Params(cfg.params))
    return out, time.perf_counter() - start


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else None
    return v


def _targets(cfg, json_summary=None):
    """Output directory and file names. ``out`` may name a directory or a ``.csv`` file."""
    out = Path(cfg.out)
    if out.suffix == ".csv":
        folder, csv_name = out.parent, out.name
    else:
        folder, csv_name = out, f"{cfg.kind}.csv"
    json_name = Path(csv_name).with_suffix(".json").name
    if json_summary:
        js = Path(json_summary)
        json_path = js if js.is_absolute() else folder / js
    else:
        json_path = folder / json_name
    return folder, folder / csv_name, json_path


def _write_atomic(path, text):
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def run(cfg, json_summary=None, quiet=False):
    """Execute, persist CSV and JSON summary, and return the exit status."""
    try:
        outcome, wall = execute(cfg)
    except (ConfigError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    folder, csv_path, json_path = _targets(cfg, json_summary)
    text = outcome.csv_text()
    summary = {
        "schema": SCHEMA,
        "version": __version__,
        "kind": cfg.kind,
        "passed": not outcome.failed,
        "checks": outcome.checks,
        "failed": outcome.failed,
        "values": outcome.values,
        "seed": cfg.seed,
        "workers": cfg.workers,
        "csv": os.path.relpath(csv_path, json_path.parent),
        "csv_sha256": hashlib.sha256(text.encode()).hexdigest(),
        "wall_clock_s": wall,
        "backend": _accel.backend(),
        "config": cfg.to_dict(),
    }
    folder.mkdir(parents=True, exist_ok=True)
    json_path.parent.mkdir(parents=True, exist_ok=True)
    _write_atomic(csv_path, text)
    _write_atomic(json_path, json.dumps(_jsonable(summary), indent=2, sort_keys=True) + "\n")
    if not quiet:
        for name, ok in outcome.checks.items():
            print(f"{'PASS' if ok else 'FAIL'}  {name}")
        print(f"wrote {csv_path} and {json_path} ({wall:.1f} s)")
    return 0 if not outcome.failed else 1


def first_divergence(expected, got):
    """``(row, column, expected, got)`` of the first differing cell, or None."""
    a = list(csv.reader(io.StringIO(expected)))
    b = list(csv.reader(io.StringIO(got)))
    header = a[0] if a else []
    for i in range(max(len(a), len(b))):
        ra = a[i] if i < len(a) else []
        rb = b[i] if i < len(b) else []
        for j in range(max(len(ra), len(rb))):
            ca = ra[j] if j < len(ra) else "<missing>"
            cb = rb[j] if j < len(rb) else "<missing>"
            if ca != cb:
                col = header[j] if j < len(header) else str(j)
                return i, col, ca, cb
    return None


def replay(summary_path, workers=None, quiet=False):
    """Re-run the config embedded in a summary and compare with its CSV; returns the exit status."""
    summary_path = Path(summary_path)
    try:
        summary = json.loads(summary_path.read_text())
        cfg = ExperimentConfig.from_dict(summary["config"])
        if workers is not None:
            cfg.workers = int(workers)
        stored = (summary_path.parent / summary["csv"]).read_text()
        outcome, _ = execute(cfg)
    except (OSError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    diff = first_divergence(stored, outcome.csv_text())
    if diff is None:
        if not quiet:
            print(f"replay identical ({cfg.kind}, seed {cfg.seed}, workers {cfg.workers})")
        return 0
    row, col, a, b = diff
    print(f"replay mismatch at row {row}, column {col}: stored {a}, replayed {b}")
    return 1


# argument parsing


def _parser():
    p = argparse.ArgumentParser(prog="carnot-heat", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    for kind in KINDS:
        summary = (RUNNERS[kind].__doc__ or "").split(";")[0].split("\n")[0]
        s = sub.add_parser(kind, help=summary.replace("``", "").rstrip("."))
        s.add_argument("--config", help="key = value config file")
        s.add_argument("--seed", type=int)
        s.add_argument("--workers", type=int)
        s.add_argument("--out", help="output directory, or a .csv path")
        s.add_argument("--json-summary", help="summary path (relative paths land in the output directory)")
        s.add_argument("--group")
        s.add_argument("--domain")
        s.add_argument("--function")
        s.add_argument("--alpha", type=float)
        s.add_argument("--t-grid", help="start,stop,count of a decreasing geometric grid")
        s.add_argument("--t-values", help="comma-separated decreasing times")
        s.add_argument("--samples", type=int)
        s.add_argument("--grid", "--steps", dest="steps", type=int, help="time steps per path")
        s.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="extra parameter")
        s.add_argument("--quiet", action="store_true")
    r = sub.add_parser("replay", help="re-run a summary and compare CSV output")
    r.add_argument("summary")
    r.add_argument("--workers", type=int)
    r.add_argument("--quiet", action="store_true")
    return p


def config_from_args(args):
    over = {
        "kind": args.command,
        "seed": args.seed,
        "workers": args.workers,
        "out": args.out,
        "group": args.group,
        "domain": args.domain,
        "function": args.function,
        "alpha": args.alpha,
        "samples": args.samples,
        "steps": args.steps,
        "t_grid": parse_value(args.t_grid) if args.t_grid else None,
        "t_values": parse_value(args.t_values) if args.t_values else None,
    }
    for item in args.set:
        key, sep, raw = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        over[key.strip().replace("-", "_")] = parse_value(raw)
    if args.config:
        return load_config(args.config, **over)
    return ExperimentConfig.from_dict({k: v for k, v in over.items() if v is not None}).validate()


def main(argv=None):
    args = _parser().parse_args(argv)
    if args.command == "replay":
        return replay(args.summary, args.workers, args.quiet)
    try:
        cfg = config_from_args(args)
    except (ConfigError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return run(cfg, args.json_summary, args.quiet)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
