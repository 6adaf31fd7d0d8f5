"""Time the hot kernels under both backends.

Each backend runs in a fresh interpreter because the switch is read at
import time. Usage::

    python3 benchmarks/bench_kernels.py [--paths 4096] [--steps 256]
"""
import argparse
import json
import os
import subprocess
import sys

CHILD = r"""
import json, sys, time
import numpy as np
from carnot_heat import backend, domain_from_name, euclidean, heisenberg, kernels
from carnot_heat.rng import stream

n, steps = int(sys.argv[1]), int(sys.argv[2])
cases = [
    ("survival euclidean:1 alpha=2", euclidean(1), "interval:0,1", 2.0),
    ("survival heisenberg:1 alpha=2", heisenberg(1), "h1-torus:2,0.5", 2.0),
    ("survival heisenberg:1 alpha=1.5", heisenberg(1), "h1-torus:2,0.5", 1.5),
]
out = {"backend": backend(), "cases": []}
for name, g, dname, alpha in cases:
    dom = domain_from_name(dname, g.dim)
    starts = dom.boundary_points(n, 0) * 0.999
    gcap = dom.gradient_cap(g) if alpha == 2.0 else np.inf

    def once():
        return kernels.survival(g, dom.level, starts, alpha, 1e-3, steps, stream(0, "bench"), 0,
                                alpha == 2.0, gcap, early_exit=False)

    once()  # compile
    t0 = time.perf_counter()
    w = once()
    dt = time.perf_counter() - t0
    out["cases"].append({"case": name, "seconds": dt, "ns_per_step": 1e9 * dt / (n * steps),
                         "mean": float(np.mean(w))})
g = heisenberg(1)
x0 = np.zeros(3)
ds = np.full((n, steps), 1.0 / steps)
kernels.simulate_paths(g, x0, ds[:2], stream(0, "warm"))
t0 = time.perf_counter()
kernels.simulate_paths(g, x0, ds, stream(0, "bench"))
dt = time.perf_counter() - t0
out["cases"].append({"case": "paths heisenberg:1", "seconds": dt, "ns_per_step": 1e9 * dt / (n * steps)})
print(json.dumps(out))
"""


def run(backend, n, steps):
    env = dict(os.environ)
    env["CARNOT_HEAT_NO_NUMBA"] = "1" if backend == "numpy" else "0"
    res = subprocess.run([sys.executable, "-c", CHILD, str(n), str(steps)], env=env, capture_output=True,
                         text=True, check=True)
    return json.loads(res.stdout.strip().splitlines()[-1])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--paths", type=int, default=4096)
    ap.add_argument("--steps", type=int, default=256)
    args = ap.parse_args()
    results = {b: run(b, args.paths, args.steps) for b in ("numba", "numpy")}
    print(f"{args.paths} paths x {args.steps} steps")
    print(f"{'case':36s} {'numba ns/step':>14s} {'numpy ns/step':>14s} {'speedup':>8s}")
    for a, b in zip(results["numba"]["cases"], results["numpy"]["cases"]):
        print(f"{a['case']:36s} {a['ns_per_step']:14.1f} {b['ns_per_step']:14.1f} "
              f"{b['ns_per_step'] / a['ns_per_step']:8.1f}")


if __name__ == "__main__":
    main()
