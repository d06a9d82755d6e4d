#!/usr/bin/env python3
"""Compare the numba-compiled hot kernels against the pure-numpy fallback.

The fallback path is selected with MLMOM_NO_NUMBA=1; this script runs both
paths in subprocesses (the flag is read at import time), times the two hot
kernels (DSMC collision stepping, direct angular-average quadrature) and
checks that the trajectories agree.

Usage: python benchmarks/bench_backends.py [--n 50000] [--sweeps 200]
"""

import argparse
import json
import os
import subprocess
import sys

_WORKER = r"""
import json, math, sys, time
import numpy as np
import mlmom
from mlmom.kernels import GradBounded, PowerLawSingular, CollisionKernel
from mlmom.dsmc import CompactSupport, run
from mlmom.povzner import g_weight_direct, sample_configurations

n, sweeps = json.loads(sys.argv[1])

kern = CollisionKernel(gamma=1.0, angular=GradBounded(b0=10.0 / (4 * math.pi), d=3))
t0 = time.perf_counter()
traj, man = run(CompactSupport(1.0), kern, 0.5, [0.5], [0, 2, 4, 6], n, seed=2024,
                bootstrap=0, min_particles=100)
t_dsmc = time.perf_counter() - t0

ks = CollisionKernel(gamma=0.5, angular=PowerLawSingular(nu=1.0, d=3))
v, w = sample_configurations(sweeps, 3, seed=7)
t0 = time.perf_counter()
acc = 0.0
for i in range(sweeps):
    acc += g_weight_direct(ks, v[i], w[i], 9.4, tol=np.inf)
t_quad = time.perf_counter() - t0

print(json.dumps({
    "backend": mlmom.backend_name(),
    "dsmc_seconds": t_dsmc,
    "dsmc_collisions": man["n_collisions"],
    "quad_seconds": t_quad,
    "quad_checksum": acc,
    "trajectory_m4": float(traj.values[-1][2]),
}))
"""


def run_backend(no_numba: bool, n: int, sweeps: int) -> dict:
    env = dict(os.environ)
    if no_numba:
        env["MLMOM_NO_NUMBA"] = "1"
    else:
        env.pop("MLMOM_NO_NUMBA", None)
    out = subprocess.run(
        [sys.executable, "-c", _WORKER, json.dumps([n, sweeps])],
        capture_output=True,
        text=True,
        env=env,
        check=True,
    )
    return json.loads(out.stdout.strip().splitlines()[-1])


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=50000, help="DSMC particle count")
    ap.add_argument("--sweeps", type=int, default=200, help="quadrature evaluations")
    args = ap.parse_args()

    print("warm-up + numba path...")
    fast = run_backend(False, args.n, args.sweeps)
    print("numpy fallback path...")
    slow = run_backend(True, args.n, args.sweeps)

    print(f"\n{'kernel':<28}{'numba':>12}{'numpy':>12}{'speedup':>10}")
    for key, label in [("dsmc_seconds", "DSMC step loop"), ("quad_seconds", "direct G quadrature")]:
        print(f"{label:<28}{fast[key]:>11.3f}s{slow[key]:>11.3f}s{slow[key] / fast[key]:>9.1f}x")
    dm = abs(fast["trajectory_m4"] - slow["trajectory_m4"]) / slow["trajectory_m4"]
    dq = abs(fast["quad_checksum"] - slow["quad_checksum"]) / abs(slow["quad_checksum"])
    print(f"\nagreement: trajectory m4 rel diff {dm:.2e}, quadrature checksum rel diff {dq:.2e}")
    assert fast["dsmc_collisions"] == slow["dsmc_collisions"], "collision counts diverged"


if __name__ == "__main__":
    main()
