"""CSV / JSON persistence for trajectories, sweeps and reports."""

import csv
import json
import math

import numpy as np

from .errors import DomainError
from .moments import MomentTrajectory, Provenance

__all__ = [
    "trajectory_to_csv",
    "trajectory_from_csv",
    "write_rows",
    "write_json",
]


def trajectory_to_csv(traj: MomentTrajectory, path):
    """Long-format rows (t, order, value, stderr); values exponentiate logs."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "order", "value", "stderr"])
        for i, t in enumerate(traj.times):
            for j, p in enumerate(traj.orders):
                val = math.exp(traj.log_values[i, j])
                err = (
                    val * traj.rel_stderr[i, j]
                    if traj.rel_stderr is not None
                    else 0.0
                )
                w.writerow([f"{t:.12g}", f"{p:.12g}", f"{val:.17g}", f"{err:.6g}"])


def trajectory_from_csv(path, provenance=Provenance.SIMULATED, meta=None) -> MomentTrajectory:
    times, orders, rows = [], [], {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "t" not in reader.fieldnames:
            raise DomainError(f"{path} is not a trajectory CSV (no 't' column)")
        for rec in reader:
            t = float(rec["t"])
            p = float(rec["order"])
            rows[(t, p)] = (float(rec["value"]), float(rec.get("stderr", 0) or 0))
            times.append(t)
            orders.append(p)
    if not rows:
        raise DomainError(f"{path} contains no trajectory rows")
    times = sorted(set(times))
    orders = sorted(set(orders))
    log_values = np.full((len(times), len(orders)), -np.inf)
    rel = np.zeros_like(log_values)
    for i, t in enumerate(times):
        for j, p in enumerate(orders):
            if (t, p) not in rows:
                raise DomainError(f"trajectory CSV is not a full (t, order) grid: missing {(t, p)}")
            val, err = rows[(t, p)]
            log_values[i, j] = math.log(val) if val > 0 else -np.inf
            rel[i, j] = err / val if val > 0 else 0.0
    return MomentTrajectory(
        times=np.asarray(times),
        orders=np.asarray(orders),
        log_values=log_values,
        provenance=provenance,
        rel_stderr=rel,
        meta=meta or {},
    )


def write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow(row)


def write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=_coerce)
        fh.write("\n")


def _coerce(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON-serializable: {type(obj)}")
