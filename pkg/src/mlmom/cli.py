"""Command-line surface tying the modules into reproducible experiments.

Subcommands: ml-eval, eps-profile, povzner-sweep, beta-sums,
moment-envelope, dsmc-run, tail-report, bootstrap-scan. Every subcommand
accepts --seed, --workers, --out and --config; a config file is a flat INI
document with one section per subcommand whose keys mirror the long flags
(command-line flags override file values).

Exit codes: 0 success, 2 usage, 3 numeric failure, 4 budget abort.
"""

import argparse
import configparser
import math
import sys

import numpy as np

from . import __version__
from .errors import BudgetExceededError, MlmomError, NumericError
from .io import trajectory_from_csv, trajectory_to_csv, write_json, write_rows
from .kernels import (
    CollisionKernel,
    angular_kernel_from_name,
    epsilon_decay_profile,
)
from .moment_bounds import BoundConstants, b_rp_constant, bernoulli_envelope
from .moments import Provenance
from .partial_sums import (
    SumMode,
    bootstrap_scan,
    estimate_tail_order,
    estimate_tail_order_empirical,
    partial_sum_E,
    partial_sum_I,
    lower_bound_check,
)
from .combinatoric_bounds import beta_sum_A4, beta_sum_A5
from .povzner import povzner_sweep
from .specfun import MLSpec, mittag_leffler
from . import dsmc as dsmc_mod


def _floats(text):
    """Parse '1,2,3', 'lin:a:b:n' or 'geom:a:b:n' into a float list."""
    text = text.strip()
    if text.startswith("lin:") or text.startswith("geom:"):
        kind, a, b, n = text.split(":")
        a, b, n = float(a), float(b), int(n)
        grid = np.linspace(a, b, n) if kind == "lin" else np.geomspace(a, b, n)
        return [float(x) for x in grid]
    return [float(x) for x in text.split(",") if x.strip()]


def _angular_from_args(args):
    params = {}
    for key in ("b0", "nu", "theta_min", "c"):
        val = getattr(args, key, None)
        if val is not None:
            params[key] = val
    return angular_kernel_from_name(args.family, d=args.d, **params)


def _kernel_from_args(args) -> CollisionKernel:
    return CollisionKernel(gamma=args.gamma, angular=_angular_from_args(args))


def _add_common(p):
    p.add_argument("--seed", type=int, default=0, help="base RNG seed")
    p.add_argument("--workers", type=int, default=1, help="worker count (deterministic)")
    p.add_argument("--out", type=str, default=None, help="output path")
    p.add_argument("--config", type=str, default=None, help="INI config file")


def _add_kernel_flags(p, gamma_default=1.0):
    p.add_argument("--family", type=str, default="bounded",
                   help="angular family: bounded | power_law | truncated")
    p.add_argument("--b0", type=float, default=None, help="bounded-kernel constant")
    p.add_argument("--nu", type=float, default=None, help="singularity exponent")
    p.add_argument("--theta-min", dest="theta_min", type=float, default=None,
                   help="truncation angle")
    p.add_argument("--c", type=float, default=None, help="singular profile strength")
    p.add_argument("--d", type=int, default=3, help="dimension")
    p.add_argument("--gamma", type=float, default=gamma_default,
                   help="potential exponent in (0, 1]")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="mlmom",
        description="Mittag-Leffler moment toolkit for the non-cutoff Boltzmann equation",
    )
    parser.add_argument("--version", action="version", version=f"mlmom {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ml-eval", help="evaluate the Mittag-Leffler function on grids")
    p.add_argument("--a-grid", type=str, default="1", help="grid of series parameters")
    p.add_argument("--x-grid", type=str, default="1", help="grid of arguments")
    _add_common(p)

    p = sub.add_parser("eps-profile", help="eps_q decay profile for a kernel")
    _add_kernel_flags(p)
    p.add_argument("--beta", type=float, required=True, help="normalization exponent")
    p.add_argument("--q-grid", type=str, default="geom:4:1024:9")
    _add_common(p)

    p = sub.add_parser("povzner-sweep", help="domination sweep: direct G vs bound")
    _add_kernel_flags(p)
    p.add_argument("--rq", type=str, default="4,6,9.4", help="weight exponents")
    p.add_argument("--n", type=int, default=1000, help="number of random pairs")
    p.add_argument("--tol", type=float, default=1e-6, help="relative quadrature tolerance")
    p.add_argument("--variant", type=str, default="derived", choices=("derived", "printed"))
    _add_common(p)

    p = sub.add_parser("beta-sums", help="combinatoric Beta-sum sweeps")
    p.add_argument("--lemma", type=str, required=True, choices=("a4", "a5"))
    p.add_argument("--params", type=str, default=None,
                   help="a-grid (a4) or s-grid (a5); defaults 1.1,1.5,2,3 / 0.5,1")
    p.add_argument("--q-min", type=int, default=3)
    p.add_argument("--q-max", type=int, default=300)
    _add_common(p)

    p = sub.add_parser("moment-envelope", help="Bernoulli envelope curves (and margins)")
    _add_kernel_flags(p)
    p.add_argument("--m0", type=float, default=1.0, help="initial mass")
    p.add_argument("--m2-0", dest="m2_0", type=float, default=None,
                   help="initial energy norm (default: from trajectory)")
    p.add_argument("--orders", type=str, default="2,4,6,8", help="moment orders rp")
    p.add_argument("--t-grid", type=str, default="lin:0.05:5:60")
    p.add_argument("--constants", type=str, default="derived", choices=("derived", "printed"))
    p.add_argument("--trajectory", type=str, default=None,
                   help="trajectory CSV to compare against")
    _add_common(p)

    p = sub.add_parser("dsmc-run", help="particle simulation producing a trajectory")
    _add_kernel_flags(p)
    p.add_argument("--ic", type=str, default="compact_support",
                   help="maxwellian | bimaxwellian | compact_support | heavy_tail")
    p.add_argument("--temperature", type=float, default=1.0)
    p.add_argument("--radius", type=float, default=1.0)
    p.add_argument("--t1", type=float, default=1.0)
    p.add_argument("--t2", type=float, default=1.0)
    p.add_argument("--dv", type=float, default=2.0)
    p.add_argument("--s0", type=float, default=1.0)
    p.add_argument("--alpha0", type=float, default=0.5)
    p.add_argument("--n", type=int, default=100000, help="particle count")
    p.add_argument("--t-final", dest="t_final", type=float, default=1.0)
    p.add_argument("--snapshots", type=str, default="lin:0.1:1:10")
    p.add_argument("--orders", type=str, default=None,
                   help="moment orders (default: 2q and 2q+gamma ladders to 30)")
    p.add_argument("--bootstrap", type=int, default=16, help="bootstrap resamples")
    p.add_argument("--dump-speeds", action="store_true",
                   help="also persist the terminal <v> sample")
    p.add_argument("--from-manifest", type=str, default=None,
                   help="rerun the experiment recorded in a manifest JSON")
    _add_common(p)

    p = sub.add_parser("tail-report", help="generation/propagation verdicts for a trajectory")
    p.add_argument("--trajectory", type=str, required=True)
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--s", type=float, default=1.0, help="tail order probed for propagation")
    p.add_argument("--alpha-grid", type=str, default="geom:0.01:1:12")
    p.add_argument("--alpha0", type=float, default=None,
                   help="initial-data rate for the M0 threshold")
    p.add_argument("--n-max", type=int, default=200)
    p.add_argument("--t", type=float, default=None, help="fit time (default: last)")
    p.add_argument("--q-lo", type=int, default=10)
    p.add_argument("--q-hi", type=int, default=40)
    p.add_argument("--speeds", type=str, default=None,
                   help="terminal <v> sample CSV for the empirical tail fit")
    _add_common(p)

    p = sub.add_parser("bootstrap-scan", help="partial-sum survival scan")
    p.add_argument("--trajectory", type=str, required=True)
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--s", type=float, default=1.0)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--alpha0", type=float, default=None)
    p.add_argument("--m-cap", dest="m_cap", type=float, default=None)
    p.add_argument("--n-max", type=int, default=200)
    p.add_argument("--mode", type=str, default="propagation",
                   choices=("propagation", "generation"))
    _add_common(p)

    return parser


def _apply_config(argv, parser):
    """Inject config-file values as tokens right after the subcommand."""
    if not argv or argv[0].startswith("-"):
        return argv
    command = argv[0]
    if "--config" not in argv:
        return argv
    cfg_path = argv[argv.index("--config") + 1]
    cp = configparser.ConfigParser()
    read = cp.read(cfg_path)
    if not read:
        parser.error(f"config file not found: {cfg_path}")
    if command not in cp:
        return argv
    tokens = []
    for key, val in cp[command].items():
        flag = "--" + key.replace("_", "-")
        if val.strip().lower() in ("true", "false"):
            if val.strip().lower() == "true":
                tokens.append(flag)
        else:
            tokens.extend([flag, val])
    return [command] + tokens + argv[1:]


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_ml_eval(args):
    rows = []
    for a in _floats(args.a_grid):
        for x in _floats(args.x_grid):
            rows.append((f"{a:.12g}", f"{x:.12g}", f"{mittag_leffler(a, x):.12g}"))
    if args.out:
        write_rows(args.out, ["a", "x", "value"], rows)
    else:
        print("a,x,value")
        for row in rows:
            print(",".join(row))
    return 0


def cmd_eps_profile(args):
    kernel = _angular_from_args(args)
    prof = epsilon_decay_profile(kernel, args.beta, _floats(args.q_grid), workers=args.workers)
    rows = [
        (f"{q:.12g}", f"{args.beta:.12g}", f"{e:.12g}", f"{nz:.12g}")
        for q, e, nz in zip(prof.q_grid, prof.values, prof.normalized)
    ]
    out = args.out or "eps_profile.csv"
    write_rows(out, ["q", "beta", "eps", "normalized"], rows)
    rep = prof.report()
    print(
        f"eps profile written to {out}: eventually_decreasing={rep['eventually_decreasing']} "
        f"final/initial={rep['final_over_initial']:.4g}"
    )
    return 0


def cmd_povzner_sweep(args):
    kernel = _kernel_from_args(args)
    rows, summary = povzner_sweep(
        kernel,
        _floats(args.rq),
        args.n,
        seed=args.seed,
        tol=args.tol,
        variant=args.variant,
        workers=args.workers,
    )
    out = args.out or "povzner_sweep.csv"
    d = kernel.d
    header = (
        [f"v{i}" for i in range(d)]
        + [f"w{i}" for i in range(d)]
        + ["rq", "direct", "bound", "margin"]
    )
    csv_rows = [
        [f"{x:.12g}" for x in r["v"]]
        + [f"{x:.12g}" for x in r["v_star"]]
        + [f"{r['rq']:.12g}", f"{r['direct']:.12g}", f"{r['bound']:.12g}", f"{r['margin']:.12g}"]
        for r in rows
    ]
    write_rows(out, header, csv_rows)
    write_json(out + ".summary.json", summary)
    print(
        f"{summary['rows']} rows -> {out}; violations beyond tolerance: "
        f"{summary['violations']} (min margin {summary['min_margin']:.4g})"
    )
    return 0 if summary["violations"] == 0 else 3


def cmd_beta_sums(args):
    rows = []
    if args.lemma == "a4":
        params = _floats(args.params) if args.params else [1.1, 1.5, 2.0, 3.0]
        for a in params:
            for q in range(args.q_min, args.q_max + 1):
                rec = beta_sum_A4(q, a)
                rows.append(("a4", q, f"{a:.12g}", f"{rec.total:.12g}", f"{rec.bound_ratio:.12g}"))
    else:
        params = _floats(args.params) if args.params else [0.5, 1.0]
        for s in params:
            for q in range(args.q_min, args.q_max + 1):
                rec = beta_sum_A5(q, s)
                rows.append(("a5", q, f"{s:.12g}", f"{rec.total:.12g}", f"{rec.bound_ratio:.12g}"))
    out = args.out or f"beta_sums_{args.lemma}.csv"
    write_rows(out, ["lemma", "q", "param", "sum", "normalized_ratio"], rows)
    print(f"{len(rows)} rows -> {out}")
    return 0


def cmd_moment_envelope(args):
    traj = None
    if args.trajectory:
        traj = trajectory_from_csv(args.trajectory)
    m2_0 = args.m2_0
    if m2_0 is None:
        if traj is None:
            raise NumericError("need --m2-0 or --trajectory for the energy norm")
        m2_0 = traj.moment(traj.times[0], 2.0)
    kernel = _kernel_from_args(args)
    bc = BoundConstants.from_kernel(kernel, m0=args.m0, m2_0=m2_0, variant=args.constants)
    rows = []
    for rp in _floats(args.orders):
        b_rp = b_rp_constant(bc, rp)
        for t in _floats(args.t_grid):
            env = bernoulli_envelope(bc, b_rp, rp, args.gamma, None, t)
            val = margin = ""
            if traj is not None:
                try:
                    val_f = traj.moment(t, rp)
                    val, margin = f"{val_f:.12g}", f"{env - val_f:.12g}"
                except MlmomError:
                    pass
            rows.append((f"{t:.12g}", f"{rp:.12g}", val, f"{env:.12g}", margin))
    out = args.out or "moment_envelope.csv"
    write_rows(out, ["t", "order", "value", "envelope", "margin"], rows)
    print(f"{len(rows)} rows -> {out}")
    return 0


def _ic_from_args(args):
    name = args.ic.strip().lower().replace("-", "_")
    if name == "maxwellian":
        return dsmc_mod.Maxwellian(temperature=args.temperature)
    if name in ("bimaxwellian", "shifted_bimaxwellian"):
        return dsmc_mod.ShiftedBiMaxwellian(t1=args.t1, t2=args.t2, dv=args.dv)
    if name == "compact_support":
        return dsmc_mod.CompactSupport(radius=args.radius)
    if name == "heavy_tail":
        return dsmc_mod.HeavyTail(s0=args.s0, alpha0=args.alpha0)
    raise NumericError(f"unknown initial condition {args.ic!r}")


def cmd_dsmc_run(args):
    if args.from_manifest:
        import json

        with open(args.from_manifest) as fh:
            man = json.load(fh)
        kern_info = man["kernel"]
        ang = dict(kern_info["angular"])
        family = {
            "GradBounded": "bounded",
            "PowerLawSingular": "power_law",
            "TruncatedSingular": "truncated",
        }[ang.pop("family")]
        d = ang.pop("d")
        kernel = CollisionKernel(
            gamma=kern_info["gamma"], angular=angular_kernel_from_name(family, d=d, **ang)
        )
        ic_info = dict(man["initial_condition"])
        ic = dsmc_mod.initial_condition_from_name(ic_info.pop("family"), **ic_info)
        snapshots = man["snapshots"]
        orders = man["orders"]
        n, seed = man["n_particles"], man["seed"]
        t_final, bootstrap = man["t_final"], man["bootstrap"]
    else:
        kernel = _kernel_from_args(args)
        ic = _ic_from_args(args)
        snapshots = _floats(args.snapshots)
        if args.orders:
            orders = _floats(args.orders)
        else:
            orders = sorted(
                set(
                    [2.0 * q for q in range(0, 16)]
                    + [2.0 * q + args.gamma for q in range(0, 16)]
                )
            )
        n, seed, t_final, bootstrap = args.n, args.seed, args.t_final, args.bootstrap
    traj, manifest = dsmc_mod.run(
        ic, kernel, t_final, snapshots, orders, n, seed, bootstrap=bootstrap
    )
    manifest["code_version"] = __version__
    out = args.out or "trajectory.csv"
    trajectory_to_csv(traj, out)
    write_json(out + ".manifest.json", manifest)
    if getattr(args, "dump_speeds", False):
        # terminal-state sample: re-create deterministically to dump
        ens = dsmc_mod.make_ensemble(ic, kernel, n, seed)
        while ens.t < t_final - 1e-12:
            rate = ens.majorant_rate()
            dt = t_final - ens.t
            if rate > 0:
                dt = min(dt, 0.1 / rate)
            dsmc_mod.step(ens, dt)
        brackets = np.sqrt(1.0 + (ens.velocities**2).sum(axis=1))
        write_rows(out + ".speeds.csv", ["bracket"], [(f"{b:.12g}",) for b in brackets])
    print(
        f"trajectory -> {out} ({manifest['n_steps']} steps, "
        f"{manifest['n_collisions']} collisions); manifest -> {out}.manifest.json"
    )
    return 0


def cmd_tail_report(args, parser=None):
    try:
        traj = trajectory_from_csv(args.trajectory, meta={"gamma": args.gamma})
    except MlmomError as exc:
        if parser is not None:
            parser.error(str(exc))  # empty/invalid trajectory is a usage error
        raise
    t_fit = args.t if args.t is not None else float(traj.times[-1])
    # probes cannot exceed the stored order grid
    q_cap = int(math.floor(float(traj.orders[-1]) / 2.0))
    n_max = min(args.n_max, q_cap)
    report = {
        "trajectory": args.trajectory,
        "gamma": args.gamma,
        "horizon": float(traj.times[-1]),
        "n_max_effective": n_max,
    }
    # propagation: largest alpha on the grid surviving the 4*M0 scan
    survivors = []
    scans = []
    for alpha in _floats(args.alpha_grid):
        spec = MLSpec.from_order(args.s, alpha)
        scan = bootstrap_scan(
            traj,
            spec,
            n_max=n_max,
            alpha0=args.alpha0 if args.alpha0 is not None else alpha,
            gamma=args.gamma,
        )
        scans.append({"alpha": alpha, "all_survive": scan["all_survive"], "t_n": scan["t_n"][-1]})
        if scan["all_survive"]:
            survivors.append(alpha)
    report["propagation"] = {
        "s": args.s,
        "alpha_grid": _floats(args.alpha_grid),
        "survivors": survivors,
        "verdict": "PASS" if survivors else "FAIL",
        "alpha_star": max(survivors) if survivors else None,
        "scans": scans,
    }
    # generation: fitted tail order at the fit time
    gen = {"t": t_fit}
    try:
        q_hi = min(args.q_hi, q_cap)
        fit = estimate_tail_order(traj, t_fit, range(args.q_lo, q_hi + 1))
        gen["moment_fit"] = {
            "s_hat": fit.s_hat,
            "alpha_hat": fit.alpha_hat,
            "s_stderr": fit.s_stderr,
        }
    except MlmomError as exc:
        gen["moment_fit"] = {"error": str(exc)}
    if args.speeds:
        brackets = np.loadtxt(args.speeds, skiprows=1)
        try:
            efit = estimate_tail_order_empirical(brackets)
            gen["empirical_fit"] = {"s_hat": efit.s_hat, "alpha_hat": efit.alpha_hat}
        except MlmomError as exc:
            gen["empirical_fit"] = {"error": str(exc)}
    report["generation"] = gen
    out = args.out or "tail_report.json"
    write_json(out, report)
    print(f"report -> {out}: propagation {report['propagation']['verdict']}")
    return 0


def cmd_bootstrap_scan(args):
    traj = trajectory_from_csv(args.trajectory, meta={"gamma": args.gamma})
    spec = MLSpec.from_order(args.s, args.alpha)
    scan = bootstrap_scan(
        traj,
        spec,
        m_cap=args.m_cap,
        n_max=args.n_max,
        alpha0=args.alpha0,
        gamma=args.gamma,
        mode=SumMode(args.mode),
    )
    out = args.out or "bootstrap_scan.json"
    write_json(out, scan)
    print(f"scan -> {out}: all_survive={scan['all_survive']}")
    return 0


_DISPATCH = {
    "ml-eval": cmd_ml_eval,
    "eps-profile": cmd_eps_profile,
    "povzner-sweep": cmd_povzner_sweep,
    "beta-sums": cmd_beta_sums,
    "moment-envelope": cmd_moment_envelope,
    "dsmc-run": cmd_dsmc_run,
    "bootstrap-scan": cmd_bootstrap_scan,
}


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    argv = _apply_config(argv, parser)
    args = parser.parse_args(argv)
    try:
        if args.command == "tail-report":
            return cmd_tail_report(args, parser)
        return _DISPATCH[args.command](args)
    except BudgetExceededError as exc:
        print(f"budget abort: {exc}", file=sys.stderr)
        return 4
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    except MlmomError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
