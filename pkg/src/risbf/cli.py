"""Command-line front end: one-shot solves, parameter sweeps with CSV/SVG
outputs, and the line-of-sight design-rule report.

Defaults come from the built-in desk-scale configuration, overridden first by
--config (flat key=value file, angles in degrees) and then by explicit flags.
"""

import argparse
import math
import sys

import numpy as np

from . import sweep as sweep_mod
from .baselines import (AnnealSchedule, continuous_phase_ascent,
                        random_phase_search, simulated_annealing)
from .channel import synthesize_channel
from .config import (build_geometry, default_config, load_config, replace,
                     half_circle_user_placement)
from .driver import maximize_sum_rate
from .los import build_los_report


def _add_config_flags(parser):
    parser.add_argument("--config", help="flat key=value config file")
    parser.add_argument("--n-t", type=int, dest="n_t")
    parser.add_argument("--k-users", type=int, dest="k_users")
    parser.add_argument("--n-r", type=int, dest="n_r")
    parser.add_argument("--b-bits", type=int, dest="b_bits")
    parser.add_argument("--p-total", type=float, dest="p_total")
    parser.add_argument("--snr-db", type=float, dest="snr_db",
                        help="sets noise_power = p_total / 10^(snr/10)")
    parser.add_argument("--wavelength", type=float, dest="wavelength")
    parser.add_argument("--d-b", type=float, dest="d_b")
    parser.add_argument("--d-r1", type=float, dest="d_r1")
    parser.add_argument("--d-r2", type=float, dest="d_r2")
    parser.add_argument("--theta-b-deg", type=float, dest="theta_b_deg")
    parser.add_argument("--theta-r-deg", type=float, dest="theta_r_deg")
    parser.add_argument("--d-00", type=float, dest="d_00")
    parser.add_argument("--alpha", type=float, dest="alpha")
    parser.add_argument("--kappa", type=float, dest="kappa")
    parser.add_argument("--pure-los", action="store_true",
                        help="disable the scattered channel component")
    parser.add_argument("--seed", type=int, dest="seed")
    parser.add_argument("--user-radius", type=float, default=60.0)


def _build_config(args):
    if args.config:
        cfg = load_config(args.config)
    else:
        cfg = default_config()
    updates = {}
    for name in ("n_t", "k_users", "n_r", "b_bits", "p_total", "wavelength",
                 "d_b", "d_r1", "d_r2", "d_00", "alpha", "kappa", "seed"):
        value = getattr(args, name, None)
        if value is not None:
            updates[name] = value
    if args.theta_b_deg is not None:
        updates["theta_b"] = math.radians(args.theta_b_deg)
    if args.theta_r_deg is not None:
        updates["theta_r"] = math.radians(args.theta_r_deg)
    if args.pure_los:
        updates["rician_on"] = False
    if updates.get("k_users") and updates["k_users"] != cfg.k_users:
        seed = updates.get("seed", cfg.seed)
        updates["user_positions"] = half_circle_user_placement(
            seed ^ 0xC0FFEE, updates["k_users"], args.user_radius,
            ris_center_xy=(0.0, updates.get("d_00", cfg.d_00)))
        updates["phi_k"] = ()
    cfg = replace(cfg, **updates)
    if args.snr_db is not None:
        cfg = replace(cfg, noise_power=cfg.p_total / 10.0 ** (args.snr_db / 10.0))
    return cfg


def _cmd_solve(args):
    cfg = _build_config(args)
    geom = build_geometry(cfg, "exact")
    chan = synthesize_channel(cfg, geom)
    if args.algorithm == "srm":
        trace = maximize_sum_rate(cfg, chan, eps=args.eps,
                                  max_iter=args.max_iter,
                                  los_mode=args.los_constraints)
        for rec in trace.records:
            extra = "" if math.isnan(rec.w_star) else (
                f"  w*={rec.w_star:.6g}  trace={rec.trace_objective:.6g}"
                f"  cuts={rec.cuts}  nodes={rec.nodes}")
            print(f"t={rec.t}  rate={rec.sum_rate:.6f}{extra}")
        print(f"final sum rate: {trace.final.sum_rate:.6f} bits/s/Hz "
              f"(converged={trace.converged}, flag={trace.flag or 'none'})")
        if args.trace:
            trace.to_csv(args.trace)
            print(f"trace written to {args.trace}")
    elif args.algorithm == "sa":
        schedule = AnnealSchedule(max_iters=args.sa_iters)
        _, rate = simulated_annealing(chan, cfg, schedule,
                                      np.random.default_rng(cfg.seed + 1))
        print(f"simulated annealing rate: {rate:.6f} bits/s/Hz")
    elif args.algorithm == "random":
        _, rate = random_phase_search(chan, cfg, np.random.default_rng(cfg.seed + 2),
                                      args.random_draws)
        print(f"best-of-{args.random_draws} random rate: {rate:.6f} bits/s/Hz")
    elif args.algorithm == "continuous":
        _, rate = continuous_phase_ascent(chan, cfg, args.cont_step,
                                          args.cont_iters)
        print(f"continuous-phase rate: {rate:.6f} bits/s/Hz")
    return 0


def _cmd_sweep(args):
    cfg = _build_config(args)
    values = tuple(float(v) for v in args.values.split(","))
    algorithms = tuple(a.strip() for a in args.algorithms.split(",") if a.strip())
    spec = sweep_mod.SweepSpec(
        base=cfg, param=args.param, values=values, algorithms=algorithms,
        trials=args.trials, seed_base=args.seed_base, sa_iters=args.sa_iters,
        random_draws=args.random_draws, cont_step=args.cont_step,
        cont_iters=args.cont_iters, user_radius=args.user_radius)
    rows = sweep_mod.run_sweep(spec, workers=args.workers)
    formats = ["csv"] + (["svg-plot"] if args.plot else [])
    written = sweep_mod.emit_outputs(rows, formats, args.out)
    for path in written:
        print(f"wrote {path}")
    failures = [r for r in rows if r.status != "ok"]
    for row in failures:
        print(f"cell failed: value={row.value} trial={row.trial} "
              f"algorithm={row.algorithm}: {row.status}", file=sys.stderr)
    return 1 if failures else 0


def _cmd_los_report(args):
    cfg = _build_config(args)
    report = build_los_report(cfg)
    print(f"surface size threshold:        {report.threshold_size:.4f}")
    print(f"required d_r1*d_b product:     {report.required_separation_product:.6g} m^2")
    print(f"actual d_r1*d_b product:       {report.actual_separation_product:.6g} m^2")
    print(f"required d_b at n_r={cfg.n_r}:        {report.required_d_b:.4f} m")
    print(f"row balance sums(1+sin):       {np.array2string(report.row_balance, precision=6)}")
    print(f"row balance spread:            {report.row_balance_spread:.3e}")
    print(f"orthogonality residual:        {report.orthogonality:.3e}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="risbf",
        description="Reflecting-surface hybrid beamforming simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="optimize one seeded instance")
    _add_config_flags(p_solve)
    p_solve.add_argument("--algorithm", default="srm",
                         choices=("srm", "sa", "random", "continuous"))
    p_solve.add_argument("--eps", type=float, default=1e-3)
    p_solve.add_argument("--max-iter", type=int, default=20)
    p_solve.add_argument("--los-constraints", action="store_true",
                         help="add the row-balance equalities to the phase step")
    p_solve.add_argument("--trace", help="write the per-cycle trace CSV here")
    p_solve.add_argument("--sa-iters", type=int, default=100_000)
    p_solve.add_argument("--random-draws", type=int, default=8)
    p_solve.add_argument("--cont-step", type=float, default=0.1)
    p_solve.add_argument("--cont-iters", type=int, default=150)
    p_solve.set_defaults(func=_cmd_solve)

    p_sweep = sub.add_parser("sweep", help="sweep a parameter and emit outputs")
    _add_config_flags(p_sweep)
    p_sweep.add_argument("--param", required=True, choices=sweep_mod.SWEEPABLE)
    p_sweep.add_argument("--values", required=True,
                         help="comma-separated sweep values")
    p_sweep.add_argument("--algorithms", default="srm",
                         help=f"comma-separated subset of {sweep_mod.ALGORITHMS}")
    p_sweep.add_argument("--trials", type=int, default=1)
    p_sweep.add_argument("--seed-base", type=int, default=0)
    p_sweep.add_argument("--out", default="sweep", help="output path prefix")
    p_sweep.add_argument("--plot", action="store_true",
                         help="also render the SVG figure")
    p_sweep.add_argument("--workers", type=int, default=1)
    p_sweep.add_argument("--sa-iters", type=int, default=10_000)
    p_sweep.add_argument("--random-draws", type=int, default=8)
    p_sweep.add_argument("--cont-step", type=float, default=0.1)
    p_sweep.add_argument("--cont-iters", type=int, default=150)
    p_sweep.set_defaults(func=_cmd_sweep)

    p_los = sub.add_parser("los-report", help="print the design-rule report")
    _add_config_flags(p_los)
    p_los.set_defaults(func=_cmd_los_report)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
