"""Command-line harness: solve single instances and emit figure data as CSV.

Exit codes: 0 success, 1 solver/domain failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, mse_policy, power_policy
from .baseline_peak import solve_min_mse_peak
from .core import AirCompError, SystemInstance
from .simulator import EnsembleSpec, FadingModel, Policy, ensemble_average

# channel-POWER gains |h_k|^2 of the two reference sets
S1 = (1.0,) * 10
S2 = (0.1, 0.3, 0.5, 0.7, 0.9, 1.1, 1.3, 1.5, 1.7, 1.9)
CHANNEL_SETS = {"S1": S1, "S2": S2}

FIG2_EPS = (1.0, 3.0, 5.0, 7.0)
FIG3_POINTS = 40
FIG3_RANGE = (0.1, 9.9)
FIG4_SENSORS = (5, 10, 15, 20, 25, 30)
FIG4_MU = (0.5, 1.0)
DEFAULT_TRIALS = 10**6


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.9g}"
    return str(v)


class Table:
    def __init__(self, name: str, header: list[str]):
        self.name = name
        self.header = header
        self.rows: list[list] = []

    def add(self, *row):
        self.rows.append([_fmt(v) for v in row])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.header)
        w.writerows(self.rows)
        return buf.getvalue()


# -- argument parsing -----------------------------------------------------------

def _float_list(text: str) -> list[float]:
    try:
        values = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated reals, got {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("expected at least one value")
    return values


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _seed(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=_seed, default=0, help="master RNG seed (u64)")
    common.add_argument("--out", type=Path, help="write CSV + manifest into this directory")
    common.add_argument("--trials", type=int, default=DEFAULT_TRIALS, help="Monte Carlo trials")
    common.add_argument("--workers", type=int, default=1, help="worker processes for ensembles")
    common.add_argument("--quiet", action="store_true", help="suppress notes on stderr")

    parser = argparse.ArgumentParser(prog="aircomp", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def instance_flags(p):
        p.add_argument("--channels", type=_float_list, required=True,
                       help="comma-separated channel magnitudes h_k")
        p.add_argument("--power-gains", action="store_true",
                       help="interpret --channels as channel-power gains |h_k|^2")
        p.add_argument("--noise-var", type=float, default=1.0, help="receiver noise variance")

    p = sub.add_parser("solve-mse", parents=[common], help="minimum MSE under a sum-power budget")
    instance_flags(p)
    p.add_argument("--sum-power", type=float, required=True)

    p = sub.add_parser("solve-power", parents=[common], help="minimum sum power under an MSE limit")
    instance_flags(p)
    p.add_argument("--mse-limit", type=float, required=True)

    p = sub.add_parser("baseline-peak", parents=[common], help="minimum MSE under per-sensor caps")
    instance_flags(p)
    p.add_argument("--peak-power", type=float, required=True)

    p = sub.add_parser("simulate", parents=[common], help="Rayleigh ensemble average")
    p.add_argument("--policy", choices=[x.value for x in Policy], required=True)
    p.add_argument("--sensors", type=int, required=True)
    p.add_argument("--mu", type=float, default=1.0, help="mean channel-power gain")
    p.add_argument("--noise-var", type=float, default=1.0)
    p.add_argument("--sum-power-per-sensor", type=float, default=10.0)
    p.add_argument("--mse-limit-per-sensor", type=float, default=0.2)
    p.add_argument("--peak-power", type=float, default=10.0)

    p = sub.add_parser("fig", parents=[common], help="figure data")
    p.add_argument("--which", type=int, choices=[1, 2, 3, 4], required=True)
    p.add_argument("--noise-var", type=float, default=1.0)
    p.add_argument("--fig2-eps", type=_float_list, default=list(FIG2_EPS))
    p.add_argument("--fig3-points", type=int, default=FIG3_POINTS)
    p.add_argument("--fig4-sensors", type=_int_list, default=list(FIG4_SENSORS))
    p.add_argument("--fig4-mu", type=_float_list, default=list(FIG4_MU))
    p.add_argument("--sum-power-per-sensor", type=float, default=10.0)
    p.add_argument("--peak-power", type=float, default=10.0)
    return parser


# -- subcommands ----------------------------------------------------------------

def _instance(args) -> SystemInstance:
    gains = np.asarray(args.channels, dtype=float)
    if args.power_gains:
        gains = np.sqrt(gains)
    return SystemInstance.from_gains(gains, args.noise_var)


def cmd_solve_mse(args) -> list[Table]:
    inst = _instance(args)
    rep = mse_policy.solve_min_mse(inst, args.sum_power)
    g = rep.design.rx_gain
    t = Table("solve-mse", ["sensor", "h_k[amplitude]", "b_k[amplitude]", "b_k^2[power]",
                            "g[amplitude]", "mse[power]", "sum_power[power]"])
    for k, (h, b) in enumerate(zip(inst.h, rep.design.tx_gains), start=1):
        t.add(k, h, b, b * b, g, rep.mse_star, rep.power_used)
    return [t]


def cmd_solve_power(args) -> list[Table]:
    inst = _instance(args)
    rep = power_policy.solve_min_power(inst, args.mse_limit)
    d = rep.diagnostics
    note = "trivial" if rep.trivial else ""
    if rep.trivial and not args.quiet:
        print(f"warning: trivial: mse limit {args.mse_limit:g} >= K={len(inst.h)}, "
              "zero design is optimal", file=sys.stderr)
    t = Table("solve-power", ["sensor", "h_k[amplitude]", "b_k[amplitude]", "b_k^2[power]",
                              "tau_k[-]", "g[amplitude]", "M[1/amplitude^2]", "lambda2[-]",
                              "sum_power[power]", "note"])
    for k, (h, b, tau) in enumerate(zip(inst.h, rep.design.tx_gains, d.taus), start=1):
        t.add(k, h, b, b * b, tau, rep.design.rx_gain, d.m_value, d.kkt_multiplier, rep.pw_star, note)
    return [t]


def cmd_baseline_peak(args) -> list[Table]:
    inst = _instance(args)
    res = solve_min_mse_peak(inst, args.peak_power)
    g = res.design.rx_gain
    t = Table("baseline-peak", ["sensor", "h_k[amplitude]", "b_k[amplitude]", "b_k^2[power]",
                                "g[amplitude]", "mse[power]", "sum_power[power]"])
    for k, (h, b) in enumerate(zip(inst.h, res.design.tx_gains), start=1):
        t.add(k, h, b, b * b, g, res.point.mse, res.point.sum_power)
    return [t]


def _spec(policy, sensors, args) -> EnsembleSpec:
    return EnsembleSpec(
        sensors=sensors,
        trials=args.trials,
        policy=policy,
        sum_power_limit_per_sensor=args.sum_power_per_sensor,
        mse_limit_per_sensor=getattr(args, "mse_limit_per_sensor", None),
        peak_limit=args.peak_power,
        noise_variance=args.noise_var,
        seed=args.seed,
    )


def cmd_simulate(args) -> list[Table]:
    spec = _spec(Policy(args.policy), args.sensors, args)
    stats = ensemble_average(spec, FadingModel(args.mu), workers=args.workers)
    t = Table("simulate", ["sensors", "mean_power_gain[power]", "policy",
                           "normalized_mean[power]", "std_error[power]", "trials"])
    t.add(args.sensors, args.mu, spec.policy.value, stats.mean, stats.std_error, stats.trials)
    return [t]


def _fig1(args) -> Table:
    t = Table("fig1", ["channel_set", "trace", "parameter[power]", "mse[power]", "sum_power[power]"])
    budgets = 10.0 ** (np.arange(-20, 31) / 10.0)
    limits = np.arange(1, 100) / 10.0
    for name, gains in CHANNEL_SETS.items():
        inst = SystemInstance.from_gains(np.sqrt(gains), args.noise_var)
        for P in budgets:
            rep = mse_policy.solve_min_mse(inst, P)
            t.add(name, "sweep_sum_power", P, rep.mse_star, rep.power_used)
        for eps in limits:
            rep = power_policy.solve_min_power(inst, eps)
            t.add(name, "sweep_mse_limit", eps, eps, rep.pw_star)
    return t


def _fig2(args) -> Table:
    t = Table("fig2", ["channel_set", "mse_limit[power]", "sensor", "power_gain[power]",
                       "h_k[amplitude]", "b_k[amplitude]", "b_k^2[power]"])
    for name, gains in CHANNEL_SETS.items():
        inst = SystemInstance.from_gains(np.sqrt(gains), args.noise_var)
        for eps in args.fig2_eps:
            b = power_policy.solve_min_power(inst, eps).design.tx_gains
            for k, (pg, h, bk) in enumerate(zip(gains, inst.h, b), start=1):
                t.add(name, float(eps), k, float(pg), h, bk, bk * bk)
    return t


def _fig3(args) -> Table:
    t = Table("fig3", ["channel_set", "mse_limit[power]", "g[amplitude]"])
    limits = np.geomspace(*FIG3_RANGE, args.fig3_points)
    for name, gains in CHANNEL_SETS.items():
        inst = SystemInstance.from_gains(np.sqrt(gains), args.noise_var)
        for eps in limits:
            t.add(name, eps, power_policy.solve_min_power(inst, eps).design.rx_gain)
    return t


def _fig4(args) -> Table:
    t = Table("fig4", ["sensors", "mean_power_gain[power]", "policy",
                       "normalized_mse[power]", "std_error[power]", "trials"])
    for mu in args.fig4_mu:
        model = FadingModel(mu)
        for K in args.fig4_sensors:
            for policy in (Policy.SUM_POWER_MSE, Policy.PEAK_MSE):
                stats = ensemble_average(_spec(policy, K, args), model, workers=args.workers)
                t.add(K, float(mu), policy.value, stats.mean, stats.std_error, stats.trials)
                if not args.quiet:
                    print(f"fig4 mu={mu:g} K={K} {policy.value}: {stats.mean:.6g}", file=sys.stderr)
    return t


def cmd_fig(args) -> list[Table]:
    return [{1: _fig1, 2: _fig2, 3: _fig3, 4: _fig4}[args.which](args)]


COMMANDS = {
    "solve-mse": cmd_solve_mse,
    "solve-power": cmd_solve_power,
    "baseline-peak": cmd_baseline_peak,
    "simulate": cmd_simulate,
    "fig": cmd_fig,
}


def _manifest(args, argv, table: Table, path: Path, seconds: float) -> str:
    params = {k: (str(v) if isinstance(v, Path) else v) for k, v in sorted(vars(args).items())}
    lines = [
        f"subcommand: {args.command}",
        f"argv: {json.dumps(list(argv))}",
        f"parameters: {json.dumps(params, sort_keys=True)}",
        f"seed: {args.seed}",
        f"output: {path}",
        f"version: {__version__}",
        f"wall_clock_s: {seconds:.3f}",
    ]
    return "\n".join(lines) + "\n"


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.ERROR if args.quiet else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    logging.getLogger().setLevel(logging.ERROR if args.quiet else logging.WARNING)
    if args.trials < 1 or args.workers < 1:
        print("aircomp: error: --trials and --workers must be positive", file=sys.stderr)
        return 2

    start = time.perf_counter()
    try:
        tables = COMMANDS[args.command](args)
    except AirCompError as exc:
        print(f"aircomp: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    elapsed = time.perf_counter() - start

    for table in tables:
        text = table.to_csv()
        if args.out is None:
            sys.stdout.write(text)
            continue
        args.out.mkdir(parents=True, exist_ok=True)
        path = args.out / f"{table.name}.csv"
        path.write_text(text, encoding="utf-8", newline="\n")
        manifest = args.out / f"{table.name}.manifest.txt"
        manifest.write_text(_manifest(args, argv, table, path, elapsed), encoding="utf-8")
        if not args.quiet:
            print(f"wrote {path}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
