"""Command-line front end: run, sweep, pattern and validate subcommands.

Exit codes: 0 success, 2 configuration or usage error, 3 runtime invariant
failure (battery overdraw, low-battery transmission, drift-bound failure),
4 validation-suite failure.
"""

import argparse
import csv
import dataclasses
import os
import sys

import numpy as np

from . import report
from .config import ConfigError, load_experiment
from .model import BatteryOverdraw
from .simulator import beam_pattern, run, sweep_v
from .validate import run_validation

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INVARIANT = 3
EXIT_ORACLE = 4


def _metric_columns(metrics):
    """Fixed column order for metrics rows; wall-clock time is deliberately
    left out so identical (config, seed) invocations write identical bytes."""
    cols = [
        ("v", metrics.v),
        ("seed", metrics.seed),
        ("horizon", metrics.horizon),
        ("avg_p_ap_w", metrics.avg_p_ap),
        ("avg_sum_queue_bits", metrics.avg_sum_queue),
        ("max_queue_bits", metrics.max_queue),
        ("final_sum_queue_bits", metrics.final_sum_queue),
        ("beamed_slots", metrics.beamed_slots),
        ("battery_outages", metrics.battery_outages),
        ("safety_violations", metrics.safety_violations),
        ("projection_events", metrics.projection_events),
        ("gain_clip_events", metrics.gain_clip_events),
        ("drift_checks", metrics.drift_checks),
        ("drift_failures", metrics.drift_failures),
        ("min_drift_margin", metrics.min_drift_margin),
        ("min_battery_j", metrics.min_battery),
    ]
    for s, bits in enumerate(metrics.arrived_bits):
        cols.append((f"arrived_bits_s{s}", bits))
    for s, bits in enumerate(metrics.delivered_bits):
        cols.append((f"delivered_bits_s{s}", bits))
    return cols


def _fmt(value):
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_metrics_csv(path, metrics_list):
    rows = [_metric_columns(m) for m in metrics_list]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([name for name, _ in rows[0]])
        for row in rows:
            writer.writerow([_fmt(v) for _, v in row])


def _write_trace_csv(path, trace):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "p_ap_w", "sum_queue_bits", "min_battery_j"])
        for t, p, q, e in zip(trace.t, trace.p_ap, trace.sum_queue,
                              trace.min_battery):
            writer.writerow([int(t), repr(float(p)), repr(float(q)),
                             repr(float(e))])


def _invariants_ok(metrics) -> bool:
    return (metrics.battery_outages == 0 and metrics.safety_violations == 0
            and metrics.drift_failures == 0)


def _build(args, extra_overrides=()):
    overrides = list(args.set or [])
    if args.seed is not None:
        overrides.append(f"run.seed={args.seed}")
    if args.out is not None:
        overrides.append(f"output.directory={args.out}")
    if getattr(args, "trace", None) is not None:
        overrides.append(f"output.trace={args.trace}")
    overrides.extend(extra_overrides)
    return load_experiment(args.config, overrides)


def cmd_run(args) -> int:
    exp = _build(args)
    out_dir = exp.out_dir
    os.makedirs(out_dir, exist_ok=True)
    cfg = exp.run_config
    if cfg.trace == "off":
        # the sample-path figure needs the scalar series either way
        cfg = dataclasses.replace(cfg, trace="scalar")
    try:
        result = run(cfg)
    except BatteryOverdraw as exc:
        print(f"invariant failure: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    _write_metrics_csv(os.path.join(out_dir, "metrics.csv"), [result.metrics])
    if exp.trace != "off":
        _write_trace_csv(os.path.join(out_dir, "trace.csv"), result.trace)
    report.run_figure(result, os.path.join(out_dir, "run.png"))
    m = result.metrics
    print(f"T={m.horizon} V={m.v:g} seed={m.seed}: "
          f"avg beacon power {m.avg_p_ap:.4g} W, "
          f"avg backlog {m.avg_sum_queue:.4g} bits, "
          f"battery outages {m.battery_outages}")
    if not _invariants_ok(m):
        print("invariant failure: unsafe transmission or drift-bound violation",
              file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


def cmd_sweep(args) -> int:
    extra = []
    if args.v_list is not None:
        try:
            values = [float(x) for x in args.v_list.split(",") if x.strip()]
        except ValueError:
            raise ConfigError(f"--v-list: cannot parse {args.v_list!r}")
        if not values:
            raise ConfigError("--v-list: need at least one value")
        extra.append("run.V_list=[" + ", ".join(repr(v) for v in values) + "]")
    exp = _build(args, extra)
    if not exp.v_list:
        raise ConfigError("sweep needs run.V_list in the config or --v-list")
    out_dir = exp.out_dir
    os.makedirs(out_dir, exist_ok=True)
    try:
        results = sweep_v(exp.run_config, list(exp.v_list))
    except BatteryOverdraw as exc:
        print(f"invariant failure: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    _write_metrics_csv(os.path.join(out_dir, "sweep.csv"),
                       [r.metrics for r in results])
    report.sweep_figure(results, os.path.join(out_dir, "sweep.png"))
    power = [r.metrics.avg_p_ap for r in results]
    backlog = [r.metrics.avg_sum_queue for r in results]
    for r in results:
        m = r.metrics
        print(f"V={m.v:<12g} avg power {m.avg_p_ap:.4g} W   "
              f"avg backlog {m.avg_sum_queue:.6g} bits")
    decreasing = all(power[i + 1] < power[i] for i in range(len(power) - 1))
    vv = np.asarray(exp.v_list)
    design = np.vstack([vv, np.ones_like(vv)]).T
    coef, *_ = np.linalg.lstsq(design, np.asarray(backlog), rcond=None)
    fitted = design @ coef
    ss_res = float(np.sum((backlog - fitted) ** 2))
    ss_tot = float(np.sum((backlog - np.mean(backlog)) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    print(f"avg power strictly decreasing in V: {'yes' if decreasing else 'no'}")
    print(f"backlog-vs-V linear fit R^2: {r2:.4f}")
    if not all(_invariants_ok(r.metrics) for r in results):
        print("invariant failure: unsafe transmission or drift-bound violation",
              file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


def cmd_pattern(args) -> int:
    if args.grid < 8:
        raise ConfigError("--grid: need at least 8 angle bins")
    exp = _build(args)
    out_dir = exp.out_dir
    os.makedirs(out_dir, exist_ok=True)
    cfg = exp.run_config
    try:
        result = run(cfg)
    except BatteryOverdraw as exc:
        print(f"invariant failure: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    angles, pattern = beam_pattern(result, cfg.topology, cfg.channel, args.grid)
    path = os.path.join(out_dir, "pattern.csv")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write("# time-averaged radiated power: mean_t p_ap(t) "
                 "|w(t).a(theta)|^2 / antennas, watts; theta in [0, pi)\n")
        writer = csv.writer(fh)
        writer.writerow(["theta_rad", "avg_power_w"])
        for theta, value in zip(angles, pattern):
            writer.writerow([repr(float(theta)), repr(float(value))])
    report.pattern_figure(angles, pattern, cfg.topology.node_angles,
                          os.path.join(out_dir, "pattern.png"))
    peak = int(np.argmax(pattern))
    print(f"{args.grid} angle bins; peak at {np.degrees(angles[peak]):.1f} deg "
          f"({pattern[peak]:.4g} W)")
    if not _invariants_ok(result.metrics):
        print("invariant failure: unsafe transmission or drift-bound violation",
              file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


def cmd_validate(args) -> int:
    exp = _build(args)
    results = run_validation(exp)
    failed = [r for r in results if not r.ok]
    for r in results:
        print(f"{r.name:18s} {'PASS' if r.ok else 'FAIL'}  {r.detail}")
    if failed:
        print(f"{len(failed)} of {len(results)} checks failed", file=sys.stderr)
        return EXIT_ORACLE
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wpcnsim",
        description="Wireless-powered network simulator: beamformed energy "
                    "delivery plus backpressure routing under a Lyapunov "
                    "drift-plus-penalty policy.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", metavar="PATH", default=None,
                       help="config file (default: bundled benchmark)")
        p.add_argument("--set", metavar="KEY=VALUE", action="append",
                       help="override a config key, e.g. run.V=1e9 (repeatable)")
        p.add_argument("--out", metavar="DIR", default=None,
                       help="output directory (overrides output.directory)")
        p.add_argument("--seed", metavar="N", type=int, default=None,
                       help="RNG seed (overrides run.seed)")

    p_run = sub.add_parser("run", help="single closed-loop run")
    common(p_run)
    p_run.add_argument("--trace", choices=("off", "scalar", "full"),
                       default=None, help="per-slot trace verbosity")
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="paired-seed sweep over the "
                                           "tradeoff weight")
    common(p_sweep)
    p_sweep.add_argument("--v-list", metavar="CSV", default=None,
                         help="comma-separated tradeoff weights")
    p_sweep.set_defaults(func=cmd_sweep)

    p_pat = sub.add_parser("pattern", help="time-averaged beam pattern export")
    common(p_pat)
    p_pat.add_argument("--grid", metavar="N", type=int, default=180,
                       help="angle bins over [0, pi) (default 180)")
    p_pat.set_defaults(func=cmd_pattern)

    p_val = sub.add_parser("validate", help="reduced-scale oracle suite")
    common(p_val)
    p_val.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
