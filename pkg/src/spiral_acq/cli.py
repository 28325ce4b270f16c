"""Command-line front end: ``spiral-acq <subcommand> ...``.

Exit codes: 0 success, 1 runtime or numerical failure, 2 invalid input.
"""
from __future__ import annotations

import argparse
import csv
import io
import math
import sys
import warnings
from pathlib import Path

from . import __version__, analytic, jitter, metrics, simulator
from .config import (
    MissionParams,
    ParamError,
    ValidityWarning,
    derive_scales,
    describe,
    dump_params,
    load_params,
    parse_overrides,
    parse_quantity,
)

EXIT_OK, EXIT_RUNTIME, EXIT_INVALID = 0, 1, 2

ANALYTIC_METHODS = ("correlated-exact", "linearized", "uncorrelated", "delta-mean")
MC_METHODS = ("monte-carlo-1dof", "monte-carlo-2dof")
SWEEP_UNITS = {"scan_speed": ("gamma", "mrad/s", 1e3), "track_width": ("d_t", "urad", 1e6)}
DEFAULT_TRIALS = 60_000


class UsageError(Exception):
    """Bad command-line input (exit code 2)."""


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from exc


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _params(args, *, require_overlap: bool = True) -> MissionParams:
    return load_params(args.config, parse_overrides(args.set), require_overlap=require_overlap)


def _metadata(args, p: MissionParams, extra: dict | None = None) -> list[str]:
    lines = [f"tool: spiral-acq {__version__}", f"command: {args.command}", f"seed: {args.seed}"]
    # exact values in config syntax, so the header can be fed back via --config
    lines += [f"param {line}" for line in dump_params(p).splitlines()]
    for k, v in (extra or {}).items():
        lines.append(f"{k}: {float(v)!r}" if isinstance(v, float) else f"{k}: {v}")
    return lines


def _sink(path: str):
    """Map the conventional '-' to standard output."""
    return sys.stdout if path == "-" else path


def _emit_csv(path, meta: list[str], header: list[str], rows: list[list]) -> None:
    buf = io.StringIO()
    for line in meta:
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(x)) if isinstance(x, float) else x for x in row])
    if path is None or str(path) == "-":
        sys.stdout.write(buf.getvalue())
    else:
        Path(path).write_text(buf.getvalue())


def cmd_analytic(args) -> int:
    p = _params(args)
    sc = derive_scales(p)
    out = [f"spiral-acq {__version__} analytic report", "", "parameters:"]
    out += [f"  {k:20s} {v}" for k, v in describe(p)]
    out += [
        "",
        "derived scales:",
        f"  tau_0                {sc.tau_0:.6g} s",
        f"  t_mean               {sc.t_mean:.6g} s",
        f"  gamma_min            {sc.gamma_min * 1e3:.6g} mrad/s",
        f"  beta                 {sc.beta:.6g} 1/rad",
        f"  eta                  {sc.eta:.6g}",
        f"  delta_mean           {analytic.delta_mean(p):.6g}",
        "",
        "failure probability:",
    ]
    estimates = [
        analytic.p_fail_averaged(p, precision=args.precision),
        analytic.p_fail_delta_mean(p),
        analytic.p_fail_linearized(p),
        analytic.p_fail_uncorrelated(p),
        analytic.full_correlation_limit(p),
    ]
    for est in estimates:
        flag = f"  [{', '.join(est.flags)}]" if est.flags else ""
        out.append(f"  {est.method.value:26s} {est.p_fail:.6g}{flag}")
    t1 = metrics.t_single_scan(p)
    tms = metrics.t_multi_scan(p, estimates[0].p_fail, flyback=not args.no_flyback)
    out += ["", "search time:", f"  T_1s                 {t1:.6g} s", f"  T_ms                 {tms:.6g} s"]
    print("\n".join(out))
    return EXIT_OK


def _sweep_cell(method: str, q: MissionParams, args) -> tuple[float, float | None]:
    if method in MC_METHODS:
        est = simulator.estimate_p_fail(q, args.trials, args.seed, "1dof" if method.endswith("1dof") else "2dof")
        return est.p_fail, est.ci95_halfwidth
    if method == "correlated-exact":
        return analytic.p_fail_averaged(q, precision=args.precision).p_fail, None
    if method == "linearized":
        return analytic.p_fail_linearized(q).p_fail, None
    if method == "uncorrelated":
        return analytic.p_fail_uncorrelated(q).p_fail, None
    return analytic.p_fail_delta_mean(q).p_fail, None


def cmd_sweep(args) -> int:
    field_name, default_unit, display = SWEEP_UNITS[args.variable]
    unit = args.unit or default_unit
    dim = "speed" if args.variable == "scan_speed" else "angle"
    items = [x.strip() for x in args.values.split(",") if x.strip()]
    if not items:
        raise UsageError("--values must not be empty")
    values = []
    for item in items:
        try:
            values.append(parse_quantity(item, dim))
        except ParamError:
            values.append(parse_quantity(f"{item} {unit}", dim))
    if any(b <= a for a, b in zip(values, values[1:])):
        raise UsageError("--values must be strictly increasing")
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    unknown = set(methods) - set(ANALYTIC_METHODS + MC_METHODS)
    if unknown or not methods:
        raise UsageError(f"unknown methods {sorted(unknown)}; choose from {ANALYTIC_METHODS + MC_METHODS}")
    if any(m in MC_METHODS for m in methods) and args.trials < 100:
        raise UsageError("--trials must be >= 100 for Monte Carlo methods")
    base = _params(args, require_overlap=False)

    header = [f"{args.variable}_{default_unit.replace('/', '_per_')}"]
    for m in methods:
        header.append(m)
        if m in MC_METHODS:
            header.append(f"{m}_ci95")
    header.append("note")
    rows = []
    for v in values:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ValidityWarning)
            q = base.with_(**{field_name: v})
        row, notes = [v * display], []
        for m in methods:
            try:
                pf, ci = _sweep_cell(m, q, args)
            except (ParamError, ValueError, MemoryError, RuntimeError) as exc:
                pf, ci = math.nan, math.nan
                notes.append(f"{m}: {exc}")
            row.append(pf)
            if m in MC_METHODS:
                row.append(ci)
        row.append("; ".join(notes))
        rows.append(row)
    meta = _metadata(args, base, {"variable": args.variable, "methods": ",".join(methods),
                                  "trials": args.trials, "precision": args.precision})
    _emit_csv(args.out, meta, header, rows)
    return EXIT_OK


def cmd_simulate(args) -> int:
    p = _params(args, require_overlap=False)
    mode = simulator.DofMode.parse(args.dof)
    if args.trials < 100:
        raise UsageError("--trials must be >= 100")
    if args.search_time:
        est = simulator.estimate_mean_search_time(p, args.trials, args.seed, mode, flyback=not args.no_flyback)
        print(f"T_ms = {est.t_ms:.6g} s +/- {est.ci95_halfwidth:.2g} (95%), mean scans {est.mean_scans:.4g}, "
              f"n={est.n_trials}, seed={est.seed}")
    else:
        est = simulator.estimate_p_fail(p, args.trials, args.seed, mode)
        print(f"P_fail = {est.p_fail:.6g} +/- {est.ci95_halfwidth:.2g} (Wilson 95%), "
              f"{est.n_failures}/{est.n_trials} failed, {mode.value}, seed={est.seed}")
        if p.d_t < 2 * p.r_d:
            print(f"analytic correlated-exact = {analytic.p_fail_averaged(p, precision=args.precision).p_fail:.6g}")
    if args.dump:
        recs = simulator.simulate_trials(p, args.trials, args.seed, mode)
        simulator.write_trials_csv(recs, _sink(args.dump))
    return EXIT_OK


def cmd_optimize(args) -> int:
    p = _params(args)
    rng = None
    if args.range:
        lo, hi = _float_list(args.range)
        rng = (lo * 1e-6, hi * 1e-6)
    curve = metrics.optimize_track_width(p, rng, n_grid=args.points, flyback=not args.no_flyback,
                                         precision=args.precision)
    flags = f" [{', '.join(curve.flags)}]" if curve.flags else ""
    print(f"T_ms,min={curve.t_ms_min:.3g} s at D_t={curve.d_t_min * 1e6:.3g} urad "
          f"(overlap {curve.overlap_min / p.r_d:.3g} R_d){flags}")
    rows = [[float(d * 1e6), float(t)] for d, t in zip(curve.track_widths, curve.t_ms_values)]
    meta = _metadata(args, p, {
        "flyback": not args.no_flyback, "precision": args.precision,
        "t_ms_min_s": curve.t_ms_min, "d_t_min_urad": curve.d_t_min * 1e6,
        "flags": ",".join(curve.flags),
    })
    if args.out:
        _emit_csv(args.out, meta, ["track_width_urad", "t_ms_s"], rows)
    return EXIT_OK


def cmd_efficiency(args) -> int:
    p = _params(args)
    targets = _float_list(args.targets)
    speeds = _float_list(args.speeds) if args.speeds else [p.gamma * 1e3]
    if not targets or any(not 0 < t < 1 for t in targets):
        raise UsageError("--targets must be probabilities in (0, 1)")
    rows = []
    for g in speeds:
        q = p.with_(gamma=g * 1e-3)
        for t in targets:
            try:
                f, d_c, d_uc = metrics.efficiency_factor(q, t, precision=args.precision)
                rows.append([g, t, f, d_c * 1e6, d_uc * 1e6, ""])
            except metrics.TargetNotBracketed as exc:
                rows.append([g, t, math.nan, math.nan, math.nan, str(exc)])
    meta = _metadata(args, p, {"precision": args.precision})
    _emit_csv(args.out, meta, ["scan_speed_mrad_per_s", "target_p_fail", "f_eff",
                               "d_t_correlated_urad", "d_t_uncorrelated_urad", "note"], rows)
    return EXIT_OK


def cmd_validate_jitter(args) -> int:
    p = _params(args, require_overlap=False)
    if args.n < 100_000:
        raise UsageError("--n must be >= 1e5 for a meaningful statistical check")
    series = jitter.synthesize(p, args.dt, args.n, args.seed)
    chk = jitter.validate(series, p)
    verdict = {True: "PASS", False: "FAIL"}
    print(f"samples {args.n}, dt {args.dt:g} s, seed {args.seed}")
    print(f"  RMS        {chk.rms * 1e6:.4f} urad   target {chk.rms_target * 1e6:.4f} urad   (2%)  {verdict[chk.rms_ok]}")
    print(f"  ACF(tau_0) {chk.acf_tau0:.4f}        target {math.exp(-1):.4f}        (2%)  {verdict[chk.acf_ok]}")
    print(f"  PSD(f<<fr) {chk.psd_plateau * 1e12:.2f} urad^2/Hz target {chk.psd_target * 1e12:.2f} urad^2/Hz (10%) "
          f"{verdict[chk.psd_ok]}")
    if args.out:
        jitter.write_series_csv(series, _sink(args.out))
    return EXIT_OK if chk.passed else EXIT_RUNTIME


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, default=None, help="TOML config of 'key = \"number unit\"' pairs")
    common.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a parameter, e.g. gamma=10mrad/s")
    common.add_argument("--seed", type=_seed, default=0)
    common.add_argument("--trials", type=int, default=DEFAULT_TRIALS)
    common.add_argument("--out", default=None, help="CSV output path ('-' for stdout)")
    common.add_argument("--precision", choices=("fast", "exact"), default="fast")

    ap = argparse.ArgumentParser(prog="spiral-acq", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("analytic", parents=[common], help="analytic failure probabilities and scales")
    s.add_argument("--no-flyback", action="store_true")
    s.set_defaults(func=cmd_analytic)

    s = sub.add_parser("sweep", parents=[common], help="P_fail curves against scan speed or track width")
    s.add_argument("--variable", choices=tuple(SWEEP_UNITS), required=True)
    s.add_argument("--values", required=True, help="comma-separated values, optionally with units")
    s.add_argument("--unit", default=None, help="unit for bare numbers in --values")
    s.add_argument("--methods", default=",".join(ANALYTIC_METHODS))
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("simulate", parents=[common], help="Monte Carlo estimate of P_fail or search time")
    s.add_argument("--dof", default="1", help="1 (radial) or 2 (radial and tangential)")
    s.add_argument("--search-time", action="store_true", help="estimate mean search time with repeated scans")
    s.add_argument("--no-flyback", action="store_true")
    s.add_argument("--dump", default=None, help="write per-trial CSV here")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("optimize", parents=[common], help="track width minimizing mean search time")
    s.add_argument("--range", default=None, help="lo,hi track width in urad")
    s.add_argument("--points", type=int, default=41)
    s.add_argument("--no-flyback", action="store_true")
    s.set_defaults(func=cmd_optimize)

    s = sub.add_parser("efficiency", parents=[common], help="correlation efficiency factor F_eff")
    s.add_argument("--targets", default="0.001,0.003,0.01,0.03")
    s.add_argument("--speeds", default=None, help="scan speeds in mrad/s (default: configured speed)")
    s.set_defaults(func=cmd_efficiency)

    s = sub.add_parser("validate-jitter", parents=[common], help="statistical check of synthesized jitter")
    s.add_argument("--n", type=int, default=10_000_000)
    s.add_argument("--dt", type=float, default=1e-3, help="sample interval in seconds")
    s.set_defaults(func=cmd_validate_jitter)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ParamError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # noqa: BLE001 - report any numeric/runtime failure as exit 1
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
