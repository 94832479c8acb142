"""Command-line front end.

Every subcommand writes its results under ``--out`` (default: the
CYBERHAWKES_OUT environment variable, else the current directory). Tabular
plot data goes to CSV; summaries go to JSON with sorted keys so repeated
runs with the same seed produce identical bytes.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import datetime as dt
import json
import os
import sys
from pathlib import Path
from typing import Optional

import numpy as np

from . import calibration, expectation, ingest, model, reaction, simulation, validation
from .errors import CyberHawkesError, DomainError
from .optimize import OptimizerOptions

OUT_ENV = "CYBERHAWKES_OUT"

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# I/O helpers

def _out_dir(args) -> Path:
    out = Path(args.out or os.environ.get(OUT_ENV) or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if np.isfinite(x) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _flatten(obj, prefix=""):
    if isinstance(obj, dict):
        for k in sorted(obj):
            yield from _flatten(obj[k], f"{prefix}{k}.")
    elif isinstance(obj, list):
        for i, v in enumerate(obj):
            yield from _flatten(v, f"{prefix}{i}.")
    else:
        yield prefix[:-1], obj


def write_summary(args, name: str, payload: dict) -> Path:
    """Write the main result as JSON or as flattened key,value CSV."""
    payload = _clean(payload)
    out = _out_dir(args)
    if args.format == "csv":
        path = out / f"{name}.csv"
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["key", "value"])
            for key, value in _flatten(payload):
                writer.writerow([key, json.dumps(value)])
    else:
        path = out / f"{name}.json"
        path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n",
                        encoding="utf-8")
    return path


def write_table(args, name: str, header, rows) -> Path:
    path = _out_dir(args) / f"{name}.csv"
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating))
                             else v for v in row])
    return path


def load_params(path):
    """PhaseOneParams and optional ReactionParams from a JSON file.

    Accepts either the flat parameter object (with an optional "reaction"
    block) or a calibration result holding a "params" object.
    """
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DomainError(f"params file is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise DomainError("params file must hold a JSON object")
    reaction_block = data.get("reaction")
    body = data.get("params", data)
    try:
        p = model.PhaseOneParams(**{k: body[k] for k in calibration.PARAM_NAMES})
    except KeyError as exc:
        raise DomainError(f"params file misses {exc}") from None
    r = model.ReactionParams(**reaction_block) if reaction_block else None
    return p, r


def _window_value(text: Optional[str]):
    """Days as a number, or a calendar date."""
    if text is None:
        return None
    try:
        return float(text)
    except ValueError:
        return ingest.parse_date(text)


def _load_stream(args) -> model.EventStream:
    """Event stream from --events (day offsets) or --attacks/--vulns CSVs."""
    t0, s, tau = (_window_value(args.t0), _window_value(args.s),
                  _window_value(args.tau))
    if args.events:
        if s is None or tau is None:
            raise UsageError("--events needs --s and --tau (in days)")
        if any(isinstance(v, dt.date) for v in (t0, s, tau)):
            raise UsageError("with --events the window is given in days")
        return ingest.read_event_stream_csv(args.events, s, tau,
                                            0.0 if t0 is None else t0)
    if args.attacks:
        if None in (t0, s, tau):
            raise UsageError("--attacks needs --t0, --s and --tau dates")
        if args.seed is None:
            raise UsageError("--seed is required to jitter same-day events")
        return _stream_from_csv(args, t0, s, tau)[0]
    raise UsageError("give --events or --attacks")


def _stream_from_csv(args, t0, s, tau):
    if not args.mapping:
        raise UsageError("--mapping is required with --attacks/--vulns")
    mapping = ingest.load_mapping(args.mapping)
    attacks, skipped = ingest.load_attacks(args.attacks, mapping.get("attacks", {}))
    vulns, rejected = [], []
    if getattr(args, "vulns", None):
        vulns, rejected = ingest.load_vulns(args.vulns, mapping.get("vulns", {}),
                                            args.cvss_min)
    ev = ingest.build_event_stream(attacks, vulns, t0, s, tau, seed=args.seed)
    return ev, attacks, vulns, skipped, rejected


def _require_seed(args):
    if args.seed is None:
        raise UsageError(f"--seed is required for '{args.command}'")


def _grid(a: float, b: float, step: float) -> np.ndarray:
    if not step > 0:
        raise UsageError("--grid-step must be > 0")
    n = int(np.floor((b - a) / step + 1e-9))
    return a + step * np.arange(n + 1)


# ---------------------------------------------------------------------------
# subcommands

def cmd_simulate(args):
    _require_seed(args)
    p, r = load_params(args.params_file)
    a = float(args.t0 or 0.0)
    b = float(args.horizon if args.horizon is not None else args.tau or 10.0)
    step = args.grid_step or 0.01
    if args.paths > 1:
        dist = simulation.simulate_count_distribution(p, r, b, args.paths, args.seed,
                                                      start=a)
        values, freq = np.unique(dist.counts, return_counts=True)
        write_table(args, "terminal_counts", ["count", "paths"], zip(values, freq))
        levels = [5, 25, 50, 75, 95]
        summary = {"n_paths": args.paths, "horizon": b, "start": a,
                   "seed": args.seed, "mean": dist.mean(),
                   "percentiles": {str(q): dist.percentile(q) for q in levels}}
        return write_summary(args, "simulate", summary)
    tr = simulation.simulate_two_phase(p, r, (a, b), args.seed,
                                       intensity_grid=_grid(a, b, step))
    ev = tr.events
    rows = [("internal", t, int(lab)) for t, lab in zip(ev.internal_times, tr.phase_labels)]
    rows += [("external", t, "") for t in ev.external_times]
    rows.sort(key=lambda x: (x[1], x[0]))
    write_table(args, "events", ["kind", "time", "phase"], rows)
    write_table(args, "intensity", ["t", "intensity"], zip(tr.grid, tr.intensity))
    days = np.arange(np.floor(a), np.ceil(b))
    edges = np.append(days, days[-1] + 1) if days.size else days
    daily = np.diff(np.searchsorted(ev.internal_times, edges, side="left"))
    write_table(args, "daily_counts", ["day", "count"], zip(days.astype(int), daily))
    summary = {"seed": args.seed, "window": [a, b],
               "n_internal": int(ev.internal_times.size),
               "n_external": int(ev.external_times.size),
               "n_after_switch": int(np.sum(tr.phase_labels == simulation.PHASE_AFTER))}
    return write_summary(args, "simulate", summary)


def cmd_expect(args):
    p, r = load_params(args.params_file)
    tau = float(args.tau or 10.0)
    grid = _grid(0.0, tau, args.grid_step or 0.1)
    st = expectation.ConditioningState.initial(p)
    one = np.atleast_1d(expectation.expected_count(p, None, st, grid))
    two = np.atleast_1d(expectation.expected_count(p, r, st, grid)) if r else one
    write_table(args, "expectation", ["t", "one_phase", "two_phase"],
                zip(grid, one, two))
    rows = []
    if r is not None:
        sweeps = {
            "alpha0": [(v, 1.0, p.m) for v in (0.2, 0.4, 0.6, 0.8, 1.0)],
            "alpha1": [(1.0, v, p.m) for v in (0.2, 0.4, 0.6, 0.8, 1.0)],
            "m_al": [(1.0, 1.0, f * p.m) for f in (0.2, 0.4, 0.6, 0.8, 1.0)],
        }
        for name, settings in sweeps.items():
            for a0, a1, mal in settings:
                rp = model.ReactionParams(r.ell, a0, a1, mal)
                vals = np.atleast_1d(expectation.expected_count(p, rp, st, grid))
                value = {"alpha0": a0, "alpha1": a1, "m_al": mal}[name]
                rows += [(name, value, t, v) for t, v in zip(grid, vals)]
        write_table(args, "sensitivity", ["parameter", "value", "t", "expected_count"], rows)
    summary = {"tau": tau, "one_phase_final": float(one[-1]),
               "two_phase_final": float(two[-1]),
               "reaction": r.as_dict() if r else None, "params": p.as_dict()}
    return write_summary(args, "expect", summary)


def _opts(args) -> OptimizerOptions:
    return OptimizerOptions(max_iterations=args.max_iter, restarts=args.restarts)


def cmd_calibrate(args):
    ev = _load_stream(args)
    init = load_params(args.params_file)[0] if args.params_file else None
    result = calibration.fit(ev, args.method, args.strategy, init, _opts(args),
                             external=not args.no_external, rho_mbar=args.rho_mbar,
                             delta_step=args.delta_step, exposure=args.exposure)
    payload = result.to_dict()
    payload["window"] = {"t0": ev.t0, "s": ev.s, "tau": ev.tau}
    payload["n_internal"] = ev.count_internal(ev.s, ev.tau)
    payload["n_external"] = ev.count_external(ev.s, ev.tau)
    if args.delta_sweep:
        steps = [float(x) for x in args.delta_sweep.split(",")]
        method = args.method if args.method != "likelihood" else "mse_ext"
        sweep = calibration.delta_sweep(ev, steps, method, args.strategy, init,
                                        _opts(args), rho_mbar=args.rho_mbar)
        payload["delta_sweep"] = [
            {"delta_step": step, "params": res.params.as_dict(),
             "ergodicity_ratio": res.ergodicity_ratio,
             "phi_norm": res.phi_norm} for step, res in sweep]
    return write_summary(args, "calibration", payload)


def cmd_validate(args):
    _require_seed(args)
    p, r = load_params(args.params_file)
    ev = _load_stream(args)
    fit_part = ev.with_window(ev.s, ev.tau)
    report = validation.ks_exp1(validation.rescaled_interarrivals(p, fit_part))
    payload = {"ks": report.to_dict(), "predictive": None}
    if args.holdout_end is not None:
        if args.holdout_end <= ev.tau:
            raise UsageError("--holdout-end must be after --tau")
        full = ingest.read_event_stream_csv(args.events, ev.tau, args.holdout_end,
                                            ev.t0) if args.events else None
        if full is None:
            raise UsageError("--holdout-end needs --events covering the holdout")
        band = validation.predictive_check(p, full, args.paths, args.seed)
        payload["predictive"] = band.to_dict()
    return write_summary(args, "validate", payload)


def cmd_decompose(args):
    p, _ = load_params(args.params_file)
    ev = _load_stream(args)
    grid = _grid(ev.t0, ev.tau, args.grid_step or 1.0)
    frac = model.decompose_intensity(p, ev, grid)
    write_table(args, "decomposition", ["t", "baseline", "internal", "external"],
                ((t, *row) for t, row in zip(grid, frac)))
    summary = {"n_points": int(grid.size),
               "mean_fractions": dict(zip(("baseline", "internal", "external"),
                                          map(float, frac.mean(axis=0))))}
    return write_summary(args, "decompose", summary)


def cmd_react(args):
    p, _ = load_params(args.params_file)
    if args.capacity is None or args.ell is None or args.tau is None:
        raise UsageError("react needs --capacity, --ell and --tau")
    sc = reaction.CapacityScenario(args.capacity, args.ell, float(args.tau),
                                   args.grid_step or 0.01)
    sel = reaction.select_reaction(p, sc)
    grid_rows = [(a0, a1, int(sel.feasible_grid[i, j]))
                 for i, a0 in enumerate(sel.alpha0_grid)
                 for j, a1 in enumerate(sel.alpha1_grid)]
    write_table(args, "feasibility_grid", ["alpha0", "alpha1", "feasible"], grid_rows)
    write_table(args, "frontier", ["alpha0", "alpha1"], sel.frontier)
    if sel.increments is not None:
        write_table(args, "increments", ["day", "expected_increment", "capacity"],
                    ((d, v, sel.diminished_capacity)
                     for d, v in zip(sel.days, sel.increments)))
    payload = sel.to_dict()
    payload["first_breach_expectation"] = reaction.first_capacity_breach(
        p, args.capacity, float(args.tau))
    payload["scenario"] = {"capacity": sc.capacity, "ell": sc.ell, "tau": sc.tau,
                           "grid_step": sc.grid_step}
    return write_summary(args, "reaction", payload)


def cmd_ingest(args):
    _require_seed(args)
    if not args.attacks:
        raise UsageError("ingest needs --attacks")
    t0, s, tau = (_window_value(args.t0), _window_value(args.s),
                  _window_value(args.tau))
    if not all(isinstance(v, dt.date) for v in (t0, s, tau)):
        raise UsageError("ingest needs --t0, --s and --tau as dates")
    ev, attacks, vulns, skipped, rejected = _stream_from_csv(args, t0, s, tau)
    path = _out_dir(args) / "events.csv"
    ingest.export_event_stream_csv(ev, path, t0)
    try:
        autocorr = ingest.monthly_autocorrelation(attacks)
    except CyberHawkesError:
        autocorr = None
    payload = {
        "window": {"t0": t0.isoformat(), "s": s.isoformat(), "tau": tau.isoformat(),
                   "s_days": ev.s, "tau_days": ev.tau},
        "n_attacks": len(attacks), "n_vulns": len(vulns),
        "n_internal_in_window": int(ev.internal_times.size),
        "n_external_in_window": int(ev.external_times.size),
        "skipped_attack_rows": len(skipped), "rejected_vuln_rows": len(rejected),
        "yearly_counts": {str(k): v for k, v in ingest.yearly_counts(attacks).items()},
        "monthly_autocorrelation": autocorr,
        "seed": args.seed,
    }
    return write_summary(args, "ingest", payload)


# ---------------------------------------------------------------------------
# parser

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--params-file", help="JSON parameter file")
    common.add_argument("--events", help="event CSV (kind,time) in days")
    common.add_argument("--attacks", help="attack CSV export")
    common.add_argument("--vulns", help="vulnerability CSV export")
    common.add_argument("--mapping", help="JSON column mapping for --attacks/--vulns")
    common.add_argument("--cvss-min", type=float, default=5.0)
    common.add_argument("--t0", help="window origin (days or date)")
    common.add_argument("--s", help="fit/forecast start (days or date)")
    common.add_argument("--tau", help="window end (days or date)")
    common.add_argument("--seed", type=int)
    common.add_argument("--paths", type=int, default=1)
    common.add_argument("--grid-step", type=float)
    common.add_argument("--out", help=f"output directory (default ${OUT_ENV} or .)")
    common.add_argument("--format", choices=("json", "csv"), default="json")

    parser = argparse.ArgumentParser(
        prog="cyberhawkes",
        description="Two-phase Hawkes model with external excitation")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="thinning simulation")
    p.add_argument("--horizon", type=float, help="simulation end (days)")
    p.set_defaults(func=cmd_simulate, needs_params=True)

    p = sub.add_parser("expect", parents=[common], help="closed-form expectations")
    p.set_defaults(func=cmd_expect, needs_params=True)

    p = sub.add_parser("calibrate", parents=[common], help="fit the first phase")
    p.add_argument("--method", choices=calibration.METHODS, default="likelihood")
    p.add_argument("--strategy", choices=calibration.STRATEGIES, default="full5")
    p.add_argument("--delta-step", type=float, default=calibration.DEFAULT_DELTA_STEP)
    p.add_argument("--delta-sweep", help="comma-separated interval lengths")
    p.add_argument("--rho-mbar", type=float, help="injected rho*mbar product")
    p.add_argument("--no-external", action="store_true",
                   help="fit without external excitation")
    p.add_argument("--exposure", choices=calibration.EXPOSURES, default="window")
    p.add_argument("--max-iter", type=int, default=2000)
    p.add_argument("--restarts", type=int, default=3)
    p.set_defaults(func=cmd_calibrate, needs_params=False)

    p = sub.add_parser("validate", parents=[common], help="KS test and predictive band")
    p.add_argument("--holdout-end", type=float, help="end of held-out window (days)")
    p.set_defaults(func=cmd_validate, needs_params=True)

    p = sub.add_parser("decompose", parents=[common], help="intensity shares")
    p.set_defaults(func=cmd_decompose, needs_params=True)

    p = sub.add_parser("react", parents=[common], help="reaction-parameter selection")
    p.add_argument("--capacity", type=float)
    p.add_argument("--ell", type=float)
    p.set_defaults(func=cmd_react, needs_params=True)

    p = sub.add_parser("ingest", parents=[common], help="CSV exports to event stream")
    p.set_defaults(func=cmd_ingest, needs_params=False)
    return parser


def _fail(code: int, kind: str, message: str) -> int:
    err = {"error": kind, "message": message, "exit_code": code}
    print(json.dumps(err, sort_keys=True), file=sys.stderr)
    return code


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.needs_params and not args.params_file:
        parser.print_usage(sys.stderr)
        return _fail(EXIT_USAGE, "UsageError", f"'{args.command}' needs --params-file")
    if args.paths < 1:
        return _fail(EXIT_USAGE, "UsageError", "--paths must be >= 1")
    try:
        path = args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        return _fail(EXIT_USAGE, "UsageError", str(exc))
    except CyberHawkesError as exc:
        return _fail(exc.exit_code, type(exc).__name__, str(exc))
    except (OSError, UnicodeDecodeError) as exc:
        return _fail(EXIT_DATA, type(exc).__name__, str(exc))
    print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
