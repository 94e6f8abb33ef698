"""Command-line entry point: ``fleetq <command> [flags]``.

Every command prints one JSON document (``{"manifest": ..., "result": ...}``)
on stdout; tables meant for plotting are written as CSV files into the output
directory (``--out-dir``, else ``$FLEETQ_OUTPUT_DIR``, else the current
directory).  Diagnostics go to stderr.

Exit codes: 0 success, 2 invalid arguments, 3 missing/unreadable input,
4 infeasible or unstable fleet configuration.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from pathlib import Path
from typing import Any, Callable, Optional, Sequence

from . import __version__
from . import finance as fin
from . import mobility_data as mob
from .errors import (
    FleetqError,
    InfeasibleError,
    InvalidInputError,
    TripFormatError,
    UnstableRegimeError,
)
from .prob_core import (
    FleetScenario,
    QosTarget,
    TAILS,
    min_fleet_spontaneous,
    normal_rule_of_thumb,
)
from .queue_bound import bound_curves, lemma_params, min_fleet_planned, waiting_bound
from .simulator import SimConfig, SimScenario, replicate_seed, simulate, sweep_fleet

EXIT_USAGE = 2
EXIT_INPUT = 3
EXIT_INFEASIBLE = 4

# "within k days" means served after at most k extra days
SWEEP_CONVENTION = "fraction of requests served more than k extra days after the request day"


class UsageError(Exception):
    pass


# --- argument helpers -------------------------------------------------------


def int_range(text: str) -> list[int]:
    """Parse ``3``, ``1,2,5``, ``1..6`` or ``10:100:10`` (start:stop:step, inclusive)."""
    out: list[int] = []
    for part in text.split(","):
        part = part.strip()
        try:
            if ".." in part:
                a, b = part.split("..")
                out.extend(range(int(a), int(b) + 1))
            elif ":" in part:
                bits = [int(x) for x in part.split(":")]
                if len(bits) != 3 or bits[2] <= 0:
                    raise ValueError
                out.extend(range(bits[0], bits[1] + 1, bits[2]))
            else:
                out.append(int(part))
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad integer list {text!r}") from None
    if not out:
        raise argparse.ArgumentTypeError(f"empty integer list {text!r}")
    return out


def float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad number list {text!r}") from None


def seed_type(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return v


class Parser(argparse.ArgumentParser):
    def error(self, message: str):  # usage errors always exit 2
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _check_p(p: float) -> None:
    if not (0.0 < p < 1.0) or not math.isfinite(p):
        raise UsageError("p must be in (0,1)")


def _check_eps(eps: float) -> None:
    if not (0.0 < eps < 1.0):
        raise UsageError("epsilon must be in (0,1)")


def _check_ks(ks: Sequence[int], minimum: int = 1) -> None:
    if any(k < minimum for k in ks):
        raise UsageError(f"k must be >= {minimum}")


def output_dir(args) -> Path:
    d = Path(args.out_dir or os.environ.get("FLEETQ_OUTPUT_DIR") or ".")
    d.mkdir(parents=True, exist_ok=True)
    return d


def write_csv(path: Path, header: Sequence[str], rows) -> str:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    return str(path)


def _fmt(x: float) -> str:
    return repr(float(x))


def manifest(command: str, params: dict, seeds: Optional[dict] = None, outputs: Sequence[str] = ()) -> dict:
    return {
        "command": command,
        "version": __version__,
        "params": params,
        "seeds": seeds or {},
        "outputs": list(outputs),
    }


def _params(args) -> dict:
    skip = {"func", "command"}
    return {k: v for k, v in vars(args).items() if k not in skip}


def _write_manifest(out: Path, man: dict) -> None:
    path = out / f"{man['command']}.manifest.json"
    man["outputs"].append(str(path))
    path.write_text(json.dumps(man, indent=2, sort_keys=True) + "\n", encoding="utf-8")


# --- commands ---------------------------------------------------------------


def cmd_size_spontaneous(args) -> dict:
    _check_p(args.p)
    _check_eps(args.epsilon)
    sc = FleetScenario(args.n, args.p)
    m = min_fleet_spontaneous(sc, QosTarget(args.epsilon), args.method)
    tail = 0.0 if m >= args.n else TAILS[args.method](sc.with_fleet(m))
    return {
        "manifest": manifest("size-spontaneous", _params(args)),
        "result": {
            "M": m,
            "ratio": m / args.n,
            "tail_at_M": tail,
            "method": args.method,
            "rule_of_thumb_ok": normal_rule_of_thumb(sc),
        },
    }


def cmd_size_planned(args) -> dict:
    _check_p(args.p)
    _check_eps(args.epsilon)
    _check_ks([args.k])
    sc = FleetScenario(args.n, args.p)
    m = min_fleet_planned(sc, QosTarget(args.epsilon, args.k))
    lp = lemma_params(sc.with_fleet(m))
    return {
        "manifest": manifest("size-planned", _params(args)),
        "result": {
            "M": m,
            "ratio": m / args.n,
            "bound_at_M": waiting_bound(sc.with_fleet(m), args.k),
            "mu": lp.mu,
            "sigma2": lp.sigma2,
            "alpha": lp.alpha,
            "k": args.k,
        },
    }


def cmd_bound_curve(args) -> dict:
    _check_ks(args.k)
    if not 0 <= args.m <= args.n:
        raise UsageError("m must be in [0, n]")
    p_max = args.p_max if args.p_max is not None else min(0.999, 1.1 * args.m / args.n)
    if not (0 < args.p_min < p_max < 1):
        raise UsageError("need 0 < p-min < p-max < 1")
    if args.points < 2:
        raise UsageError("points must be >= 2")
    step = (p_max - args.p_min) / (args.points - 1)
    grid = [args.p_min + i * step for i in range(args.points)]
    curves = bound_curves(args.n, args.m, args.k, grid)
    out = output_dir(args)
    rows = [
        (_fmt(pt.p), _fmt(pt.bound), c.k_extra_days, int(pt.saturated), int(pt.underflow))
        for c in curves for pt in c.points
    ]
    path = write_csv(out / args.output, ["p", "bound", "k", "saturated", "underflow"], rows)
    man = manifest("bound-curve", _params(args), outputs=[path])
    _write_manifest(out, man)
    summary = []
    for c in curves:
        below = [pt.p for pt in c.points if pt.bound < 0.05]
        summary.append({
            "k": c.k_extra_days,
            "points": len(c.points),
            "max_p_with_bound_below_0.05": max(below) if below else None,
        })
    return {"manifest": man, "result": {"n": args.n, "m": args.m, "curves": summary}}


def _check_p_sim(p: float) -> None:
    if not (0.0 <= p <= 1.0):
        raise UsageError("p must be in [0,1]")


def _sim_scenario(args, m: int) -> SimConfig:
    _check_p_sim(args.p)
    if args.days < 1 or args.replications < 1:
        raise UsageError("days and replications must be >= 1")
    return SimConfig(SimScenario(args.n, args.p, m), args.days, args.replications, args.seed)


def cmd_simulate(args) -> dict:
    if not 0 <= args.m <= args.n:
        raise UsageError("m must be in [0, n]")
    cfg = _sim_scenario(args, args.m)
    results = [simulate(cfg, i) for i in range(cfg.replications)]
    out = output_dir(args)
    traj_rows = [
        (i, day, a, x)
        for i, r in enumerate(results)
        for day, (a, x) in enumerate(zip(r.arrivals, r.queue_trajectory), start=1)
    ]
    outputs = [write_csv(out / args.output, ["replicate", "day", "arrivals", "outstanding"], traj_rows)]
    hist: dict[int, int] = {}
    for r in results:
        for w, c in r.wait_histogram.items():
            hist[w] = hist.get(w, 0) + c
    outputs.append(write_csv(out / args.histogram_output, ["extra_days", "requests"], sorted(hist.items())))
    seeds = {"base_seed": args.seed, "replicate_seeds": [replicate_seed(args.seed, i) for i in range(cfg.replications)]}
    man = manifest("simulate", _params(args), seeds, outputs)
    _write_manifest(out, man)
    served = sum(r.served_total for r in results)
    return {
        "manifest": man,
        "result": {
            "requests_total": sum(r.requests_total for r in results),
            "served_total": served,
            "residual_queue": sum(r.residual_queue for r in results),
            "wait_histogram": {str(k): v for k, v in sorted(hist.items())},
            "fraction_waiting_1plus_extra_days": (
                sum(r.waiting_at_least(1) for r in results) / served if served else 0.0
            ),
            "max_outstanding": max(max(r.queue_trajectory) for r in results),
        },
    }


def cmd_sweep(args) -> dict:
    _check_ks(args.k, minimum=0)
    if any(not 0 <= m <= args.n for m in args.m):
        raise UsageError("every m must be in [0, n]")
    cfg = _sim_scenario(args, args.m[0])
    rows = sweep_fleet(cfg, args.m, args.k, censor_conservative=args.censor_conservative)
    out = output_dir(args)
    path = write_csv(
        out / args.output,
        ["M", "k", "fraction", "replications", "ci_halfwidth"],
        [(r.m, r.k, _fmt(r.fraction), r.replications, _fmt(r.ci_halfwidth)) for r in rows],
    )
    man = manifest("sweep", _params(args), {"base_seed": args.seed}, [path])
    _write_manifest(out, man)
    return {
        "manifest": man,
        "result": {
            "convention": SWEEP_CONVENTION,
            "censor_conservative": args.censor_conservative,
            "rows": [
                {"M": r.m, "k": r.k, "fraction": r.fraction, "replications": r.replications,
                 "ci_halfwidth": r.ci_halfwidth}
                for r in rows
            ],
        },
    }


def _load_trips(path: str) -> mob.TripTable:
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(path)
    return mob.parse_trips(p)


def cmd_ingest(args) -> dict:
    table = _load_trips(args.input)
    days = mob.aggregate_days(table)
    return {
        "manifest": manifest("ingest", _params(args)),
        "result": {
            "records": len(table.records),
            "respondent_days": len(days),
            "driver_days": sum(1 for d in days.values() if d.car_trips),
            "rejects": [{"line": r.line, "reason": r.reason} for r in table.rejects],
        },
    }


def cmd_synthesize(args) -> dict:
    table = mob.synthesize_trips(population=args.population, seed=args.seed)
    out = output_dir(args)
    path = out / args.output
    with open(path, "w", newline="", encoding="utf-8") as fh:
        mob.write_trips(table, fh)
    man = manifest("synthesize", _params(args), {"seed": args.seed}, [str(path)])
    _write_manifest(out, man)
    return {"manifest": man, "result": {"records": len(table.records), "population_per_day": args.population}}


def cmd_stats(args) -> dict:
    table = _load_trips(args.input)
    ths = args.thresholds
    try:
        ex = mob.exceedance_table(table, ths)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    est = mob.estimate_p(table, args.p_threshold)
    prof = mob.usage_profiles(table, args.profile_threshold)
    out = output_dir(args)
    outputs = [
        write_csv(
            out / "exceedance.csv",
            ["day_of_week", *[f"gt_{t:g}km_pct" for t in ths], "respondent_days"],
            [(d.value, *(["" for _ in ths] if v is None else [_fmt(x) for x in v]), ex.counts[d])
             for d, v in ex.percent.items()],
        ),
        write_csv(out / "distance_hist.csv", ["km_from", "respondent_days"],
                  [(_fmt(k), v) for k, v in prof.distance_hist.items()]),
        write_csv(out / "hour_usage.csv", ["hour", "respondents"], list(enumerate(prof.hour_counts))),
        write_csv(out / "in_use_hist.csv", ["minutes_from", "respondents"],
                  [(_fmt(k), v) for k, v in prof.in_use_hist.items()]),
    ]
    man = manifest("stats", _params(args), outputs=outputs)
    _write_manifest(out, man)
    return {
        "manifest": man,
        "result": {
            "exceedance_pct": {
                d.value: (None if v is None else [int(math.floor(x + 0.5)) for x in v])
                for d, v in ex.percent.items()
            },
            "p_estimate": {
                "threshold_km": est.threshold_km,
                "pooled": est.pooled,
                "day_mean": est.day_mean,
                "respondent_days": est.respondent_days,
            },
        },
    }


def cmd_carbon(args) -> dict:
    table = _load_trips(args.input)
    return {
        "manifest": manifest("carbon", _params(args)),
        "result": {"threshold_km": args.threshold, "electric_share": mob.carbon_savings(table, args.threshold)},
    }


def _money(text: str) -> fin.Money:
    try:
        return fin.Money.of(text)
    except (ValueError, ArithmeticError, InvalidInputError):
        raise argparse.ArgumentTypeError(f"bad amount {text!r}") from None


def cmd_finance(args) -> dict:
    if args.preset:
        preset = fin.PRESETS.get(args.preset)
        if preset is None:
            raise UsageError(f"unknown preset {args.preset!r}")
        m, unit = preset["m"], preset["unit_price"]
    else:
        if args.m is None or args.unit_price is None:
            raise UsageError("give --preset or both --m and --unit-price")
        m, unit = args.m, args.unit_price
    m = args.m if args.m is not None else m
    n_ev = args.n_ev
    ev_price = args.ev_price
    sched = fin.depreciation_schedule(unit)
    report = fin.fleet_cost_report(m, sched, n_ev, ev_price, args.rounding)
    zero = fin.zero_residual_cost_pct(m, unit, n_ev, ev_price)
    result = {
        "schedule": {
            "start_value": float(sched.start_value.units),
            "yearly_values": [float(v.units) for v in sched.yearly_values],
            "yearly_depreciation": [float(v.units) for v in sched.yearly_depreciation],
            "total_depreciation": float(sched.total_depreciation.units),
            "residual_fraction": float(sched.residual_fraction),
            "gmfv_fraction": float(sched.gmfv_fraction),
        },
        "report": report.to_dict(),
        "zero_residual_pct": float(zero),
        "zero_residual_pct_display": fin.format_pct(zero, "half_up"),
    }
    if args.subsidies:
        result["subsidies"] = [
            {"country": r.country, "currency": r.subsidy.currency, "subsidy": float(r.subsidy.units),
             "vehicle_cost": float(r.vehicle_cost.units), "pct": float(r.pct),
             "pct_display": r.pct_display, "printed_pct": r.printed_pct}
            for r in fin.subsidy_table(fin.EV_SUBSIDIES_2013)
        ]
    doc = {"manifest": manifest("finance", _params(args)), "result": result}
    if args.format == "text":
        doc["text"] = report.to_text()
    return doc


# --- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = Parser(prog="fleetq", description=__doc__.split("\n\n")[0])
    ap.add_argument("--version", action="version", version=f"fleetq {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=Parser)

    def add(name: str, func: Callable, help: str) -> argparse.ArgumentParser:
        sp = sub.add_parser(name, help=help, description=help)
        sp.set_defaults(func=func)
        return sp

    def with_out(sp, default: Optional[str] = None):
        sp.add_argument("--out-dir", help="output directory (default $FLEETQ_OUTPUT_DIR or .)")
        if default:
            sp.add_argument("--output", default=default, help=f"CSV file name (default {default})")

    sp = add("size-spontaneous", cmd_size_spontaneous, "smallest fleet with P(demand > M) < epsilon")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--p", type=float, required=True)
    sp.add_argument("--epsilon", type=float, default=0.05)
    sp.add_argument("--method", choices=sorted(TAILS), default="exact")

    sp = add("size-planned", cmd_size_planned, "smallest fleet whose waiting bound for k extra days is < epsilon")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--p", type=float, required=True)
    sp.add_argument("--epsilon", type=float, default=0.05)
    sp.add_argument("--k", type=int, required=True)

    sp = add("bound-curve", cmd_bound_curve, "waiting bound versus p for one or more k")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--m", type=int, required=True)
    sp.add_argument("--k", type=int_range, default=[1, 2, 3, 4, 5, 6], help="e.g. 1..6 or 1,3")
    sp.add_argument("--p-min", type=float, default=0.001)
    sp.add_argument("--p-max", type=float, default=None, help="default 1.1 M/N")
    sp.add_argument("--points", type=int, default=200)
    with_out(sp, "bound_curve.csv")

    for name, func, help in (
        ("simulate", cmd_simulate, "Monte Carlo run of the daily queue"),
        ("sweep", cmd_sweep, "exceedance fraction over a range of fleet sizes"),
    ):
        sp = add(name, func, help)
        sp.add_argument("--n", type=int, required=True)
        sp.add_argument("--p", type=float, required=True)
        sp.add_argument("--days", type=int, default=365)
        sp.add_argument("--replications", type=int, default=100 if name == "sweep" else 1)
        sp.add_argument("--seed", type=seed_type, required=True)
        if name == "simulate":
            sp.add_argument("--m", type=int, required=True)
            with_out(sp, "trajectory.csv")
            sp.add_argument("--histogram-output", default="wait_histogram.csv")
        else:
            sp.add_argument("--m", type=int_range, required=True, help="e.g. 10:100:10")
            sp.add_argument("--k", type=int_range, default=[3])
            sp.add_argument("--censor-conservative", action="store_true",
                            help="count requests still queued at the horizon as failures")
            with_out(sp, "sweep.csv")

    sp = add("ingest", cmd_ingest, "validate a trip CSV and report rejects")
    sp.add_argument("--input", required=True)

    sp = add("synthesize", cmd_synthesize, "generate a trip CSV matching the survey exceedance table")
    sp.add_argument("--population", type=int, default=1000)
    sp.add_argument("--seed", type=seed_type, required=True)
    with_out(sp, "trips.csv")

    sp = add("stats", cmd_stats, "exceedance table, p estimate and usage histograms from a trip CSV")
    sp.add_argument("--input", required=True)
    sp.add_argument("--thresholds", type=float_list, default=[50.0, 75.0, 100.0])
    sp.add_argument("--p-threshold", type=float, default=100.0)
    sp.add_argument("--profile-threshold", type=float, default=75.0)
    with_out(sp)

    sp = add("carbon", cmd_carbon, "share of driven km an EV covers when long days use the shared car")
    sp.add_argument("--input", required=True)
    sp.add_argument("--threshold", type=float, default=100.0)

    sp = add("finance", cmd_finance, "fleet cost relative to EV revenue")
    sp.add_argument("--preset", choices=sorted(fin.PRESETS))
    sp.add_argument("--m", type=int)
    sp.add_argument("--unit-price", type=_money)
    sp.add_argument("--n-ev", type=int, default=fin.EV_FLEET)
    sp.add_argument("--ev-price", type=_money, default=fin.NISSAN_LEAF_IE)
    sp.add_argument("--rounding", choices=["truncate", "half_up"], default="truncate")
    sp.add_argument("--subsidies", action="store_true", help="include the per-country subsidy table")
    sp.add_argument("--format", choices=["json", "text"], default="json",
                    help="text also prints a readable report to stderr")
    return ap


def _json_default(o: Any):
    if isinstance(o, fin.Money):
        return {"amount": float(o.units), "currency": o.currency}
    if isinstance(o, Path):
        return str(o)
    raise TypeError(f"cannot serialize {type(o).__name__}")


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        doc = args.func(args)
    except (UsageError, InvalidInputError) as exc:
        print(f"fleetq {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FileNotFoundError, IsADirectoryError, PermissionError, TripFormatError) as exc:
        print(f"fleetq {args.command}: cannot read input: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (UnstableRegimeError, InfeasibleError) as exc:
        print(f"fleetq {args.command}: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except FleetqError as exc:
        print(f"fleetq {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if "text" in doc:
        print(doc["text"])
        return 0
    json.dump(doc, sys.stdout, indent=2, sort_keys=True, default=_json_default)
    sys.stdout.write("\n")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
