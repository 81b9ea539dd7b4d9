"""Command line entry point: ``gridshock <command>``."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .diffusion import build_social_network
from .engine import Aggregate, RunResult, Scenario, default_workers, run_monte_carlo, run_replication, study_area
from .errors import GridshockError
from .grid import CLASS_NAMES, TIER_NAMES, build_synthetic_grid
from .report import export, group_hardship_probability, sweep, write_csv, write_json
from .rng import replication_seeds, streams

HOUSEHOLD_COLUMNS = ("tract", "pole", "income", "racial_minority", "elderly", "child_under_10", "mobility_issue",
                     "medical_condition", "chronic_disease", "owner", "vehicle_missing", "social_capital",
                     "flood_zone", "need", "self_efficacy", "experience", "informed", "inform_day", "prepared",
                     "preparedness_level", "substitute", "expectation_days", "tolerance_days", "outage_start_h",
                     "outage_end_h", "hardship")


def _reps(value: str):
    if value == "auto":
        return value
    try:
        k = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError("--reps must be 'auto' or a positive integer") from None
    if k < 1:
        raise argparse.ArgumentTypeError("--reps must be positive")
    return k


def _load_scenario(path, seed=None) -> Scenario:
    sc = Scenario.load(path)
    return sc.replace(seed=seed) if seed is not None else sc


def cmd_generate_network(args) -> int:
    sc = _load_scenario(args.config, args.seed)
    tracts, _ = study_area(sc.tracts_file, sc.marginals_file)
    st = streams(replication_seeds(sc.seed, 1)[0])
    grid = build_synthetic_grid(tracts, sc.grid, st["grid"])
    grid.save(args.out)
    if args.edges:
        net = build_social_network(sc.network_kind, sc.network, sc.n_households, st["network"]) \
            if sc.network_kind != "distance" else run_replication(sc, replication_seeds(sc.seed, 1)[0],
                                                                   keep_detail=True).detail["network"]
        net.export_edge_list(args.edges)
    print(json.dumps(grid.counts()))
    return 0


def _household_rows(r: RunResult, tract_ids):
    h = r.households
    rows = []
    for i in range(r.n_households):
        row = [i]
        for c in HOUSEHOLD_COLUMNS:
            v = h[c][i]
            row.append(tract_ids[int(v)] if c == "tract" else (v.item() if hasattr(v, "item") else v))
        rows.append(row)
    return rows


def save_replications(agg: Aggregate, path) -> None:
    cols = {c: np.stack([np.asarray(r.households[c]) for r in agg.runs]) for c in HOUSEHOLD_COLUMNS}
    np.savez_compressed(path, seeds=np.array([r.seed for r in agg.runs]),
                        daily=np.vstack([r.daily_hardship for r in agg.runs]), **cols)


def load_replications(path) -> list[RunResult]:
    z = np.load(path)
    runs = []
    for k, seed in enumerate(z["seeds"].tolist()):
        hh = {c: z[c][k] for c in HOUSEHOLD_COLUMNS}
        runs.append(RunResult(seed, z["daily"][k], hh, {}, 0, 0.0, 0.0, 0.0, 0.0))
    return runs


def write_run_outputs(agg: Aggregate, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    export(agg, "json", out / "aggregate.json")
    export(agg, "csv", out / "daily_hardship.csv")
    save_replications(agg, out / "replications.npz")

    dmg_cols = list(agg.runs[0].damage_counts)
    write_csv(out / "damage.csv", ["replication", "seed"] + dmg_cols + ["full_restoration_day"],
              [[k, r.seed] + [r.damage_counts[c] for c in dmg_cols] + [r.full_restoration_day]
               for k, r in enumerate(agg.runs)])

    # full detail for the first replication
    first = run_replication(agg.scenario, agg.runs[0].seed, keep_detail=True)
    d = first.detail
    write_csv(out / "households.csv", ["household"] + list(HOUSEHOLD_COLUMNS), _household_rows(first, d["tract_ids"]))
    sched = d["schedule"]
    write_csv(out / "schedule.csv", ["component_id", "class", "start_h", "end_h", "teams"], sched.rows(d["grid"]))
    grid, dmg = d["grid"], d["damage"]
    ids = grid.comp_ids
    rows = []
    for c in np.flatnonzero(dmg.failed).tolist():
        k = int(grid.comp_class[c])
        tier = TIER_NAMES[int(dmg.tier[c])] if CLASS_NAMES[k] == "substation" else "failed"
        rows.append([ids[c], CLASS_NAMES[k], grid.tract_ids[int(grid.comp_tract[c])], tier, float(dmg.fail_time_h[c])])
    write_csv(out / "damaged_components.csv", ["component_id", "class", "tract", "state", "fail_time_h"], rows)


def cmd_run(args) -> int:
    sc = _load_scenario(args.scenario, args.seed)
    workers = args.workers if args.workers is not None else default_workers()
    fixed = None if args.reps == "auto" else args.reps
    agg = run_monte_carlo(sc, confidence=args.confidence, rel_err=args.rel_err, min_rep=args.min_rep,
                          max_rep=args.max_rep, workers=workers, fixed_reps=fixed)
    out = Path(args.out)
    write_run_outputs(agg, out)
    summary = {"replications": agg.n_replications, "converged": agg.converged,
               "peak_hardship": agg.mean_ci(agg.metric_values("peak"))["mean"], "out": str(out)}
    if not agg.converged:
        summary["warning"] = "confidence target not reached by max_rep"
        print("warning: Monte Carlo did not converge", file=sys.stderr)
    print(json.dumps(summary))
    return 0


def cmd_sweep(args) -> int:
    with open(args.grid) as fh:
        spec = json.load(fh)
    workers = args.workers if args.workers is not None else default_workers()
    reps = args.reps if args.reps is not None else spec.get("reps", "auto")
    table, aggs = sweep(spec, reps=reps, workers=workers, min_rep=args.min_rep, max_rep=args.max_rep)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    export(table, "csv", out / "sweep.csv")
    export(table, "json", out / "sweep.json")
    for name, agg in aggs.items():
        export(agg, "csv", out / f"daily_{_slug(name)}.csv")
    print(json.dumps({"cells": len(table.rows), "out": str(out)}))
    return 0


def _slug(name: str) -> str:
    return "".join(ch if ch.isalnum() or ch in "-_." else "_" for ch in name)


def cmd_report(args) -> int:
    src = Path(args.inp)
    runs = load_replications(src / "replications.npz")
    out = {}
    for g in args.group:
        gs = group_hardship_probability(runs, g)
        export(gs, "csv", src / f"groups_{g}.csv")
        out[g] = gs.to_dict()
    write_json(src / "groups.json", out)
    print(json.dumps(out, indent=2, default=float))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gridshock", description="Hurricane power-outage hardship simulator")
    p.add_argument("--version", action="version", version=f"gridshock {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate-network", help="build the synthetic power grid")
    g.add_argument("--config", required=True)
    g.add_argument("--out", required=True)
    g.add_argument("--seed", type=int)
    g.add_argument("--edges", help="also write the household social network edge list here")
    g.set_defaults(func=cmd_generate_network)

    def mc_opts(q):
        q.add_argument("--workers", type=int)
        q.add_argument("--min-rep", type=int, default=10)
        q.add_argument("--max-rep", type=int, default=1000)

    r = sub.add_parser("run", help="Monte Carlo run of one scenario")
    r.add_argument("--scenario", required=True)
    r.add_argument("--seed", type=int)
    r.add_argument("--reps", type=_reps, default="auto")
    r.add_argument("--out", required=True)
    r.add_argument("--confidence", type=float, default=0.95)
    r.add_argument("--rel-err", type=float, default=0.05)
    mc_opts(r)
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", help="run a grid of scenarios")
    s.add_argument("--grid", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--reps", type=_reps)
    mc_opts(s)
    s.set_defaults(func=cmd_sweep)

    rp = sub.add_parser("report", help="group hardship probabilities from a run directory")
    rp.add_argument("--in", dest="inp", required=True)
    rp.add_argument("--group", action="append", default=None)
    rp.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "group", "x") is None:
        args.group = ["racial_minority"]
    try:
        return args.func(args)
    except (GridshockError, OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
