"""Equity metrics, scenario comparison and file export."""
from __future__ import annotations

import copy
import csv
import itertools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .engine import Aggregate, Scenario, ci_half_width, run_monte_carlo
from .errors import ConfigError, MismatchedPopulation, UndefinedGroup, UnknownBaseline

FORMATS = ("csv", "json")


def fmt(v) -> str:
    """Cell text: 15 significant digits for floats."""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".15g")
    if v is None:
        return ""
    return str(v)


@dataclass
class GroupStats:
    attribute: str
    groups: dict  # value -> {"mean", "ci_low", "ci_high", "n_reps"}
    undefined_reps: dict = field(default_factory=dict)  # value -> replications where the group was empty
    confidence: float = 0.95

    def probability(self, value) -> float:
        return self.groups[value]["mean"]

    @property
    def gap(self) -> float | None:
        """``P(group 1) - P(group 0)`` for a binary attribute."""
        if set(self.groups) != {0, 1}:
            return None
        return self.groups[1]["mean"] - self.groups[0]["mean"]

    @property
    def relative_gap(self) -> float | None:
        g = self.gap
        if g is None:
            return None
        base = self.groups[0]["mean"]
        return g / base if base > 0 else math.nan

    def to_dict(self) -> dict:
        return {"attribute": self.attribute, "confidence": self.confidence,
                "groups": {str(k): v for k, v in self.groups.items()},
                "undefined_reps": {str(k): v for k, v in self.undefined_reps.items()},
                "gap": self.gap, "relative_gap": self.relative_gap}


def _runs(source):
    return source.runs if isinstance(source, Aggregate) else list(source)


def group_probabilities(households: dict, attribute: str, values=None) -> dict:
    """Per group: share of its households that were ever in hardship (nan if empty)."""
    if attribute not in households:
        raise ConfigError(f"unknown household attribute {attribute!r}")
    a = np.asarray(households[attribute])
    flag = np.asarray(households["hardship"], bool)
    values = sorted(np.unique(a).tolist()) if values is None else values
    out = {}
    for v in values:
        m = a == v
        out[v] = float(flag[m].mean()) if m.any() else math.nan
    return out


def group_hardship_probability(aggregate, attribute: str, confidence: float | None = None) -> GroupStats:
    """Probability of ever being in hardship, per value of ``attribute``,
    computed per replication and summarized across replications."""
    runs = _runs(aggregate)
    if not runs:
        raise ConfigError("no replications")
    conf = confidence or getattr(aggregate, "confidence", 0.95)
    a0 = np.asarray(runs[0].households.get(attribute, []))
    if attribute not in runs[0].households:
        raise ConfigError(f"unknown household attribute {attribute!r}")
    binary = a0.dtype == bool or set(np.unique(np.concatenate(
        [np.asarray(r.households[attribute]).ravel() for r in runs])).tolist()) <= {0, 1}
    if binary:
        values = [0, 1]
    else:
        values = sorted(set().union(*(np.unique(r.households[attribute]).tolist() for r in runs)))
    per = {v: [] for v in values}
    undefined = {}
    for k, r in enumerate(runs):
        probs = group_probabilities(r.households, attribute, values)
        for v, p in probs.items():
            if math.isnan(p):
                undefined.setdefault(v, []).append(k)
            else:
                per[v].append(p)
    empty = [v for v in values if not per[v]]
    if empty:
        raise UndefinedGroup(f"{attribute}: group(s) {empty} empty in every replication")
    groups = {}
    for v, ps in per.items():
        m = float(np.mean(ps))
        hw = ci_half_width(ps, conf) if len(ps) > 1 else math.nan
        groups[v] = {"mean": m, "ci_low": m - hw, "ci_high": m + hw, "n_reps": len(ps)}
    return GroupStats(attribute, groups, undefined, conf)


@dataclass
class SweepTable:
    columns: list
    rows: list = field(default_factory=list)  # list of dicts

    def add(self, row: dict) -> None:
        missing = [c for c in self.columns if c not in row]
        if missing:
            raise ConfigError(f"row lacks columns {missing}")
        self.rows.append({c: row[c] for c in self.columns})

    def column(self, name: str) -> list:
        return [r[name] for r in self.rows]

    def to_dict(self) -> dict:
        return {"columns": list(self.columns), "rows": [dict(r) for r in self.rows]}


def _summary(agg: Aggregate, groups) -> dict:
    out = {"peak_hardship": float(agg.metric_values("peak").mean()),
           "total_hardship_days": float(agg.metric_values("total").mean()),
           "full_restoration_day": float(np.mean([r.full_restoration_day for r in agg.runs])),
           "hardship_probability": float(np.mean([np.mean(r.households["hardship"]) for r in agg.runs]))}
    for g in groups:
        gs = group_hardship_probability(agg, g)
        for v in (0, 1):
            out[f"p_{g}_{v}"] = gs.groups[v]["mean"]
    return out


def compare_scenarios(aggregates, baseline: str, groups=("racial_minority",)) -> SweepTable:
    """Metrics and deltas against ``baseline`` for each named aggregate."""
    if not isinstance(aggregates, dict):
        aggregates = {a.scenario.name: a for a in aggregates}
    if baseline not in aggregates:
        raise UnknownBaseline(f"no aggregate named {baseline!r}")
    fp = aggregates[baseline].population_fingerprint
    bad = [n for n, a in aggregates.items() if a.population_fingerprint != fp]
    if bad:
        raise MismatchedPopulation(f"population spec differs from {baseline!r}: {bad}")
    summaries = {n: _summary(a, groups) for n, a in aggregates.items()}
    metrics = list(summaries[baseline])
    cols = ["scenario", "n_replications"] + [c for m in metrics for c in (m, f"delta_{m}")]
    table = SweepTable(cols)
    base = summaries[baseline]
    for name, s in summaries.items():
        row = {"scenario": name, "n_replications": aggregates[name].n_replications}
        for m in metrics:
            row[m] = s[m]
            row[f"delta_{m}"] = s[m] - base[m]
        table.add(row)
    return table


def _csv_rows_for(obj) -> tuple[list, list]:
    if isinstance(obj, SweepTable):
        return obj.columns, [[r[c] for c in obj.columns] for r in obj.rows]
    if isinstance(obj, Aggregate):
        cols = ["day", "mean", "ci_low", "ci_high", "q25", "q75"]
        return cols, [[r[c] for c in cols] for r in obj.daily_table()]
    if isinstance(obj, GroupStats):
        cols = ["attribute", "group", "mean", "ci_low", "ci_high", "n_reps"]
        return cols, [[obj.attribute, k] + [v[c] for c in cols[2:]] for k, v in obj.groups.items()]
    raise ConfigError(f"cannot export {type(obj).__name__} as csv")


def _rounded(v):
    if isinstance(v, dict):
        return {str(k): _rounded(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_rounded(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        x = float(v)
        if not math.isfinite(x):
            return None if math.isnan(x) else ("inf" if x > 0 else "-inf")
        return float(format(x, ".15g"))
    return v


def write_csv(path, columns, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([fmt(v) for v in r])


def write_json(path, data) -> None:
    with open(path, "w") as fh:
        json.dump(_rounded(data), fh, indent=2, sort_keys=False, allow_nan=False)
        fh.write("\n")


def export(obj, format: str, path) -> Path:
    """Write an Aggregate, SweepTable or GroupStats as csv or json."""
    if format not in FORMATS:
        raise ConfigError(f"unknown export format {format!r}; expected one of {FORMATS}")
    path = Path(path)
    if format == "csv":
        cols, rows = _csv_rows_for(obj)
        write_csv(path, cols, rows)
    else:
        write_json(path, obj.to_dict())
    return path


def read_csv(path) -> tuple[list, list]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


# ---------------------------------------------------------------------------
# sweeps

def _set_path(d: dict, dotted: str, value) -> None:
    keys = dotted.split(".")
    for k in keys[:-1]:
        d = d.setdefault(k, {})
    d[keys[-1]] = value


def expand_grid(spec: dict) -> list[tuple[dict, Scenario]]:
    """Cartesian product of ``axes`` applied to ``base``; keys may be dotted paths."""
    base = spec.get("base", {})
    axes = spec.get("axes", {})
    if not isinstance(axes, dict):
        raise ConfigError("sweep axes must be a mapping of parameter -> values")
    names = list(axes)
    cells = []
    for combo in itertools.product(*(axes[n] for n in names)):
        d = copy.deepcopy(base)
        cell = dict(zip(names, combo))
        for k, v in cell.items():
            _set_path(d, k, v)
        d["name"] = ",".join(f"{k}={v}" for k, v in cell.items()) or d.get("name", "baseline")
        cells.append((cell, Scenario.from_dict(d)))
    return cells


SWEEP_METRICS = ("n_replications", "converged", "peak_hardship", "peak_hardship_ci_low", "peak_hardship_ci_high",
                 "total_hardship_days", "hardship_probability", "full_restoration_day", "adoption_fraction",
                 "p_racial_minority_0", "p_racial_minority_1")


def sweep(spec: dict, reps="auto", workers: int | None = None, **mc) -> tuple[SweepTable, dict]:
    cells = expand_grid(spec)
    axes = list(spec.get("axes", {}))
    table = SweepTable(["scenario"] + axes + list(SWEEP_METRICS))
    aggs = {}
    for cell, sc in cells:
        fixed = None if reps == "auto" else int(reps)
        agg = run_monte_carlo(sc, workers=workers, fixed_reps=fixed, **mc)
        aggs[sc.name] = agg
        peak = agg.mean_ci(agg.metric_values("peak"))
        gs = group_hardship_probability(agg, "racial_minority")
        row = {"scenario": sc.name, **cell, "n_replications": agg.n_replications, "converged": agg.converged,
               "peak_hardship": peak["mean"], "peak_hardship_ci_low": peak["ci_low"],
               "peak_hardship_ci_high": peak["ci_high"],
               "total_hardship_days": float(agg.metric_values("total").mean()),
               "hardship_probability": float(np.mean([np.mean(r.households["hardship"]) for r in agg.runs])),
               "full_restoration_day": float(np.mean([r.full_restoration_day for r in agg.runs])),
               "adoption_fraction": float(np.mean([r.adoption_fraction for r in agg.runs])),
               "p_racial_minority_0": gs.groups[0]["mean"], "p_racial_minority_1": gs.groups[1]["mean"]}
        table.add(row)
    return table, aggs
