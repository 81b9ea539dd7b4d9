import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gridshock.engine import Aggregate, RunResult, Scenario
from gridshock.errors import ConfigError, MismatchedPopulation, UndefinedGroup, UnknownBaseline
from gridshock.report import (SweepTable, compare_scenarios, expand_grid, export, group_hardship_probability,
                              group_probabilities, read_csv)


def _run(minority, hardship, peak=0.0, seed=0, restored=10):
    hh = {"racial_minority": np.asarray(minority, np.int8), "hardship": np.asarray(hardship, bool),
          "elderly": np.zeros(len(minority), np.int8)}
    return RunResult(seed=seed, daily_hardship=np.array([0.0, peak, peak / 2]), households=hh,
                     damage_counts={"pole": 3}, full_restoration_day=restored, landfall_h=24.0,
                     restoration_start_h=48.0, adoption_fraction=0.5, informed_fraction=0.9)


def _agg(runs, name="baseline", **kw):
    return Aggregate(Scenario(name=name, **kw), runs, True, 0.95, 0.05)


def test_full_gap():
    gs = group_hardship_probability([_run([1, 1, 0, 0], [1, 1, 0, 0])], "racial_minority")
    assert gs.gap == 1.0
    assert gs.groups[1]["mean"] == 1.0 and gs.groups[0]["mean"] == 0.0


def test_symmetric_split():
    gs = group_hardship_probability([_run([1, 1, 0, 0], [1, 0, 1, 0])], "racial_minority")
    assert gs.groups[0]["mean"] == 0.5 and gs.groups[1]["mean"] == 0.5 and gs.gap == 0.0


def test_empty_group_undefined():
    with pytest.raises(UndefinedGroup):
        group_hardship_probability([_run([0, 0, 0], [1, 0, 0])], "racial_minority")
    # empty in one replication only: flagged, not fatal
    gs = group_hardship_probability([_run([0, 0], [1, 0]), _run([1, 0], [1, 1], seed=1)], "racial_minority")
    assert gs.undefined_reps == {1: [0]}
    assert gs.groups[1]["n_reps"] == 1 and gs.groups[0]["n_reps"] == 2
    with pytest.raises(ConfigError):
        group_hardship_probability([_run([0, 1], [1, 0])], "height")


@given(st.lists(st.tuples(st.integers(0, 3), st.booleans()), min_size=1, max_size=60))
def test_weighted_identity(rows):
    attr = np.array([a for a, _ in rows])
    flag = np.array([h for _, h in rows])
    probs = group_probabilities({"income": attr, "hardship": flag}, "income")
    sizes = {v: int((attr == v).sum()) for v in probs}
    total = sum(probs[v] * sizes[v] for v in probs) / len(attr)
    assert total == pytest.approx(flag.mean(), abs=1e-12)


def test_compare_self_zero_deltas():
    agg = _agg([_run([1, 0], [1, 0], peak=0.3), _run([1, 0], [0, 0], peak=0.2, seed=1)])
    t = compare_scenarios([agg], "baseline")
    row = t.rows[0]
    assert all(row[c] == 0 for c in t.columns if c.startswith("delta_"))


def test_compare_delta_value():
    a = _agg([_run([1, 0], [1, 0], peak=0.54)], name="component")
    b = _agg([_run([1, 0], [1, 0], peak=0.47)], name="svi")
    t = compare_scenarios({"component": a, "svi": b}, "component")
    svi = next(r for r in t.rows if r["scenario"] == "svi")
    assert svi["delta_peak_hardship"] == pytest.approx(-0.07, abs=1e-12)


def test_compare_errors():
    a = _agg([_run([1, 0], [1, 0])], name="a")
    with pytest.raises(UnknownBaseline):
        compare_scenarios([a], "b")
    other = _agg([_run([1, 0], [1, 0])], name="b", n_households=99)
    with pytest.raises(MismatchedPopulation):
        compare_scenarios([a, other], "a")


def test_export_round_trip(tmp_path):
    t = SweepTable(["scenario", "peak"])
    t.add({"scenario": "x", "peak": 1 / 3})
    t.add({"scenario": "y", "peak": 0.1})
    export(t, "csv", tmp_path / "t.csv")
    cols, rows = read_csv(tmp_path / "t.csv")
    assert cols == t.columns
    assert [[r[0], float(r[1])] for r in rows] == [["x", pytest.approx(1 / 3, rel=1e-14)], ["y", 0.1]]
    export(t, "json", tmp_path / "t.json")
    assert json.loads((tmp_path / "t.json").read_text()) == {
        "columns": ["scenario", "peak"], "rows": [{"scenario": "x", "peak": 0.333333333333333},
                                                  {"scenario": "y", "peak": 0.1}]}


def test_export_aggregate_and_groups(tmp_path):
    agg = _agg([_run([1, 0], [1, 0], peak=0.3), _run([1, 0], [0, 0], peak=0.2, seed=1)])
    export(agg, "csv", tmp_path / "daily.csv")
    cols, rows = read_csv(tmp_path / "daily.csv")
    assert cols == ["day", "mean", "ci_low", "ci_high", "q25", "q75"]
    assert float(rows[1][1]) == pytest.approx(0.25)
    export(agg, "json", tmp_path / "agg.json")
    assert json.loads((tmp_path / "agg.json").read_text())["n_replications"] == 2
    export(group_hardship_probability(agg, "racial_minority"), "csv", tmp_path / "g.csv")
    row = read_csv(tmp_path / "g.csv")[1][1]
    assert row[:3] == ["racial_minority", "1", "0.5"] and row[5] == "2"
    # two reps {1, 0}: half-width t_{0.975,1} * s / sqrt(2), with t_{0.975,1} = tan(0.475 pi)
    hw = math.tan(0.475 * math.pi) * math.sqrt(0.5) / math.sqrt(2)
    assert float(row[3]) == pytest.approx(0.5 - hw, abs=1e-9)
    assert float(row[4]) == pytest.approx(0.5 + hw, abs=1e-9)


def test_unknown_format_and_empty_table(tmp_path):
    t = SweepTable(["a", "b"])
    with pytest.raises(ConfigError):
        export(t, "xlsx", tmp_path / "t.xlsx")
    export(t, "csv", tmp_path / "t.csv")
    assert (tmp_path / "t.csv").read_text() == "a,b\n"
    with pytest.raises(ConfigError):
        t.add({"a": 1})


def test_reexport_byte_identical(tmp_path):
    agg = _agg([_run([1, 0, 1], [1, 0, 0], peak=0.3), _run([1, 0, 0], [0, 1, 0], peak=0.2, seed=1)])
    for fmt_ in ("csv", "json"):
        export(agg, fmt_, tmp_path / f"a.{fmt_}")
        export(agg, fmt_, tmp_path / f"b.{fmt_}")
        assert (tmp_path / f"a.{fmt_}").read_bytes() == (tmp_path / f"b.{fmt_}").read_bytes()


def test_expand_grid():
    cells = expand_grid({"base": {"n_households": 100},
                         "axes": {"strategy": ["component", "svi"], "hurricane.category": [3, 4]}})
    assert len(cells) == 4
    names = [sc.name for _, sc in cells]
    assert names[0] == "strategy=component,hurricane.category=3"
    assert {(sc.strategy, sc.hurricane.category) for _, sc in cells} == {
        ("component", 3), ("component", 4), ("svi", 3), ("svi", 4)}
    with pytest.raises(ConfigError):
        expand_grid({"axes": [1, 2]})
