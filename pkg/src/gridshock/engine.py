"""Replication pipeline and Monte Carlo driver.

Clock: hours since the storm was first identified (day 0).  Landfall is at
hour ``24 f``; the wind field covers the following ``duration_h`` hours and
repairs begin once it has passed.  Hardship is read at the end of each day.
"""
from __future__ import annotations

import copy
import dataclasses
import hashlib
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import stats

from .county import harris_like_marginals, harris_like_tracts
from .diffusion import AdoptionParams, InfoParams, NetworkParams, build_social_network, run_forewarning
from .errors import ConfigError, EmptyPopulation
from .fragility import FragilityParams
from .grid import GridSpec, build_synthetic_grid, deenergize_times, energize_times, sample_damage
from .hazard import HurricaneSpec, WindField, load_tracts, load_wind_field, parametric_wind_series
from .population import BINARY_ATTRIBUTES, assign_poles, derive_traits, load_marginals, synthesize_households
from .regressions import CoefficientSet, tolerance
from .restoration import STRATEGIES, ResourceProfile, plan_priorities, sample_durations, schedule_repairs
from .rng import replication_seeds, streams

WORKERS_ENV = "GRIDSHOCK_WORKERS"
STOP_METRICS = ("peak", "total")


@dataclass(frozen=True)
class HurricaneConfig:
    category: int = 4
    duration_h: int = 24
    decay_length_km: float = 50.0
    noise_sigma: float = 0.0
    heading: str = "north"
    vmax: dict | None = None
    wind_file: str | None = None


def _build(cls, d: dict | None):
    """Dataclass from a dict, rejecting unknown keys."""
    d = dict(d or {})
    names = {f.name for f in dataclasses.fields(cls)}
    extra = sorted(set(d) - names)
    if extra:
        raise ConfigError(f"unknown {cls.__name__} keys: {extra}")
    for k, v in list(d.items()):
        if isinstance(v, list):
            d[k] = _tupled(v)
    return cls(**d)


def _tupled(v):
    return tuple(_tupled(x) for x in v) if isinstance(v, list) else v


@dataclass(frozen=True)
class Scenario:
    name: str = "baseline"
    hurricane: HurricaneConfig = field(default_factory=HurricaneConfig)
    forewarning_days: int = 9
    strategy: str = "component"
    resources: ResourceProfile = field(default_factory=ResourceProfile)
    network_kind: str = "scale_free"
    network: NetworkParams = field(default_factory=NetworkParams)
    info: InfoParams = field(default_factory=InfoParams)
    adoption: AdoptionParams = field(default_factory=AdoptionParams)
    coefficients: dict = field(default_factory=dict)  # overrides of the published values
    fragility: FragilityParams = field(default_factory=FragilityParams)
    damage_mode: str = "peak"
    grid: GridSpec = field(default_factory=GridSpec)
    n_households: int = 2500
    tracts_file: str | None = None
    marginals_file: str | None = None
    tolerance_sigma: float = 0.0
    horizon_days: int = 60
    stop_metric: str = "peak"
    seed: int = 0

    def __post_init__(self):
        if self.forewarning_days < 0:
            raise ConfigError("forewarning_days must be >= 0")
        if self.strategy not in STRATEGIES:
            raise ConfigError(f"unknown strategy {self.strategy!r}")
        if self.n_households <= 0:
            raise ConfigError("n_households must be positive")
        if self.horizon_days <= 0:
            raise ConfigError("horizon_days must be positive")
        if self.stop_metric not in STOP_METRICS:
            raise ConfigError(f"stop_metric must be one of {STOP_METRICS}")
        if self.tolerance_sigma < 0:
            raise ConfigError("tolerance_sigma must be >= 0")

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        d = copy.deepcopy(d)
        sub = {"hurricane": HurricaneConfig, "resources": ResourceProfile, "network": NetworkParams,
               "info": InfoParams, "adoption": AdoptionParams, "grid": GridSpec}
        for k, c in sub.items():
            if k in d:
                d[k] = _build(c, d[k])
        if "fragility" in d:
            d["fragility"] = FragilityParams.from_dict(d["fragility"])
        return _build(cls, d)

    @classmethod
    def load(cls, path) -> "Scenario":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        out = {}
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if isinstance(v, FragilityParams):
                v = v.to_dict()
            elif dataclasses.is_dataclass(v):
                v = dataclasses.asdict(v)
            out[f.name] = v
        return _jsonable(out)

    def replace(self, **kw) -> "Scenario":
        return dataclasses.replace(self, **kw)

    def population_fingerprint(self) -> str:
        """Hash of everything that shapes the synthetic population."""
        key = {"n_households": self.n_households, "tracts_file": self.tracts_file,
               "marginals_file": self.marginals_file, "seed": self.seed}
        return hashlib.sha256(json.dumps(key, sort_keys=True).encode()).hexdigest()[:16]


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return float(v)
    return v


@lru_cache(maxsize=8)
def study_area(tracts_file: str | None, marginals_file: str | None):
    tracts = load_tracts(tracts_file) if tracts_file else harris_like_tracts()
    marginals = load_marginals(marginals_file) if marginals_file else harris_like_marginals(tracts)
    return tuple(tracts), marginals


def wind_for(scenario: Scenario, tracts, rng) -> WindField:
    h = scenario.hurricane
    if h.wind_file:
        return load_wind_field(h.wind_file)
    kw = {"noise_sigma": h.noise_sigma}
    if h.vmax is not None:
        kw["vmax"] = {int(k): float(v) for k, v in h.vmax.items()}
    spec = HurricaneSpec.crossing(h.category, tracts, h.duration_h, h.decay_length_km, heading=h.heading, **kw)
    return parametric_wind_series(spec, tracts, rng)


@dataclass(eq=False)
class RunResult:
    seed: int
    daily_hardship: np.ndarray  # fraction per day
    households: dict  # column name -> array
    damage_counts: dict
    full_restoration_day: int
    landfall_h: float
    restoration_start_h: float
    adoption_fraction: float
    informed_fraction: float
    detail: dict | None = None  # grid / damage / schedule, only on request

    @property
    def n_households(self) -> int:
        return len(self.households["hardship"])

    @property
    def peak_hardship(self) -> float:
        return float(self.daily_hardship.max()) if len(self.daily_hardship) else 0.0

    @property
    def total_hardship_days(self) -> float:
        return float(self.daily_hardship.sum())

    def metric(self, name: str) -> float:
        return self.peak_hardship if name == "peak" else self.total_hardship_days

    def summary(self) -> dict:
        return {"seed": self.seed, "peak_hardship": self.peak_hardship,
                "total_hardship_days": self.total_hardship_days,
                "full_restoration_day": self.full_restoration_day,
                "adoption_fraction": self.adoption_fraction, "informed_fraction": self.informed_fraction,
                "hardship_probability": float(np.mean(self.households["hardship"])),
                "damage": dict(self.damage_counts)}


def hardship_matrix(start_h, end_h, tolerance_days, n_days: int) -> np.ndarray:
    """(household, day) in-hardship flags read at the end of each day.

    In hardship at ``t``: outage under way, not yet restored, and elapsed
    outage longer than the tolerance.
    """
    start = np.asarray(start_h, float)[:, None]
    end = np.asarray(end_h, float)[:, None]
    tol = np.asarray(tolerance_days, float)[:, None] * 24.0
    t = 24.0 * (np.arange(n_days) + 1.0)[None, :]
    with np.errstate(invalid="ignore"):
        return (start <= t) & (t < end) & (t - start > tol)


def hardship_series(result: RunResult | dict, n_days: int | None = None) -> np.ndarray:
    """Fraction of households in hardship on each day."""
    hh = result.households if isinstance(result, RunResult) else result
    n = len(hh["outage_start_h"])
    if n == 0:
        raise EmptyPopulation("no households")
    if n_days is None:
        n_days = len(result.daily_hardship) if isinstance(result, RunResult) else 0
    m = hardship_matrix(hh["outage_start_h"], hh["outage_end_h"], hh["tolerance_days"], n_days)
    return m.sum(axis=0) / n


def run_replication(scenario: Scenario, seed: int, tolerance_override: float | None = None,
                    keep_detail: bool = False) -> RunResult:
    st = streams(seed)
    tracts, marginals = study_area(scenario.tracts_file, scenario.marginals_file)
    coeffs = CoefficientSet.with_overrides(scenario.coefficients)

    pop = synthesize_households(tracts, marginals, scenario.n_households, st["population"])
    traits = derive_traits(pop, coeffs, st["population"])
    grid = build_synthetic_grid(tracts, scenario.grid, st["grid"])
    assign_poles(pop, grid.pole_tract, st["population"])
    xy_or_n = pop.xy if scenario.network_kind == "distance" else len(pop)
    net = build_social_network(scenario.network_kind, scenario.network, xy_or_n, st["network"])

    f = scenario.forewarning_days
    state = run_forewarning(pop, traits, net, f, scenario.info, scenario.adoption, coeffs, st["diffusion"])

    wind = wind_for(scenario, tracts, st["hazard"])
    damage = sample_damage(grid, wind, scenario.fragility, scenario.damage_mode, st["damage"])
    landfall = 24.0 * f
    restart = landfall + wind.duration_h

    # durations before priorities so every strategy sees the same repair times
    durations = sample_durations(grid, damage, st["repair"])
    prio = plan_priorities(scenario.strategy, grid, damage, tracts, st["repair"])
    sched = schedule_repairs(grid, damage, prio, scenario.resources, start_h=restart, durations=durations)

    on = energize_times(grid, sched.available_times(grid.n_components))
    off = deenergize_times(grid, damage.fail_time_h + landfall)
    node = grid.n_gen + grid.n_sub + pop.pole
    lost = np.isfinite(off[node])
    start = np.where(lost, off[node], np.nan)
    end = np.where(lost, on[node], np.nan)

    if tolerance_override is not None:
        tol = np.full(len(pop), float(tolerance_override))
    else:
        noise = st["tolerance"].normal(0.0, scenario.tolerance_sigma, len(pop)) if scenario.tolerance_sigma else 0.0
        tol = np.asarray(tolerance(state.substitute.astype(float), traits.need, state.x_p, coeffs, noise), float)
    with np.errstate(invalid="ignore"):
        flag = lost & (end - start > 24.0 * tol)

    n_days = scenario.horizon_days
    series = hardship_matrix(start, end, tol, n_days).sum(axis=0) / len(pop)
    full_day = int(math.ceil(sched.end_h.max() / 24.0)) if len(sched) else 0

    households = {
        "tract": pop.tract, "pole": pop.pole, "income": pop.income,
        **{a: getattr(pop, a) for a in BINARY_ATTRIBUTES}, "flood_zone": pop.flood_zone,
        "need": traits.need, "self_efficacy": traits.self_efficacy, "experience": traits.experience,
        "informed": state.informed, "inform_day": state.inform_day, "prepared": state.prepared,
        "preparedness_level": state.level, "substitute": state.substitute, "expectation_days": state.expectation,
        "tolerance_days": tol, "outage_start_h": start, "outage_end_h": end, "hardship": flag,
    }
    detail = {"grid": grid, "damage": damage, "schedule": sched, "wind": wind, "network": net,
              "tract_ids": pop.tract_ids} if keep_detail else None
    return RunResult(seed=int(seed), daily_hardship=series, households=households,
                     damage_counts=damage.counts(grid), full_restoration_day=full_day, landfall_h=landfall,
                     restoration_start_h=restart, adoption_fraction=float(state.prepared.mean()),
                     informed_fraction=float(state.informed.mean()), detail=detail)


def ci_half_width(values, confidence: float = 0.95) -> float:
    x = np.asarray(values, float)
    n = len(x)
    if n < 2:
        return math.inf
    return float(stats.t.ppf(0.5 + confidence / 2.0, n - 1) * x.std(ddof=1) / math.sqrt(n))


def stopping_index(values, confidence: float = 0.95, rel_err: float = 0.05, min_rep: int = 10) -> int | None:
    """Smallest n >= min_rep whose first n values meet the relative CI rule."""
    x = np.asarray(values, float)
    for n in range(max(min_rep, 2), len(x) + 1):
        head = x[:n]
        mean = head.mean()
        if mean == 0.0 or ci_half_width(head, confidence) <= rel_err * abs(mean):
            return n
    return None


def _replicate(args):
    fn, scenario, seed = args
    return fn(scenario, seed)


def _run_batch(fn, scenario, seeds, workers: int, pool):
    if pool is None:
        return [fn(scenario, s) for s in seeds]
    return list(pool.map(_replicate, [(fn, scenario, s) for s in seeds]))


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        raise ConfigError(f"{WORKERS_ENV} must be an integer") from None


@dataclass(eq=False)
class Aggregate:
    scenario: Scenario
    runs: list  # RunResult in replication order
    converged: bool
    confidence: float
    rel_err: float
    stop_metric: str = "peak"

    @property
    def n_replications(self) -> int:
        return len(self.runs)

    @property
    def population_fingerprint(self) -> str:
        return self.scenario.population_fingerprint()

    def metric_values(self, name: str | None = None) -> np.ndarray:
        return np.array([r.metric(name or self.stop_metric) for r in self.runs])

    def mean_ci(self, values) -> dict:
        x = np.asarray(values, float)
        m = float(x.mean()) if len(x) else math.nan
        hw = ci_half_width(x, self.confidence)
        return {"mean": m, "ci_low": m - hw, "ci_high": m + hw, "half_width": hw}

    def daily_matrix(self) -> np.ndarray:
        return np.vstack([r.daily_hardship for r in self.runs])

    def daily_table(self) -> list[dict]:
        m = self.daily_matrix()
        n = m.shape[0]
        mean = m.mean(axis=0)
        hw = (stats.t.ppf(0.5 + self.confidence / 2, n - 1) * m.std(axis=0, ddof=1) / math.sqrt(n)
              if n > 1 else np.full(m.shape[1], math.inf))
        q25, q75 = np.quantile(m, [0.25, 0.75], axis=0)
        return [{"day": d, "mean": mean[d], "ci_low": mean[d] - hw[d], "ci_high": mean[d] + hw[d],
                 "q25": q25[d], "q75": q75[d]} for d in range(m.shape[1])]

    def to_dict(self) -> dict:
        return _jsonable({
            "scenario": self.scenario.to_dict(),
            "population_fingerprint": self.population_fingerprint,
            "n_replications": self.n_replications,
            "converged": self.converged,
            "warning": None if self.converged else "confidence target not reached by max_rep",
            "confidence": self.confidence,
            "rel_err": self.rel_err,
            "stop_metric": self.stop_metric,
            "peak_hardship": self.mean_ci(self.metric_values("peak")),
            "total_hardship_days": self.mean_ci(self.metric_values("total")),
            "full_restoration_day": self.mean_ci([r.full_restoration_day for r in self.runs]),
            "adoption_fraction": self.mean_ci([r.adoption_fraction for r in self.runs]),
            "hardship_probability": self.mean_ci([np.mean(r.households["hardship"]) for r in self.runs]),
            "daily": self.daily_table(),
            "replications": [r.summary() for r in self.runs],
        })


def run_monte_carlo(scenario: Scenario, confidence: float = 0.95, rel_err: float = 0.05, min_rep: int = 10,
                    max_rep: int = 1000, workers: int | None = None, replicate_fn=None,
                    fixed_reps: int | None = None) -> Aggregate:
    """Replicate until the CI rule holds on the stop metric.

    The rule is checked on the ordered prefix of replications, so the stopping
    count, and the runs kept, do not depend on how many workers ran them.
    ``fixed_reps`` skips the rule and runs exactly that many.
    """
    if not 0 < rel_err:
        raise ConfigError("rel_err must be positive")
    if not 0 < confidence < 1:
        raise ConfigError("confidence must be in (0, 1)")
    if fixed_reps is None and min_rep < 2:
        raise ConfigError("min_rep must be >= 2")
    if max_rep < min_rep:
        raise ConfigError("max_rep must be >= min_rep")
    fn = replicate_fn or run_replication
    workers = default_workers() if workers is None else max(1, int(workers))
    metric = scenario.stop_metric

    pool = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        if fixed_reps is not None:
            runs = _run_batch(fn, scenario, replication_seeds(scenario.seed, fixed_reps), workers, pool)
            return Aggregate(scenario, runs, True, confidence, rel_err, metric)
        runs: list = []
        batch = min_rep
        while len(runs) < max_rep:
            k = min(batch, max_rep - len(runs))
            runs += _run_batch(fn, scenario, replication_seeds(scenario.seed, k, start=len(runs)), workers, pool)
            n = stopping_index([r.metric(metric) for r in runs], confidence, rel_err, min_rep)
            if n is not None:
                return Aggregate(scenario, runs[:n], True, confidence, rel_err, metric)
            batch = max(workers, 2)
        return Aggregate(scenario, runs, False, confidence, rel_err, metric)
    finally:
        if pool is not None:
            pool.shutdown()
