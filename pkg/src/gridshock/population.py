"""Synthetic household population from tract-level marginals."""
from __future__ import annotations

import csv
from dataclasses import asdict, dataclass, fields
from typing import Sequence

import numpy as np

from .errors import ConfigError, MalformedRow
from .hazard import Tract
from .regressions import (CoefficientSet, cumulative_probs, experience_probability, linear_predictor)
from .util import apportion

INCOME_LEVELS = 7
BINARY_ATTRIBUTES = ("racial_minority", "elderly", "child_under_10", "mobility_issue", "medical_condition",
                     "chronic_disease", "owner", "vehicle_missing", "social_capital")


@dataclass(frozen=True)
class Marginals:
    """Share of a tract's households with each attribute; ``income`` sums to 1."""
    income: tuple = (1 / 7,) * 7
    racial_minority: float = 0.3
    elderly: float = 0.2
    child_under_10: float = 0.25
    mobility_issue: float = 0.1
    medical_condition: float = 0.15
    chronic_disease: float = 0.3
    owner: float = 0.6
    vehicle_missing: float = 0.08
    social_capital: float = 0.5

    def __post_init__(self):
        if len(self.income) != INCOME_LEVELS:
            raise ConfigError(f"income needs {INCOME_LEVELS} shares")
        if any(not 0.0 <= p <= 1.0 for p in self.income) or abs(sum(self.income) - 1.0) > 1e-9:
            raise ConfigError(f"income shares must lie in [0,1] and sum to 1: {self.income}")
        for name in BINARY_ATTRIBUTES:
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ConfigError(f"marginal {name}={p} outside [0, 1]")


MARGINAL_COLUMNS = ["tract_id"] + [f"income_{k}" for k in range(1, INCOME_LEVELS + 1)] + list(BINARY_ATTRIBUTES)


def load_marginals(path) -> dict[str, Marginals]:
    out = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(MARGINAL_COLUMNS) - set(reader.fieldnames or [])
        if missing:
            raise MalformedRow(f"{path}: missing columns {sorted(missing)}")
        for row in reader:
            try:
                inc = tuple(float(row[f"income_{k}"]) for k in range(1, INCOME_LEVELS + 1))
                out[row["tract_id"]] = Marginals(inc, **{a: float(row[a]) for a in BINARY_ATTRIBUTES})
            except ValueError as exc:
                raise MalformedRow(f"{path}: {exc}") from None
    return out


def write_marginals(marginals: dict[str, Marginals], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(MARGINAL_COLUMNS)
        for tid, m in marginals.items():
            w.writerow([tid] + [repr(p) for p in m.income] + [repr(getattr(m, a)) for a in BINARY_ATTRIBUTES])


@dataclass(frozen=True)
class Household:
    id: int
    tract: str
    pole: int
    income_bracket: int
    racial_minority: int
    elderly: int
    child_under_10: int
    mobility_issue: int
    medical_condition: int
    chronic_disease: int
    owner: int
    vehicle_missing: int
    social_capital: int
    flood_zone: int
    state_duration_years: float
    supermarket_distance_mi: float

    @property
    def renter(self) -> int:
        return 1 - self.owner


@dataclass(eq=False)
class Population:
    """Households stored column-wise; ``household(i)`` gives a record view."""
    tract_ids: tuple[str, ...]
    tract: np.ndarray  # tract index per household
    x: np.ndarray
    y: np.ndarray
    income: np.ndarray
    racial_minority: np.ndarray
    elderly: np.ndarray
    child_under_10: np.ndarray
    mobility_issue: np.ndarray
    medical_condition: np.ndarray
    chronic_disease: np.ndarray
    owner: np.ndarray
    vehicle_missing: np.ndarray
    social_capital: np.ndarray
    flood_zone: np.ndarray
    state_duration: np.ndarray
    supermarket_distance: np.ndarray
    pole: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.tract)

    @property
    def renter(self) -> np.ndarray:
        return 1 - self.owner

    @property
    def xy(self) -> np.ndarray:
        return np.column_stack([self.x, self.y])

    def household(self, i: int) -> Household:
        return Household(
            id=i, tract=self.tract_ids[self.tract[i]], pole=-1 if self.pole is None else int(self.pole[i]),
            income_bracket=int(self.income[i]),
            **{a: int(getattr(self, a)[i]) for a in BINARY_ATTRIBUTES + ("flood_zone",)},
            state_duration_years=float(self.state_duration[i]),
            supermarket_distance_mi=float(self.supermarket_distance[i]))

    def attribute(self, name: str) -> np.ndarray:
        if name in ("income", "income_bracket"):
            return self.income
        if name == "renter":
            return self.renter
        if name == "tract":
            return self.tract
        if name in BINARY_ATTRIBUTES + ("flood_zone",):
            return getattr(self, name)
        raise ConfigError(f"unknown household attribute {name!r}")

    def __eq__(self, other):
        if not isinstance(other, Population):
            return NotImplemented
        return self.tract_ids == other.tract_ids and all(
            np.array_equal(getattr(self, f.name), getattr(other, f.name))
            for f in fields(self) if f.name != "tract_ids")


def _truncated_normal(rng: np.random.Generator, mean: float, sd: float, n: int) -> np.ndarray:
    """Normal draws conditioned on >= 0, by redrawing negatives."""
    out = rng.normal(mean, sd, n)
    bad = out < 0
    while bad.any():
        out[bad] = rng.normal(mean, sd, int(bad.sum()))
        bad = out < 0
    return out


def synthesize_households(tracts: Sequence[Tract], marginals: dict[str, Marginals] | Marginals,
                          n_total: int, rng: np.random.Generator, spread_km: float = 1.5) -> Population:
    """Allocate households to tracts by population and sample attributes
    independently from each tract's marginals."""
    if n_total <= 0:
        raise ConfigError("n_total must be positive")
    if not tracts:
        raise ConfigError("at least one tract is required")
    if isinstance(marginals, Marginals):
        marginals = {t.id: marginals for t in tracts}
    missing = [t.id for t in tracts if t.id not in marginals]
    if missing:
        raise ConfigError(f"no marginals for tracts {missing[:5]}")
    alloc = apportion([t.population for t in tracts], n_total)
    tract = np.repeat(np.arange(len(tracts)), alloc)
    n = len(tract)

    m_list = [marginals[t.id] for t in tracts]
    inc_p = np.array([m.income for m in m_list])[tract]
    u = rng.random(n)
    income = 1 + (u[:, None] >= np.cumsum(inc_p, axis=1)[:, :-1]).sum(axis=1)
    cols = {}
    for a in BINARY_ATTRIBUTES:
        p = np.array([getattr(m, a) for m in m_list])[tract]
        cols[a] = (rng.random(n) < p).astype(np.int8)
    fz = np.array([t.flood_zone_fraction for t in tracts])[tract]
    flood_zone = (rng.random(n) < fz).astype(np.int8)
    state_duration = _truncated_normal(rng, 25.0, 15.0, n)
    supermarket = _truncated_normal(rng, 5.0, np.sqrt(30.0), n)
    cxy = np.array([[t.x, t.y] for t in tracts])[tract]
    jitter = rng.normal(0.0, spread_km, size=(n, 2))
    return Population(
        tract_ids=tuple(t.id for t in tracts), tract=tract.astype(np.int64),
        x=cxy[:, 0] + jitter[:, 0], y=cxy[:, 1] + jitter[:, 1],
        income=income.astype(np.int8), flood_zone=flood_zone,
        state_duration=state_duration, supermarket_distance=supermarket, **cols)


def assign_poles(pop: Population, pole_tract: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Map every household to one pole in its own tract, uniformly at random."""
    pole_tract = np.asarray(pole_tract)
    by_tract: dict[int, np.ndarray] = {}
    for p, t in enumerate(pole_tract.tolist()):
        by_tract.setdefault(t, []).append(p)
    out = np.empty(len(pop), dtype=np.int64)
    for t in np.unique(pop.tract):
        idx = np.flatnonzero(pop.tract == t)
        poles = by_tract.get(int(t))
        if not poles:
            raise ConfigError(f"tract {pop.tract_ids[t]} has households but no poles")
        out[idx] = np.asarray(poles)[rng.integers(0, len(poles), len(idx))]
    pop.pole = out
    return out


@dataclass(eq=False)
class Traits:
    """Per-household covariates drawn once before the forewarning period."""
    need: np.ndarray  # 1..5
    self_efficacy: np.ndarray  # 1..5
    experience: np.ndarray  # 0/1


def derive_traits(pop: Population, coeffs: CoefficientSet, rng: np.random.Generator) -> Traits:
    n = len(pop)
    need_m = coeffs["need"]
    cum = cumulative_probs(need_m["intercepts"], linear_predictor(need_m, {
        "racial_minority": pop.racial_minority, "mobility_issue": pop.mobility_issue,
        "child_under_10": pop.child_under_10, "medical_condition": pop.medical_condition}))
    need = 1 + (rng.random(n)[:, None] >= cum).sum(axis=1)

    se_m = coeffs["self_efficacy"]
    cum = cumulative_probs(se_m["intercepts"], linear_predictor(se_m, {
        "owner": pop.owner, "medical_condition": pop.medical_condition,
        "chronic_disease": pop.chronic_disease, "social_capital": pop.social_capital}))
    se = 1 + (rng.random(n)[:, None] >= cum).sum(axis=1)

    p_exp = experience_probability(pop.state_duration, pop.racial_minority, pop.elderly, pop.child_under_10, coeffs)
    exp = (rng.random(n) < p_exp).astype(np.int8)
    return Traits(need.astype(np.int8), se.astype(np.int8), exp)


def population_summary(pop: Population) -> dict:
    out = {"n_households": len(pop), "mean_income": float(np.mean(pop.income))}
    for a in BINARY_ATTRIBUTES + ("flood_zone",):
        out[a] = float(np.mean(getattr(pop, a)))
    return out


def households_as_dicts(pop: Population) -> list[dict]:
    return [asdict(pop.household(i)) for i in range(len(pop))]
