"""Social networks and the forewarning-period information / adoption process.

Day steps are synchronous: sharing and peer influence on day ``d`` use the
informed and prepared sets as they stood at the start of that day.
"""
from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field

import networkx as nx
import numpy as np
from scipy.spatial import cKDTree
from scipy.special import expit

from .errors import ConfigError
from .population import Population, Traits
from .regressions import (CoefficientSet, cumulative_probs, expected_outage, linear_predictor,
                          preparedness_covariates, substitute_probability)

KINDS = ("random", "small_world", "scale_free", "distance")


@dataclass(frozen=True)
class NetworkParams:
    k: int = 6  # mean degree (random, small_world)
    p_rw: float = 0.1
    m: int = 3  # edges per arrival (scale_free)
    radius_km: float = 0.5


@dataclass(eq=False)
class SocialNetwork:
    kind: str
    n: int
    indptr: np.ndarray
    indices: np.ndarray
    params: NetworkParams = field(default_factory=NetworkParams)

    @classmethod
    def from_edges(cls, kind: str, n: int, edges, params: NetworkParams | None = None) -> "SocialNetwork":
        e = np.asarray(list(edges), dtype=np.int64).reshape(-1, 2)
        if len(e) and np.any(e[:, 0] == e[:, 1]):
            raise ConfigError("self-loops are not allowed")
        both = np.concatenate([e, e[:, ::-1]])
        both = np.unique(both, axis=0)  # sorted by (u, v): stable CSR layout
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.add.at(indptr, both[:, 0] + 1, 1)
        return cls(kind, n, np.cumsum(indptr), both[:, 1].copy(), params or NetworkParams())

    @property
    def degree(self) -> np.ndarray:
        return np.diff(self.indptr)

    @property
    def rows(self) -> np.ndarray:
        return np.repeat(np.arange(self.n), self.degree)

    def neighbors(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i]:self.indptr[i + 1]]

    def edges(self) -> np.ndarray:
        r = self.rows
        keep = r < self.indices
        return np.column_stack([r[keep], self.indices[keep]])

    @property
    def n_edges(self) -> int:
        return int(len(self.indices) // 2)

    def neighbor_sum(self, values: np.ndarray) -> np.ndarray:
        """Sum of ``values`` over each node's neighbours."""
        return np.bincount(self.rows, weights=np.asarray(values, float)[self.indices], minlength=self.n)

    def export_edge_list(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["source", "target"])
            w.writerows(self.edges().tolist())


def _nx_seed(rng: np.random.Generator) -> int:
    return int(rng.integers(0, 2**31 - 1))


def build_social_network(kind: str, params: NetworkParams, n_or_xy, rng: np.random.Generator) -> SocialNetwork:
    """Household contact network; ``n_or_xy`` is a count or an (n, 2) position array."""
    xy = None
    if np.ndim(n_or_xy) == 0:
        n = int(n_or_xy)
    else:
        xy = np.asarray(n_or_xy, dtype=float)
        n = len(xy)
    if kind == "random":
        if params.k >= n:
            raise ConfigError(f"mean degree {params.k} must be below n={n}")
        g = nx.fast_gnp_random_graph(n, params.k / (n - 1), seed=_nx_seed(rng))
        edges = g.edges()
    elif kind == "small_world":
        if params.k >= n:
            raise ConfigError(f"lattice degree {params.k} must be below n={n}")
        g = nx.watts_strogatz_graph(n, params.k, params.p_rw, seed=_nx_seed(rng))
        edges = g.edges()
    elif kind == "scale_free":
        if params.m >= n or params.m < 1:
            raise ConfigError(f"attachment m={params.m} must be in [1, n)")
        seed_graph = nx.complete_graph(params.m)
        g = nx.barabasi_albert_graph(n, params.m, seed=_nx_seed(rng), initial_graph=seed_graph)
        edges = g.edges()
    elif kind == "distance":
        if xy is None:
            raise ConfigError("distance network needs household positions")
        edges = [] if params.radius_km <= 0 else sorted(cKDTree(xy).query_pairs(params.radius_km))
    else:
        raise ConfigError(f"unknown network kind {kind!r}; expected one of {KINDS}")
    return SocialNetwork.from_edges(kind, n, edges, params)


@dataclass(frozen=True)
class InfoParams:
    p_official: float = 0.3  # daily chance an uninformed household hears officials
    p_prepared: float = 0.3  # daily chance a prepared household tells a given neighbour
    p_other: float = 0.1  # same, for households that have not prepared

    def __post_init__(self):
        for v in (self.p_official, self.p_prepared, self.p_other):
            if not 0.0 <= v <= 1.0:
                raise ConfigError("information probabilities must lie in [0, 1]")
        if not self.p_official >= self.p_prepared >= self.p_other:
            # allowed (isolating one channel in experiments) but unusual
            warnings.warn("information probabilities are not ordered p_official >= p_prepared >= p_other",
                          stacklevel=3)


@dataclass(frozen=True)
class AdoptionParams:
    peer_lambda: float = 1.0
    mode: str = "binary"  # or "ordinal"
    ordinal_prepared_level: int = 3
    poisson_expectation: bool = False

    def __post_init__(self):
        if self.peer_lambda < 0:
            raise ConfigError("peer_lambda must be >= 0")
        if self.mode not in ("binary", "ordinal"):
            raise ConfigError(f"unknown preparedness mode {self.mode!r}")


@dataclass(eq=False)
class DiffusionState:
    informed: np.ndarray
    inform_day: np.ndarray  # -1 if never
    prepared: np.ndarray
    prepare_day: np.ndarray
    level: np.ndarray  # ordinal preparedness level (0 in binary mode)
    substitute: np.ndarray
    expectation: np.ndarray  # expected outage, days

    @classmethod
    def fresh(cls, n: int) -> "DiffusionState":
        return cls(np.zeros(n, bool), np.full(n, -1, np.int64), np.zeros(n, bool), np.full(n, -1, np.int64),
                   np.zeros(n, np.int8), np.zeros(n, bool), np.zeros(n, float))

    def copy(self) -> "DiffusionState":
        return DiffusionState(*(getattr(self, f).copy() for f in self.__dataclass_fields__))

    @property
    def x_p(self) -> np.ndarray:
        """Preparedness as the tolerance model consumes it."""
        return np.where(self.level > 0, self.level, self.prepared).astype(float)


def step_information(day: int, state: DiffusionState, net: SocialNetwork, info: InfoParams,
                     rng: np.random.Generator) -> DiffusionState:
    """One day of official broadcast plus neighbour-to-neighbour sharing."""
    u = rng.random(net.n)
    share = np.where(state.prepared, info.p_prepared, info.p_other)
    with np.errstate(divide="ignore"):
        log_miss = np.where(state.informed, np.log1p(-share), 0.0)
        log_miss_official = np.log1p(-info.p_official)
    log_stay = log_miss_official + net.neighbor_sum(log_miss) if net.n_edges else np.full(net.n, log_miss_official)
    p_hear = -np.expm1(log_stay)
    new = ~state.informed & (u < p_hear)
    state.informed[new] = True
    state.inform_day[new] = day
    return state


class Forewarning:
    """Household-level quantities fixed for a run: the static part of the
    preparedness predictor and the generator-purchase inputs."""

    def __init__(self, pop: Population, traits: Traits, coeffs: CoefficientSet, forewarning_days: int):
        self.f = forewarning_days
        self.coeffs = coeffs
        cov = preparedness_covariates(pop.vehicle_missing, traits.experience, pop.elderly, pop.renter,
                                      np.full(len(pop), float(forewarning_days)), pop.supermarket_distance,
                                      traits.self_efficacy)
        self.prep_eta = linear_predictor(coeffs["preparedness"], cov)
        if "preparedness_ordinal" in coeffs.models:
            self.ord_eta = linear_predictor(coeffs["preparedness_ordinal"], cov)
        self.pop = pop
        self.traits = traits

    def expectation(self, informed) -> np.ndarray:
        p = self.pop
        return np.asarray(expected_outage(self.f, np.asarray(informed, float), p.owner, p.elderly,
                                          p.mobility_issue, p.flood_zone, self.coeffs), dtype=float)


def peer_fraction(net: SocialNetwork, prepared) -> np.ndarray:
    """Share of each household's neighbours that have prepared; 0 when isolated."""
    deg = net.degree
    prepared_nb = net.neighbor_sum(prepared) if net.n_edges else np.zeros(net.n)
    return np.divide(prepared_nb, deg, out=np.zeros(net.n), where=deg > 0)


def adoption_probability(prep_eta, frac, peer_lambda: float):
    """Whole-period chance of protective action: ``sigmoid(x.beta + lambda * F)``."""
    return expit(np.asarray(prep_eta, float) + peer_lambda * np.asarray(frac, float))


def step_adoption(day: int, state: DiffusionState, net: SocialNetwork, fw: Forewarning,
                  adoption: AdoptionParams, rng: np.random.Generator) -> DiffusionState:
    """Protective action for informed households, with peer influence.

    The per-day hazard ``1 - (1 - P)^(1/f)`` makes the chance of acting over
    the whole forewarning period equal ``P`` when there is no peer effect.
    """
    n = net.n
    u_gen = rng.random(n)
    u_act = rng.random(n)

    # generator purchase, once, on the day a household is informed
    new = state.inform_day == day
    if new.any():
        exp = fw.expectation(np.ones(n))
        if adoption.poisson_expectation:
            exp = rng.poisson(exp).astype(float)
        state.expectation[new] = exp[new]
        p_sub = substitute_probability(fw.pop.income, fw.pop.renter, state.expectation, fw.traits.self_efficacy,
                                       fw.coeffs)
        state.substitute |= new & (u_gen < p_sub)

    frac = peer_fraction(net, state.prepared)

    if adoption.mode == "binary":
        cand = state.informed & ~state.prepared
        p = adoption_probability(fw.prep_eta, frac, adoption.peer_lambda)
        h = -np.expm1(np.log1p(-np.minimum(p, 1.0 - 1e-16)) / fw.f)
        act = cand & (u_act < h)
        state.prepared[act] = True
        state.prepare_day[act] = day
    else:
        cand = state.informed
        m = fw.coeffs["preparedness_ordinal"]
        cum = cumulative_probs(m["intercepts"], fw.ord_eta)
        r = u_act + frac * adoption.peer_lambda
        level = 1 + (r[:, None] >= cum).sum(axis=1)
        state.level = np.where(cand, np.maximum(state.level, level), state.level).astype(np.int8)
        now = cand & ~state.prepared & (state.level >= adoption.ordinal_prepared_level)
        state.prepared[now] = True
        state.prepare_day[now] = day
    return state


def run_forewarning(pop: Population, traits: Traits, net: SocialNetwork, forewarning_days: int,
                    info: InfoParams, adoption: AdoptionParams, coeffs: CoefficientSet,
                    rng: np.random.Generator, history: list | None = None) -> DiffusionState:
    """Days ``0 .. f-1`` of information spread followed by adoption each day."""
    state = DiffusionState.fresh(len(pop))
    fw = Forewarning(pop, traits, coeffs, forewarning_days)
    for day in range(forewarning_days):
        step_information(day, state, net, info, rng)
        step_adoption(day, state, net, fw, adoption, rng)
        if history is not None:
            history.append((int(state.informed.sum()), int(state.prepared.sum())))
    uninformed = ~state.informed
    if uninformed.any():
        state.expectation[uninformed] = fw.expectation(np.zeros(len(pop)))[uninformed]
    return state
