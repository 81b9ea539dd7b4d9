"""Synthetic power network, wind damage sampling and connectivity loss.

Index spaces used throughout:

* nodes: generators, then substations, then poles
* edges: transmission elements, then conductors
* components (things that can fail): substations, tower chains, lines,
  poles, conductors.  A transmission element is one edge carried by two
  components (its tower chain and its line); it is intact only if both are.
"""
from __future__ import annotations

import heapq
import json
import math
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy.sparse.csgraph import minimum_spanning_tree
from scipy.spatial.distance import cdist

from .errors import ConfigError, TractMismatch
from .fragility import (FragilityParams, conductor_fragility, line_fragility, lognormal_fragility,
                        transmission_element_fragility)
from .hazard import Tract, WindField
from .util import apportion, nearest

SUBSTATION, TOWER, LINE, POLE, CONDUCTOR = range(5)
CLASS_NAMES = ("substation", "tower", "line", "pole", "conductor")
TIER_NAMES = ("intact", "moderate", "severe", "complete")


@dataclass
class GridSpec:
    n_substations: int = 97
    n_transmission: int = 242
    n_generators: int = 8
    customer_per_pole: int = 40
    tower_spacing_km: float = 0.23
    substation_jitter_km: float = 1.0

    def __post_init__(self):
        for name in ("n_substations", "n_transmission", "n_generators", "customer_per_pole"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.tower_spacing_km <= 0:
            raise ConfigError("tower_spacing_km must be positive")
        if self.n_transmission < self.n_substations + self.n_generators - 1:
            raise ConfigError(
                f"{self.n_transmission} transmission elements cannot connect "
                f"{self.n_substations + self.n_generators} nodes")


def tower_count(length_km: float, spacing_km: float) -> int:
    # round first so 2.3 / 0.23 = 10.000000000000002 still gives 10
    return max(1, math.ceil(round(length_km / spacing_km, 9)))


def poles_for(households: int, customer_per_pole: int) -> int:
    return -(-int(households) // int(customer_per_pole))


@dataclass(eq=False)
class Grid:
    tract_ids: tuple[str, ...]
    gen_xy: np.ndarray
    gen_tract: np.ndarray
    sub_xy: np.ndarray
    sub_tract: np.ndarray
    trans_nodes: np.ndarray  # (T, 2) node indices
    trans_length_km: np.ndarray
    trans_towers: np.ndarray
    trans_tract: np.ndarray
    pole_xy: np.ndarray
    pole_tract: np.ndarray
    pole_substation: np.ndarray  # feeding substation (substation index)
    cond_nodes: np.ndarray  # (C, 2) node indices, upstream first
    cond_tract: np.ndarray
    customer_per_pole: int = 40
    tower_spacing_km: float = 0.23

    # sizes -----------------------------------------------------------------
    @property
    def n_gen(self) -> int:
        return len(self.gen_xy)

    @property
    def n_sub(self) -> int:
        return len(self.sub_xy)

    @property
    def n_trans(self) -> int:
        return len(self.trans_nodes)

    @property
    def n_pole(self) -> int:
        return len(self.pole_xy)

    @property
    def n_cond(self) -> int:
        return len(self.cond_nodes)

    @property
    def n_nodes(self) -> int:
        return self.n_gen + self.n_sub + self.n_pole

    @property
    def n_components(self) -> int:
        return self.n_sub + 2 * self.n_trans + self.n_pole + self.n_cond

    def counts(self) -> dict:
        # a distribution element is a pole together with the conductor span feeding it
        return {"generators": self.n_gen, "substations": self.n_sub,
                "transmission_elements": self.n_trans, "distribution_elements": self.n_pole,
                "poles": self.n_pole, "conductors": self.n_cond}

    # offsets ---------------------------------------------------------------
    def sub_node(self, s):
        return self.n_gen + np.asarray(s)

    def pole_node(self, p):
        return self.n_gen + self.n_sub + np.asarray(p)

    @cached_property
    def comp_offsets(self) -> dict:
        s, t, p = self.n_sub, self.n_trans, self.n_pole
        return {SUBSTATION: 0, TOWER: s, LINE: s + t, POLE: s + 2 * t, CONDUCTOR: s + 2 * t + p}

    @cached_property
    def comp_class(self) -> np.ndarray:
        return np.concatenate([np.full(n, c, dtype=np.int8) for c, n in
                               ((SUBSTATION, self.n_sub), (TOWER, self.n_trans), (LINE, self.n_trans),
                                (POLE, self.n_pole), (CONDUCTOR, self.n_cond))])

    @cached_property
    def comp_tract(self) -> np.ndarray:
        return np.concatenate([self.sub_tract, self.trans_tract, self.trans_tract,
                               self.pole_tract, self.cond_tract]).astype(np.int64)

    @cached_property
    def comp_ids(self) -> list[str]:
        return ([f"S{i}" for i in range(self.n_sub)] + [f"T{i}:tower" for i in range(self.n_trans)]
                + [f"T{i}:line" for i in range(self.n_trans)] + [f"P{i}" for i in range(self.n_pole)]
                + [f"C{i}" for i in range(self.n_cond)])

    @cached_property
    def node_comp(self) -> np.ndarray:
        """Component index for each node, -1 for generators."""
        off = self.comp_offsets
        return np.concatenate([np.full(self.n_gen, -1), off[SUBSTATION] + np.arange(self.n_sub),
                               off[POLE] + np.arange(self.n_pole)]).astype(np.int64)

    @cached_property
    def edge_nodes(self) -> np.ndarray:
        return np.concatenate([self.trans_nodes.reshape(-1, 2), self.cond_nodes.reshape(-1, 2)]).astype(np.int64)

    @cached_property
    def edge_comps(self) -> np.ndarray:
        """(E, 2) component indices per edge; conductors repeat their single component."""
        off = self.comp_offsets
        t = np.arange(self.n_trans)
        c = off[CONDUCTOR] + np.arange(self.n_cond)
        trans = np.stack([off[TOWER] + t, off[LINE] + t], axis=1)
        return np.concatenate([trans.reshape(-1, 2), np.stack([c, c], axis=1).reshape(-1, 2)]).astype(np.int64)

    @cached_property
    def adjacency(self) -> list[list[tuple[int, int]]]:
        adj: list[list[tuple[int, int]]] = [[] for _ in range(self.n_nodes)]
        for e, (u, v) in enumerate(self.edge_nodes.tolist()):
            adj[u].append((v, e))
            adj[v].append((u, e))
        return adj

    @cached_property
    def sub_transmission(self) -> list[list[int]]:
        """Transmission edge indices incident to each substation."""
        out: list[list[int]] = [[] for _ in range(self.n_sub)]
        for e, (u, v) in enumerate(self.trans_nodes.tolist()):
            for n in (u, v):
                if self.n_gen <= n < self.n_gen + self.n_sub:
                    out[n - self.n_gen].append(e)
        return out

    @cached_property
    def tract_chains(self) -> dict[int, list[int]]:
        """Per tract, its distribution components in chain order (conductor, pole, conductor, ...)."""
        off = self.comp_offsets
        pole_of_node = {int(self.pole_node(p)): p for p in range(self.n_pole)}
        chains: dict[int, list[int]] = {}
        for c, (_, down) in enumerate(self.cond_nodes.tolist()):
            p = pole_of_node[down]
            chains.setdefault(int(self.pole_tract[p]), []).extend([off[CONDUCTOR] + c, off[POLE] + p])
        return chains

    # serialisation ----------------------------------------------------------
    def to_dict(self) -> dict:
        def node_id(n):
            if n < self.n_gen:
                return f"G{n}"
            if n < self.n_gen + self.n_sub:
                return f"S{n - self.n_gen}"
            return f"P{n - self.n_gen - self.n_sub}"

        nodes = []
        for i, (x, y) in enumerate(self.gen_xy.tolist()):
            nodes.append({"id": f"G{i}", "kind": "generator", "x": x, "y": y,
                          "tract": self.tract_ids[self.gen_tract[i]]})
        for i, (x, y) in enumerate(self.sub_xy.tolist()):
            nodes.append({"id": f"S{i}", "kind": "substation", "x": x, "y": y,
                          "tract": self.tract_ids[self.sub_tract[i]]})
        for i, (x, y) in enumerate(self.pole_xy.tolist()):
            nodes.append({"id": f"P{i}", "kind": "pole", "x": x, "y": y,
                          "tract": self.tract_ids[self.pole_tract[i]],
                          "substation": f"S{int(self.pole_substation[i])}"})
        edges = []
        for i, (u, v) in enumerate(self.trans_nodes.tolist()):
            edges.append({"id": f"T{i}", "kind": "transmission", "from": node_id(u), "to": node_id(v),
                          "length_km": float(self.trans_length_km[i]), "n_towers": int(self.trans_towers[i]),
                          "tract": self.tract_ids[self.trans_tract[i]]})
        for i, (u, v) in enumerate(self.cond_nodes.tolist()):
            edges.append({"id": f"C{i}", "kind": "conductor", "from": node_id(u), "to": node_id(v),
                          "tract": self.tract_ids[self.cond_tract[i]]})
        return {"tract_ids": list(self.tract_ids), "customer_per_pole": self.customer_per_pole,
                "tower_spacing_km": self.tower_spacing_km, "counts": self.counts(),
                "nodes": nodes, "edges": edges}

    @classmethod
    def from_dict(cls, d: dict) -> "Grid":
        tract_ids = tuple(d["tract_ids"])
        tix = {t: i for i, t in enumerate(tract_ids)}
        kinds = {"generator": [], "substation": [], "pole": []}
        for n in d["nodes"]:
            kinds[n["kind"]].append(n)
        for k, prefix in (("generator", "G"), ("substation", "S"), ("pole", "P")):
            kinds[k].sort(key=lambda n: int(n["id"][1:]))
            if [int(n["id"][1:]) for n in kinds[k]] != list(range(len(kinds[k]))):
                raise ConfigError(f"{k} ids must be {prefix}0..{prefix}{len(kinds[k]) - 1}")
        ng, ns = len(kinds["generator"]), len(kinds["substation"])

        def node_ix(nid: str) -> int:
            k, i = nid[0], int(nid[1:])
            return {"G": 0, "S": ng, "P": ng + ns}[k] + i

        def xy(ns_):
            return np.array([[n["x"], n["y"]] for n in ns_], dtype=float).reshape(-1, 2)

        trans = sorted((e for e in d["edges"] if e["kind"] == "transmission"), key=lambda e: int(e["id"][1:]))
        conds = sorted((e for e in d["edges"] if e["kind"] == "conductor"), key=lambda e: int(e["id"][1:]))
        return cls(
            tract_ids=tract_ids,
            gen_xy=xy(kinds["generator"]),
            gen_tract=np.array([tix[n["tract"]] for n in kinds["generator"]], dtype=np.int64),
            sub_xy=xy(kinds["substation"]),
            sub_tract=np.array([tix[n["tract"]] for n in kinds["substation"]], dtype=np.int64),
            trans_nodes=np.array([[node_ix(e["from"]), node_ix(e["to"])] for e in trans], dtype=np.int64).reshape(-1, 2),
            trans_length_km=np.array([e["length_km"] for e in trans], dtype=float),
            trans_towers=np.array([e["n_towers"] for e in trans], dtype=np.int64),
            trans_tract=np.array([tix[e["tract"]] for e in trans], dtype=np.int64),
            pole_xy=xy(kinds["pole"]),
            pole_tract=np.array([tix[n["tract"]] for n in kinds["pole"]], dtype=np.int64),
            pole_substation=np.array([int(n["substation"][1:]) for n in kinds["pole"]], dtype=np.int64),
            cond_nodes=np.array([[node_ix(e["from"]), node_ix(e["to"])] for e in conds], dtype=np.int64).reshape(-1, 2),
            cond_tract=np.array([tix[e["tract"]] for e in conds], dtype=np.int64),
            customer_per_pole=int(d.get("customer_per_pole", 40)),
            tower_spacing_km=float(d.get("tower_spacing_km", 0.23)),
        )

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "Grid":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def build_synthetic_grid(tracts: Sequence[Tract], spec: GridSpec | None = None,
                         rng: np.random.Generator | None = None) -> Grid:
    """Place substations by population, join them with a meshed transmission
    network, and hang one pole chain per tract off its nearest substation."""
    spec = spec or GridSpec()
    if not tracts:
        raise ConfigError("at least one tract is required")
    rng = rng if rng is not None else np.random.default_rng(0)
    cxy = np.array([[t.x, t.y] for t in tracts], dtype=float)
    pop = np.array([t.population for t in tracts], dtype=float)

    per_tract = apportion(pop, spec.n_substations)
    sub_tract = np.repeat(np.arange(len(tracts)), per_tract)
    sub_xy = cxy[sub_tract] + rng.normal(0.0, spec.substation_jitter_km, size=(len(sub_tract), 2))

    lo, hi = cxy.min(axis=0), cxy.max(axis=0)
    gen_xy = lo + rng.random((spec.n_generators, 2)) * np.maximum(hi - lo, 1.0)
    gen_tract = nearest(gen_xy, cxy)

    # transmission: minimum spanning tree plus the shortest remaining pairs
    bxy = np.concatenate([gen_xy, sub_xy])
    nb = len(bxy)
    max_edges = nb * (nb - 1) // 2
    if spec.n_transmission > max_edges:
        raise ConfigError(f"{spec.n_transmission} transmission elements exceed the {max_edges} possible pairs")
    dist = cdist(bxy, bxy)
    # MST treats 0 as "no edge"; nudge coincident points
    mst = minimum_spanning_tree(np.where(dist > 0, dist, 1e-9)).tocoo()
    pairs = {tuple(sorted((int(a), int(b)))) for a, b in zip(mst.row, mst.col)}
    iu, ju = np.triu_indices(nb, 1)
    for k in np.lexsort((ju, iu, dist[iu, ju])):
        if len(pairs) >= spec.n_transmission:
            break
        pairs.add((int(iu[k]), int(ju[k])))
    trans_nodes = np.array(sorted(pairs), dtype=np.int64)
    trans_len = dist[trans_nodes[:, 0], trans_nodes[:, 1]]
    trans_towers = np.array([tower_count(L, spec.tower_spacing_km) for L in trans_len], dtype=np.int64)
    mid = 0.5 * (bxy[trans_nodes[:, 0]] + bxy[trans_nodes[:, 1]])
    trans_tract = nearest(mid, cxy)

    # distribution: pole chains from the nearest substation towards the tract centroid
    feed = nearest(cxy, sub_xy)
    pole_xy, pole_tract, pole_sub, cond = [], [], [], []
    n_gen, n_sub = spec.n_generators, len(sub_xy)
    for ti, t in enumerate(tracts):
        n_p = poles_for(t.population, spec.customer_per_pole)
        s = int(feed[ti])
        upstream = n_gen + s
        for k in range(n_p):
            frac = (k + 1) / n_p
            pole_xy.append(sub_xy[s] + frac * (cxy[ti] - sub_xy[s]))
            pole_tract.append(ti)
            pole_sub.append(s)
            node = n_gen + n_sub + len(pole_xy) - 1
            cond.append((upstream, node))
            upstream = node
    return Grid(
        tract_ids=tuple(t.id for t in tracts),
        gen_xy=gen_xy, gen_tract=gen_tract.astype(np.int64),
        sub_xy=sub_xy, sub_tract=sub_tract.astype(np.int64),
        trans_nodes=trans_nodes, trans_length_km=trans_len, trans_towers=trans_towers,
        trans_tract=trans_tract.astype(np.int64),
        pole_xy=np.array(pole_xy, dtype=float).reshape(-1, 2),
        pole_tract=np.array(pole_tract, dtype=np.int64),
        pole_substation=np.array(pole_sub, dtype=np.int64),
        cond_nodes=np.array(cond, dtype=np.int64).reshape(-1, 2),
        cond_tract=np.array(pole_tract, dtype=np.int64),
        customer_per_pole=spec.customer_per_pole,
        tower_spacing_km=spec.tower_spacing_km,
    )


# ---------------------------------------------------------------------------
# damage

@dataclass(eq=False)
class DamageState:
    failed: np.ndarray  # bool per component
    tier: np.ndarray  # 0 intact, 1 moderate/failed, 2 severe, 3 complete
    fail_time_h: np.ndarray  # hour within the passage, nan if intact

    @classmethod
    def none(cls, n: int) -> "DamageState":
        return cls(np.zeros(n, bool), np.zeros(n, np.int8), np.full(n, np.nan))

    @property
    def n_failed(self) -> int:
        return int(self.failed.sum())

    def counts(self, grid: Grid) -> dict[str, int]:
        out = {}
        for c, name in enumerate(CLASS_NAMES):
            mask = grid.comp_class == c
            if c == SUBSTATION:
                for k in (1, 2, 3):
                    out[f"substation_{TIER_NAMES[k]}"] = int(np.sum(mask & (self.tier == k)))
            else:
                out[name] = int(np.sum(mask & self.failed))
        return out

    def __eq__(self, other):
        return (isinstance(other, DamageState) and np.array_equal(self.failed, other.failed)
                and np.array_equal(self.tier, other.tier)
                and np.array_equal(self.fail_time_h, other.fail_time_h, equal_nan=True))


def _tract_rows(grid: Grid, wind: WindField) -> np.ndarray:
    index = {t: i for i, t in enumerate(wind.tract_ids)}
    missing = [t for t in grid.tract_ids if t not in index]
    if missing:
        raise TractMismatch(f"wind field lacks tracts {missing[:5]}")
    return np.array([index[t] for t in grid.tract_ids], dtype=np.int64)


def component_fragility(grid: Grid, w: np.ndarray, params: FragilityParams) -> np.ndarray:
    """Failure probability per component at per-component wind ``w``.

    Substation entries hold the moderate (outermost) tier probability.
    """
    off, cls = grid.comp_offsets, grid.comp_class
    p = np.zeros(grid.n_components)
    s = cls == SUBSTATION
    p[s] = params.substation_tiers(w[s])[..., 0] if s.any() else 0.0
    t = cls == TOWER
    if t.any():
        p[t] = transmission_element_fragility(w[t], grid.trans_towers, *params.tower)
    ln = cls == LINE
    if ln.any():
        p[ln] = line_fragility(w[ln], *params.line)
    po = cls == POLE
    if po.any():
        p[po] = lognormal_fragility(w[po], *params.pole)
    c = cls == CONDUCTOR
    if c.any():
        p[c] = conductor_fragility(w[c], *params.conductor)
    return p


def _apply_draws(grid: Grid, w: np.ndarray, u: np.ndarray, params: FragilityParams):
    """Failed mask and tier for components exposed to wind ``w`` with uniforms ``u``."""
    p = component_fragility(grid, w, params)
    fail = u < p
    tier = fail.astype(np.int8)
    s = grid.comp_class == SUBSTATION
    if s.any():
        tiers = params.substation_tiers(w[s])  # nested: moderate >= severe >= complete
        depth = (u[s][:, None] < tiers).sum(axis=1)
        tier[s] = depth
        fail[s] = depth > 0
    return fail, tier


def sample_damage(grid: Grid, wind: WindField, params: FragilityParams | None = None,
                  mode: str = "peak", rng=None) -> DamageState:
    """Draw component failures from fragility curves.

    ``peak`` (default): one uniform per component against the fragility at its
    tract's peak wind; failure time is the peak hour.  ``hourly``: every hour
    each surviving component draws again against that hour's wind.
    """
    params = params or FragilityParams()
    rows = _tract_rows(grid, wind)
    series = wind.speeds[rows[grid.comp_tract]]  # (component, hour)
    n = grid.n_components
    if mode in ("peak", "peak-wind"):
        u = np.asarray(rng.random(n), dtype=float)
        w = series.max(axis=1) if series.size else np.zeros(n)
        fail, tier = _apply_draws(grid, w, u, params)
        t = np.where(fail, series.argmax(axis=1) if series.size else 0, np.nan).astype(float)
        return DamageState(fail, tier, t)
    if mode in ("hourly", "per-hour"):
        state = DamageState.none(n)
        for h in range(wind.duration_h):
            u = np.asarray(rng.random(n), dtype=float)
            fail, tier = _apply_draws(grid, series[:, h], u, params)
            new = fail & ~state.failed
            state.failed[new] = True
            state.tier[new] = tier[new]
            state.fail_time_h[new] = h
        return state
    raise ConfigError(f"unknown damage mode {mode!r}")


# ---------------------------------------------------------------------------
# connectivity

@dataclass(eq=False)
class EnergizationState:
    node: np.ndarray  # bool per node
    edge: np.ndarray  # bool per edge
    component: np.ndarray  # bool per component

    def pole_power(self, grid: Grid) -> np.ndarray:
        return self.node[grid.n_gen + grid.n_sub:]

    def has_power(self, grid: Grid, household_pole: np.ndarray) -> np.ndarray:
        return self.pole_power(grid)[np.asarray(household_pole, dtype=np.int64)]


def propagate_connectivity(grid: Grid, damage: DamageState | np.ndarray) -> EnergizationState:
    """Components still fed from a generator through intact components.

    Also applies the substation rules: a failed substation de-energizes its
    transmission, and a substation whose transmission has all failed goes dark.
    Plain reachability already implies both.
    """
    failed = damage.failed if isinstance(damage, DamageState) else np.asarray(damage, bool)
    nc = grid.node_comp
    node_ok = np.ones(grid.n_nodes, bool)
    node_ok[nc >= 0] = ~failed[nc[nc >= 0]]
    ec = grid.edge_comps
    edge_ok = ~(failed[ec[:, 0]] | failed[ec[:, 1]]) if len(ec) else np.zeros(0, bool)
    for s, edges in enumerate(grid.sub_transmission):
        if edges and not edge_ok[edges].any():
            node_ok[grid.n_gen + s] = False

    reached = np.zeros(grid.n_nodes, bool)
    queue = deque(g for g in range(grid.n_gen) if node_ok[g])
    reached[list(queue)] = True
    adj = grid.adjacency
    while queue:
        u = queue.popleft()
        for v, e in adj[u]:
            if not reached[v] and edge_ok[e] and node_ok[v]:
                reached[v] = True
                queue.append(v)

    en = grid.edge_nodes
    edge_on = edge_ok & reached[en[:, 0]] & reached[en[:, 1]] if len(en) else np.zeros(0, bool)
    comp = np.zeros(grid.n_components, bool)
    comp[nc[nc >= 0]] = reached[nc >= 0]
    comp[ec[:, 0]] = edge_on
    comp[ec[:, 1]] |= edge_on
    return EnergizationState(reached, edge_on, comp)


def _node_edge_values(grid: Grid, comp_value: np.ndarray, generator_value: float, combine):
    nc = grid.node_comp
    node_v = np.full(grid.n_nodes, generator_value, dtype=float)
    node_v[nc >= 0] = comp_value[nc[nc >= 0]]
    ec = grid.edge_comps
    edge_v = combine(comp_value[ec[:, 0]], comp_value[ec[:, 1]]) if len(ec) else np.zeros(0)
    return node_v, edge_v


def energize_times(grid: Grid, available_h: np.ndarray) -> np.ndarray:
    """Earliest time each node is fed, given when each component becomes usable.

    ``available_h`` is 0 (or any start time) for intact components and the
    repair end for damaged ones.  A node is fed at ``t`` when some generator
    path has every node and edge usable by ``t``: a min-max path problem.
    """
    node_v, edge_v = _node_edge_values(grid, np.asarray(available_h, float), -math.inf, np.maximum)
    best = np.full(grid.n_nodes, math.inf)
    heap = []
    for g in range(grid.n_gen):
        best[g] = node_v[g]
        heap.append((node_v[g], g))
    heapq.heapify(heap)
    adj = grid.adjacency
    while heap:
        d, u = heapq.heappop(heap)
        if d > best[u]:
            continue
        for v, e in adj[u]:
            cand = max(d, edge_v[e], node_v[v])
            if cand < best[v]:
                best[v] = cand
                heapq.heappush(heap, (cand, v))
    return best


def deenergize_times(grid: Grid, fail_time_h: np.ndarray) -> np.ndarray:
    """Time each node loses its last generator path (inf if it never does).

    ``fail_time_h`` is inf for components that never fail.  Max-min path
    problem, the mirror image of :func:`energize_times`.
    """
    ft = np.where(np.isnan(fail_time_h), math.inf, fail_time_h)
    node_v, edge_v = _node_edge_values(grid, ft, math.inf, np.minimum)
    best = np.full(grid.n_nodes, -math.inf)
    heap = []
    for g in range(grid.n_gen):
        best[g] = node_v[g]
        heap.append((-node_v[g], g))
    heapq.heapify(heap)
    adj = grid.adjacency
    while heap:
        d, u = heapq.heappop(heap)
        d = -d
        if d < best[u]:
            continue
        for v, e in adj[u]:
            cand = min(d, edge_v[e], node_v[v])
            if cand > best[v]:
                best[v] = cand
                heapq.heappush(heap, (-cand, v))
    return best
