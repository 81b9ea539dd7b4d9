"""Repair scheduling under a growing crew pool.

Repairs start when the hurricane has passed.  Every hour the scheduler walks
the priority list and starts each pending task whose team requirement fits
in the free pool; a task holds its teams until it ends, and they are
returned at the first hourly tick at or after the end time.
"""
from __future__ import annotations

import csv
import heapq
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, InfeasibleTask, UnknownStrategy
from .grid import CLASS_NAMES, CONDUCTOR, LINE, POLE, SUBSTATION, TOWER, DamageState, Grid, energize_times
from .hazard import Tract

# (mean h, sd h, teams); substations keyed by tier 1..3
REPAIR_TABLE = {
    (SUBSTATION, 1): (72.0, 36.0, 6),
    (SUBSTATION, 2): (168.0, 84.0, 14),
    (SUBSTATION, 3): (720.0, 360.0, 60),
    (TOWER, 1): (72.0, 36.0, 6),
    (LINE, 1): (48.0, 24.0, 4),
    (POLE, 1): (10.0, 5.0, 1),
    (CONDUCTOR, 1): (8.0, 4.0, 1),
}
MIN_DURATION_H = 0.5
STRATEGIES = ("component", "population", "svi")


@dataclass(frozen=True)
class ResourceProfile:
    initial_teams: float = 800
    growth_per_hour: float = 15
    growth_horizon_h: float = 168

    def __post_init__(self):
        if min(self.initial_teams, self.growth_per_hour, self.growth_horizon_h) < 0:
            raise ConfigError("resource profile values must be >= 0")

    @property
    def cap(self) -> float:
        return self.initial_teams + self.growth_per_hour * self.growth_horizon_h


def resource_level(t_h: float, profile: ResourceProfile = ResourceProfile()) -> float:
    return profile.initial_teams + profile.growth_per_hour * min(max(t_h, 0.0), profile.growth_horizon_h)


def task_spec(cls: int, tier: int) -> tuple[float, float, int]:
    return REPAIR_TABLE[(cls, tier if cls == SUBSTATION else 1)]


def sample_durations(grid: Grid, damage: DamageState, rng: np.random.Generator) -> np.ndarray:
    """Repair hours for every failed component, drawn in component order.

    Drawing in component order (not priority order) keeps durations identical
    across strategies for the same stream.
    """
    out = np.full(grid.n_components, np.nan)
    for c in np.flatnonzero(damage.failed):
        mean, sd, _ = task_spec(int(grid.comp_class[c]), int(damage.tier[c]))
        out[c] = max(MIN_DURATION_H, rng.normal(mean, sd))
    return out


def _tract_rank(tracts, key) -> dict[int, int]:
    order = sorted(range(len(tracts)), key=lambda i: (-key(tracts[i]), tracts[i].id))
    return {ti: r for r, ti in enumerate(order)}


def plan_priorities(strategy: str, grid: Grid, damage: DamageState, tracts, rng=None) -> list[int]:
    """Damaged components in repair priority order.

    component: substations (most severe first), transmission, then all
    distribution in random order.  population / svi: tracts are ranked
    (largest population or highest SVI first); for each tract in turn, the
    damaged backbone on its cheapest generator-to-substation path, generator
    outward; then any remaining backbone; then distribution tract by tract
    in chain order.
    """
    if strategy not in STRATEGIES:
        raise UnknownStrategy(f"unknown restoration strategy {strategy!r}; expected one of {STRATEGIES}")
    failed = damage.failed
    cls = grid.comp_class
    off = grid.comp_offsets
    subs = [c for c in np.flatnonzero(failed & (cls == SUBSTATION)).tolist()]
    trans = [c for c in np.flatnonzero(failed & ((cls == TOWER) | (cls == LINE))).tolist()]
    dist = [c for c in np.flatnonzero(failed & ((cls == POLE) | (cls == CONDUCTOR))).tolist()]

    def trans_elem(c):
        return c - off[TOWER] if cls[c] == TOWER else c - off[LINE]

    if strategy == "component":
        subs.sort(key=lambda c: (-int(damage.tier[c]), c))
        trans.sort(key=lambda c: (trans_elem(c), int(cls[c])))
        if rng is None:
            raise ConfigError("component strategy needs an rng for the distribution shuffle")
        perm = rng.permutation(len(dist))
        return subs + trans + [dist[i] for i in perm]

    tracts = list(tracts)
    if [t.id for t in tracts] != list(grid.tract_ids):
        raise ConfigError("tract list does not match the grid")
    key = (lambda t: t.population) if strategy == "population" else (lambda t: t.svi)
    rank = _tract_rank(tracts, key)
    backbone = []
    seen = set()
    chains = grid.tract_chains
    ordered_tracts = sorted(chains, key=lambda t: rank[t])
    for ti in ordered_tracts:
        s = int(grid.pole_substation[chains[ti][1] - off[POLE]])
        for c in _restoration_path(grid, failed, grid.n_gen + s):
            if c not in seen:
                seen.add(c)
                backbone.append(c)
    # backbone not on any tract's path, in component order
    backbone += [c for c in subs + trans if c not in seen]
    ordered_dist = []
    for ti in ordered_tracts:
        ordered_dist.extend(c for c in chains[ti] if failed[c])
    return backbone + ordered_dist


def _restoration_path(grid: Grid, failed: np.ndarray, target: int) -> list[int]:
    """Damaged backbone components on the generator path to ``target`` that
    needs the fewest repairs, listed from the generator outward."""
    nc, ec = grid.node_comp, grid.edge_comps
    n_bb = grid.n_gen + grid.n_sub
    cost = np.full(n_bb, np.inf)
    prev = np.full(n_bb, -1)
    prev_e = np.full(n_bb, -1)
    heap = [(0, g) for g in range(grid.n_gen)]
    cost[:grid.n_gen] = 0
    adj = grid.adjacency
    while heap:
        d, u = heapq.heappop(heap)
        if d > cost[u]:
            continue
        if u == target:
            break
        for v, e in adj[u]:
            if v >= n_bb:
                continue
            step = int(failed[ec[e, 0]]) + int(failed[ec[e, 1]]) + (int(failed[nc[v]]) if v >= grid.n_gen else 0)
            if d + step < cost[v]:
                cost[v] = d + step
                prev[v], prev_e[v] = u, e
                heapq.heappush(heap, (d + step, v))
    if not np.isfinite(cost[target]):
        return []
    out = []
    v = target
    while v >= grid.n_gen:
        e = prev_e[v]
        out.extend(c for c in (nc[v], ec[e, 1], ec[e, 0]) if failed[c])
        v = prev[v]
    return [int(c) for c in reversed(out)]


@dataclass(eq=False)
class RepairSchedule:
    component: np.ndarray
    component_class: np.ndarray
    start_h: np.ndarray  # absolute hours
    end_h: np.ndarray
    teams: np.ndarray
    restoration_start_h: float = 0.0

    def __len__(self) -> int:
        return len(self.component)

    def available_times(self, n_components: int) -> np.ndarray:
        """Per component: -inf if never damaged, else repair end (absolute hours)."""
        out = np.full(n_components, -math.inf)
        out[self.component] = self.end_h
        return out

    @property
    def makespan_h(self) -> float:
        return float(self.end_h.max() - self.restoration_start_h) if len(self) else 0.0

    def teams_in_use(self, t_h: float) -> float:
        running = (self.start_h <= t_h) & (t_h < self.end_h)
        return float(self.teams[running].sum())

    def rows(self, grid: Grid | None = None) -> list[list]:
        ids = grid.comp_ids if grid is not None else None
        return [[ids[c] if ids else str(c), CLASS_NAMES[k], s, e, t] for c, k, s, e, t in
                zip(self.component.tolist(), self.component_class.tolist(), self.start_h.tolist(),
                    self.end_h.tolist(), self.teams.tolist())]

    def export_csv(self, path, grid: Grid | None = None) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["component_id", "class", "start_h", "end_h", "teams"])
            for cid, k, s, e, t in self.rows(grid):
                w.writerow([cid, k, format(s, ".15g"), format(e, ".15g"), t])


def schedule_repairs(grid: Grid, damage: DamageState, priorities, profile: ResourceProfile = ResourceProfile(),
                     rng: np.random.Generator | None = None, start_h: float = 0.0,
                     durations: np.ndarray | None = None) -> RepairSchedule:
    """Greedy hourly list schedule of every damaged component."""
    order = [int(c) for c in priorities]
    damaged = set(np.flatnonzero(damage.failed).tolist())
    if set(order) != damaged or len(order) != len(damaged):
        raise ConfigError("priorities must list every damaged component exactly once")
    if durations is None:
        if rng is None:
            raise ConfigError("need an rng or explicit durations")
        durations = sample_durations(grid, damage, rng)
    n = len(order)
    teams = np.array([task_spec(int(grid.comp_class[c]), int(damage.tier[c]))[2] for c in order], dtype=np.int64)
    dur = np.array([durations[c] for c in order], dtype=float)
    if n and np.any(~(dur > 0)):
        raise ConfigError("repair durations must be positive")
    if n and teams.max() > profile.cap:
        c = order[int(np.argmax(teams))]
        raise InfeasibleTask(f"component {c} needs {teams.max()} teams; the pool never exceeds {profile.cap:g}")

    start = np.full(n, np.nan)
    end = np.full(n, np.nan)
    pending = list(range(n))
    running: list[tuple[float, int]] = []
    in_use = 0
    t = 0
    while pending:
        while running and running[0][0] <= t:
            _, i = heapq.heappop(running)
            in_use -= teams[i]
        free = resource_level(t, profile) - in_use
        still = []
        for k, i in enumerate(pending):
            if free < 1:
                still.extend(pending[k:])
                break
            if teams[i] <= free:
                start[i] = t
                end[i] = t + dur[i]
                free -= teams[i]
                in_use += teams[i]
                heapq.heappush(running, (end[i], i))
            else:
                still.append(i)
        pending = still
        if not pending:
            break
        # skip idle hours: nothing changes until the pool grows or a task ends
        if t < profile.growth_horizon_h and profile.growth_per_hour > 0:
            t += 1
        else:
            t = max(t + 1, math.ceil(running[0][0]))
    return RepairSchedule(
        component=np.array(order, dtype=np.int64),
        component_class=np.array([int(grid.comp_class[c]) for c in order], dtype=np.int8),
        start_h=start_h + start, end_h=start_h + end, teams=teams, restoration_start_h=start_h)


def power_back_times(grid: Grid, schedule: RepairSchedule) -> np.ndarray:
    """Hour each node is re-fed under the schedule (-inf if it never lost its path)."""
    return energize_times(grid, schedule.available_times(grid.n_components))
