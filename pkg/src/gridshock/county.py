"""A synthetic Harris-County-like study area.

No tract-level census data ships with the package, so the default study area
is generated: a jittered grid of tracts over roughly 60 x 60 km, with a social
vulnerability gradient, minority share and income tied to SVI, and flood-zone
exposure rising towards the coast (south-east).  Tract customer counts are
chosen so that the default grid has exactly 1433 poles at 40 customers each.
"""
from __future__ import annotations

import numpy as np

from .hazard import Tract
from .population import INCOME_LEVELS, Marginals

COUNTY_SEED = 20170825  # fixed: the study area is part of the configuration, not of a replication
N_POLES = 1433


def harris_like_tracts(side: int = 12, spacing_km: float = 5.0, n_poles: int = N_POLES,
                       customer_per_pole: int = 40, seed: int = COUNTY_SEED) -> list[Tract]:
    rng = np.random.default_rng(seed)
    n = side * side
    gx, gy = np.meshgrid(np.arange(side), np.arange(side))
    x = gx.ravel() * spacing_km + rng.uniform(-0.3, 0.3, n) * spacing_km
    y = gy.ravel() * spacing_km + rng.uniform(-0.3, 0.3, n) * spacing_km

    # denser near the centre, lognormal scatter
    span = (side - 1) * spacing_km
    r = np.hypot(x - span / 2, y - span / 2) / span
    weight = np.exp(-2.0 * r) * rng.lognormal(0.0, 0.5, n)
    poles = np.maximum(1, np.floor(weight / weight.sum() * n_poles)).astype(int)
    # hand out the remainder to the heaviest tracts so the total is exact
    order = np.argsort(-weight, kind="stable")
    k = 0
    while poles.sum() < n_poles:
        poles[order[k % n]] += 1
        k += 1
    while poles.sum() > n_poles:
        i = order[k % n]
        if poles[i] > 1:
            poles[i] -= 1
        k += 1
    customers = poles * customer_per_pole - rng.integers(0, customer_per_pole, n)

    east = x / span
    south = 1.0 - y / span
    svi = np.clip(0.15 + 0.5 * east * (1 - 0.4 * south) + 0.25 * (1 - r) + rng.normal(0, 0.08, n), 0.01, 0.99)
    flood = np.clip(0.05 + 0.45 * south * east + rng.normal(0, 0.05, n), 0.0, 0.9)
    return [Tract(f"T{i:03d}", float(x[i]), float(y[i]), int(customers[i]), float(svi[i]), float(flood[i]))
            for i in range(n)]


def harris_like_marginals(tracts: list[Tract]) -> dict[str, Marginals]:
    """Per-tract attribute shares; vulnerable tracts skew minority and low income."""
    out = {}
    for t in tracts:
        v = t.svi
        # income brackets 1..7: shift mass to the low end as svi rises
        centre = 5.2 - 3.6 * v
        w = np.exp(-0.5 * ((np.arange(1, INCOME_LEVELS + 1) - centre) / 1.8) ** 2)
        out[t.id] = Marginals(
            income=tuple(float(p) for p in w / w.sum()),
            racial_minority=min(0.95, 0.2 + 0.75 * v),
            elderly=0.15 + 0.1 * (1 - v),
            child_under_10=0.2 + 0.1 * v,
            mobility_issue=0.06 + 0.08 * v,
            medical_condition=0.12 + 0.08 * v,
            chronic_disease=0.25 + 0.15 * v,
            owner=max(0.2, 0.75 - 0.45 * v),
            vehicle_missing=0.03 + 0.15 * v,
            social_capital=0.6 - 0.2 * v,
        )
    return out
