"""Wind fragility curves for power-network components.

Default parameters for substations, towers and poles are calibration
placeholders: the source material publishes these only as plotted curves.
The line thresholds (30/60 m/s) and the conductor power law are published.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict

import numpy as np
from scipy.special import ndtr

from .errors import ConfigError

TIERS = ("moderate", "severe", "complete")


def lognormal_fragility(w, mu: float, sigma: float):
    """Lognormal CDF ``Phi((ln w - mu) / sigma)``; zero at ``w == 0``.

    Accepts a scalar or an array of wind speeds.
    """
    if sigma <= 0:
        raise ConfigError("sigma must be > 0")
    w = np.asarray(w, dtype=float)
    with np.errstate(divide="ignore"):
        z = (np.log(w) - mu) / sigma
    p = np.where(w > 0, ndtr(z), 0.0)
    return float(p) if p.ndim == 0 else p


def transmission_element_fragility(w, n_towers, mu: float, sigma: float):
    """Failure probability of a span carried by ``n_towers`` independent towers."""
    n = np.asarray(n_towers)
    if np.any(n < 1):
        raise ConfigError("a transmission element needs at least one tower")
    pk = np.asarray(lognormal_fragility(w, mu, sigma))
    # 1 - (1 - p)^n, computed as -expm1(n * log1p(-p)) to keep small p accurate
    with np.errstate(divide="ignore"):
        p = np.where(pk >= 1.0, 1.0, -np.expm1(n * np.log1p(-np.minimum(pk, 1.0))))
    return float(p) if p.ndim == 0 else p


def line_fragility(w, w_critical: float = 30.0, w_collapse: float = 60.0, floor: float = 0.01):
    """Piecewise-linear line fragility: ``floor`` below critical, 1 at collapse.

    A calm wind (``w == 0``) gives 0 rather than the floor.
    """
    if not w_critical < w_collapse:
        raise ConfigError("w_critical must be below w_collapse")
    w = np.asarray(w, dtype=float)
    mid = floor + (w - w_critical) / (w_collapse - w_critical) * (1.0 - floor)
    p = np.where(w < w_critical, floor, np.where(w >= w_collapse, 1.0, mid))
    p = np.where(w > 0, p, 0.0)
    return float(p) if p.ndim == 0 else p


def conductor_fragility(w, a: float = 8e-12, b: float = 5.1731):
    w = np.asarray(w, dtype=float)
    if np.any(w < 0):
        raise ConfigError("wind speed must be >= 0")
    p = np.minimum(1.0, a * w ** b)
    return float(p) if p.ndim == 0 else p


@dataclass
class FragilityParams:
    # (mu, sigma) in ln(m/s), ordered moderate, severe, complete
    substation: tuple = ((math.log(70.0), 0.35), (math.log(85.0), 0.35), (math.log(100.0), 0.35))
    tower: tuple = (math.log(55.0), 0.25)
    line: tuple = (30.0, 60.0)
    conductor: tuple = (8e-12, 5.1731)
    pole: tuple = (math.log(48.0), 0.30)

    def __post_init__(self):
        self.substation = tuple(tuple(map(float, p)) for p in self.substation)
        self.tower = tuple(map(float, self.tower))
        self.line = tuple(map(float, self.line))
        self.conductor = tuple(map(float, self.conductor))
        self.pole = tuple(map(float, self.pole))
        if len(self.substation) != 3:
            raise ConfigError("substation needs moderate/severe/complete parameters")
        for _, s in (*self.substation, self.tower, self.pole):
            if s <= 0:
                raise ConfigError("fragility sigma must be > 0")
        mus = [m for m, _ in self.substation]
        if not mus[0] <= mus[1] <= mus[2]:
            raise ConfigError("substation tier medians must increase moderate -> complete")
        if not self.line[0] < self.line[1]:
            raise ConfigError("line w_critical must be below w_collapse")
        if self.conductor[0] <= 0 or self.conductor[1] <= 0:
            raise ConfigError("conductor coefficients must be positive")

    @classmethod
    def from_dict(cls, d: dict | None) -> "FragilityParams":
        return cls(**(d or {}))

    def to_dict(self) -> dict:
        return asdict(self)

    def substation_tiers(self, w):
        """Exceedance probabilities per tier, shape ``(..., 3)``.

        Columns are forced nested (complete <= severe <= moderate) so a single
        uniform draw picks a consistent tier even if sigmas differ.
        """
        p = np.stack([np.asarray(lognormal_fragility(w, m, s)) for m, s in self.substation], axis=-1)
        return np.minimum.accumulate(p, axis=-1)
