"""Hurricane wind exposure per census tract.

The parametric field is ``v_max(category) * ramp(t) * exp(-d / decay_length)``
where ``d`` is the tract's distance to the storm centre at hour ``t`` and the
ramp rises linearly from 0 at hour 0 to 1 at mid-passage and back down.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConfigError, IncompleteGrid, MalformedRow, NegativeSpeed, UnknownTract

# m/s, roughly mid-band Saffir-Simpson sustained winds
DEFAULT_VMAX = {1: 38.0, 2: 46.0, 3: 54.0, 4: 65.0}


@dataclass(frozen=True)
class Tract:
    id: str
    x: float
    y: float
    population: int
    svi: float = 0.5
    flood_zone_fraction: float = 0.0

    def __post_init__(self):
        if self.population < 0:
            raise ConfigError(f"tract {self.id}: negative population")
        if not 0.0 <= self.svi <= 1.0:
            raise ConfigError(f"tract {self.id}: svi {self.svi} outside [0, 1]")
        if not 0.0 <= self.flood_zone_fraction <= 1.0:
            raise ConfigError(f"tract {self.id}: flood_zone_fraction outside [0, 1]")

    @property
    def centroid(self) -> tuple[float, float]:
        return (self.x, self.y)


@dataclass(frozen=True)
class HurricaneSpec:
    category: int
    track: tuple[tuple[float, float, float], ...]  # (hour, x_km, y_km)
    duration_h: int = 24
    decay_length_km: float = 50.0
    noise_sigma: float = 0.0
    vmax: dict = field(default_factory=lambda: dict(DEFAULT_VMAX))

    def __post_init__(self):
        if self.category not in (1, 2, 3, 4):
            raise ConfigError(f"hurricane category must be 1-4, got {self.category}")
        if self.duration_h <= 0:
            raise ConfigError("duration_h must be positive")
        if self.decay_length_km <= 0:
            raise ConfigError("decay_length_km must be positive")
        if self.noise_sigma < 0:
            raise ConfigError("noise_sigma must be >= 0")
        if not self.track:
            raise ConfigError("track needs at least one point")
        times = [p[0] for p in self.track]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ConfigError("track timestamps must be strictly increasing")

    @property
    def v_max(self) -> float:
        return float(self.vmax[self.category])

    def center(self, hour: float) -> tuple[float, float]:
        t = [p[0] for p in self.track]
        x = [p[1] for p in self.track]
        y = [p[2] for p in self.track]
        return float(np.interp(hour, t, x)), float(np.interp(hour, t, y))

    @classmethod
    def crossing(cls, category: int, tracts: Sequence[Tract], duration_h: int = 24,
                 decay_length_km: float = 50.0, heading: str = "north", **kw) -> "HurricaneSpec":
        """Straight track through the middle of the tract set, centred there at mid-passage."""
        xs = np.array([t.x for t in tracts])
        ys = np.array([t.y for t in tracts])
        cx, cy = float(xs.mean()), float(ys.mean())
        half = 1.5 * max(np.ptp(xs), np.ptp(ys), 1.0)
        if heading == "north":
            a, b = (cx, cy - half), (cx, cy + half)
        elif heading == "east":
            a, b = (cx - half, cy), (cx + half, cy)
        else:
            raise ConfigError(f"unknown heading {heading!r}")
        track = ((0.0, a[0], a[1]), (float(duration_h), b[0], b[1]))
        return cls(category, track, duration_h, decay_length_km, **kw)


@dataclass(frozen=True, eq=False)
class WindField:
    tract_ids: tuple[str, ...]
    speeds: np.ndarray  # (tract, hour) m/s

    def __post_init__(self):
        if self.speeds.shape[0] != len(self.tract_ids):
            raise ConfigError("speeds rows must match tract ids")
        if np.any(self.speeds < 0):
            raise NegativeSpeed("wind speeds must be >= 0")

    @property
    def duration_h(self) -> int:
        return int(self.speeds.shape[1])

    def row(self, tract_id: str) -> int:
        try:
            return self.tract_ids.index(tract_id)
        except ValueError:
            raise UnknownTract(tract_id) from None

    def peaks(self) -> np.ndarray:
        return self.speeds.max(axis=1)

    def peak_hours(self) -> np.ndarray:
        return self.speeds.argmax(axis=1)

    def __eq__(self, other):
        return (isinstance(other, WindField) and self.tract_ids == other.tract_ids
                and np.array_equal(self.speeds, other.speeds))


def ramp(hour: float, duration_h: float) -> float:
    """Triangular 0 -> 1 -> 0 over the passage, peaking at ``duration_h / 2``."""
    half = duration_h / 2.0
    return max(0.0, 1.0 - abs(hour - half) / half)


def parametric_wind_series(spec: HurricaneSpec, tracts: Sequence[Tract],
                           rng: np.random.Generator | None = None) -> WindField:
    if not tracts:
        raise ConfigError("at least one tract is required")
    xy = np.array([[t.x, t.y] for t in tracts], dtype=float)
    hours = np.arange(spec.duration_h)
    centers = np.array([spec.center(h) for h in hours])
    g = np.array([ramp(h, spec.duration_h) for h in hours])
    d = np.hypot(xy[:, None, 0] - centers[None, :, 0], xy[:, None, 1] - centers[None, :, 1])
    speeds = spec.v_max * g[None, :] * np.exp(-d / spec.decay_length_km)
    if spec.noise_sigma > 0:
        if rng is None:
            raise ConfigError("noise_sigma > 0 needs an rng")
        speeds = speeds * rng.lognormal(0.0, spec.noise_sigma, size=speeds.shape)
    return WindField(tuple(t.id for t in tracts), speeds)


def peak_wind(field: WindField, tract: str) -> float:
    return float(field.speeds[field.row(tract)].max())


def load_wind_field(path) -> WindField:
    """Read ``tract_id,hour,wind_ms`` rows; every (tract, hour) cell must be present."""
    cells: dict[tuple[str, int], float] = {}
    order: list[str] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["tract_id", "hour", "wind_ms"]:
            raise MalformedRow(f"{path}: expected header tract_id,hour,wind_ms, got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 3:
                raise MalformedRow(f"{path}:{lineno}: expected 3 fields, got {len(row)}")
            tid = row[0].strip()
            try:
                hour = int(row[1])
                w = float(row[2])
            except ValueError:
                raise MalformedRow(f"{path}:{lineno}: cannot parse {row}") from None
            if hour < 0 or not math.isfinite(w):
                raise MalformedRow(f"{path}:{lineno}: bad hour or speed {row}")
            if w < 0:
                raise NegativeSpeed(f"{path}:{lineno}: negative wind speed {w}")
            if (tid, hour) in cells:
                raise MalformedRow(f"{path}:{lineno}: duplicate cell ({tid}, {hour})")
            if tid not in order:
                order.append(tid)
            cells[(tid, hour)] = w
    if not cells:
        raise IncompleteGrid(f"{path}: no data rows")
    n_hours = max(h for _, h in cells) + 1
    speeds = np.empty((len(order), n_hours))
    for i, tid in enumerate(order):
        for h in range(n_hours):
            try:
                speeds[i, h] = cells[(tid, h)]
            except KeyError:
                raise IncompleteGrid(f"{path}: missing cell ({tid}, {h})") from None
    return WindField(tuple(order), speeds)


def write_wind_field(field: WindField, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["tract_id", "hour", "wind_ms"])
        for i, tid in enumerate(field.tract_ids):
            for h in range(field.duration_h):
                w.writerow([tid, h, repr(float(field.speeds[i, h]))])


TRACT_COLUMNS = ["tract_id", "x_km", "y_km", "population", "svi", "flood_zone_fraction"]


def load_tracts(path) -> list[Tract]:
    out = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(TRACT_COLUMNS) - set(reader.fieldnames or [])
        if missing:
            raise MalformedRow(f"{path}: missing columns {sorted(missing)}")
        for row in reader:
            try:
                out.append(Tract(row["tract_id"], float(row["x_km"]), float(row["y_km"]),
                                 int(row["population"]), float(row["svi"]),
                                 float(row["flood_zone_fraction"])))
            except ValueError as exc:
                raise MalformedRow(f"{path}: {exc}") from None
    if not out:
        raise ConfigError(f"{path}: no tracts")
    return out


def write_tracts(tracts: Sequence[Tract], path) -> None:
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACT_COLUMNS)
        for t in tracts:
            w.writerow([t.id, repr(t.x), repr(t.y), t.population, repr(t.svi), repr(t.flood_zone_fraction)])
