from __future__ import annotations

import numpy as np
from scipy.spatial.distance import cdist


def apportion(weights, total: int) -> np.ndarray:
    """Largest-remainder split of ``total`` in proportion to ``weights`` (ties -> lower index)."""
    w = np.asarray(weights, dtype=float)
    if w.sum() <= 0:
        w = np.ones_like(w)
    quota = w / w.sum() * total
    base = np.floor(quota).astype(np.int64)
    rest = int(total) - int(base.sum())
    order = sorted(range(len(w)), key=lambda i: (-(quota[i] - base[i]), i))
    base[order[:rest]] += 1
    return base


def nearest(points, targets) -> np.ndarray:
    """Index of the nearest target for each point; ties go to the lowest index."""
    return np.argmin(cdist(np.asarray(points, float), np.asarray(targets, float)), axis=1)
