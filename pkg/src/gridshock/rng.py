"""Seed discipline: master seed -> replication seed -> per-subsystem streams.

Each subsystem draws from its own generator so that changing how many numbers
one subsystem consumes never shifts the draws of another.
"""
from __future__ import annotations

import numpy as np

SUBSYSTEMS = ("population", "grid", "network", "diffusion", "hazard", "damage", "repair", "tolerance")


def replication_seeds(master_seed: int, n: int, start: int = 0) -> list[int]:
    """Stable 63-bit seeds for replications ``start .. start+n-1``.

    Seed ``k`` depends only on (master_seed, k), so extending a batch never
    changes earlier replications.
    """
    out = []
    for k in range(start, start + n):
        ss = np.random.SeedSequence(entropy=master_seed, spawn_key=(k,))
        out.append(int(ss.generate_state(1, np.uint64)[0] >> np.uint64(1)))
    return out


def streams(seed: int) -> dict[str, np.random.Generator]:
    """One independent generator per subsystem, keyed by name."""
    root = np.random.SeedSequence(seed)
    children = root.spawn(len(SUBSYSTEMS))
    return {name: np.random.default_rng(ch) for name, ch in zip(SUBSYSTEMS, children)}
