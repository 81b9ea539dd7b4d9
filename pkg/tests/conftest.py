import numpy as np
import pytest

from gridshock.grid import Grid
from gridshock.hazard import Tract


def make_grid(n_gen, n_sub, trans, chains, tract_ids=("A",), towers=None):
    """Hand-built grid.

    ``trans``: (u, v) node pairs over generators 0..n_gen-1 and substations
    n_gen..n_gen+n_sub-1.  ``chains``: (substation index, n_poles, tract index)
    per radial pole chain.
    """
    trans = np.array(trans, dtype=np.int64).reshape(-1, 2)
    pole_tract, pole_sub, cond = [], [], []
    base = n_gen + n_sub
    for s, n_p, ti in chains:
        up = n_gen + s
        for _ in range(n_p):
            node = base + len(pole_tract)
            pole_tract.append(ti)
            pole_sub.append(s)
            cond.append((up, node))
            up = node
    n_pole = len(pole_tract)
    n_t = len(trans)
    return Grid(
        tract_ids=tuple(tract_ids),
        gen_xy=np.zeros((n_gen, 2)), gen_tract=np.zeros(n_gen, np.int64),
        sub_xy=np.arange(2 * n_sub, dtype=float).reshape(-1, 2), sub_tract=np.zeros(n_sub, np.int64),
        trans_nodes=trans, trans_length_km=np.ones(n_t),
        trans_towers=np.array(towers if towers is not None else [1] * n_t, dtype=np.int64),
        trans_tract=np.zeros(n_t, np.int64),
        pole_xy=np.zeros((n_pole, 2)), pole_tract=np.array(pole_tract, np.int64),
        pole_substation=np.array(pole_sub, np.int64),
        cond_nodes=np.array(cond, np.int64).reshape(-1, 2), cond_tract=np.array(pole_tract, np.int64),
    )


@pytest.fixture
def radial():
    # G0 - S0 - S1, S1 feeds 3 poles
    return make_grid(1, 2, [(0, 1), (1, 2)], [(1, 3, 0)])


@pytest.fixture
def small_tracts():
    return [Tract("A", 0.0, 0.0, 400, 0.2, 0.1), Tract("B", 10.0, 0.0, 200, 0.9, 0.5),
            Tract("C", 0.0, 10.0, 120, 0.5, 0.0)]
