import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import logit

from gridshock.diffusion import (AdoptionParams, DiffusionState, Forewarning, InfoParams, NetworkParams,
                                 SocialNetwork, adoption_probability, build_social_network, peer_fraction,
                                 run_forewarning, step_adoption, step_information)
from gridshock.errors import ConfigError
from gridshock.hazard import Tract
from gridshock.population import Marginals, derive_traits, synthesize_households
from gridshock.regressions import CoefficientSet


def _quiet_info(**kw):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return InfoParams(**kw)


# networks -------------------------------------------------------------------

def test_small_world_lattice_degree():
    net = build_social_network("small_world", NetworkParams(k=6, p_rw=0.0), 1000, np.random.default_rng(0))
    assert np.all(net.degree == 6)


def test_scale_free_edge_count():
    net = build_social_network("scale_free", NetworkParams(m=3), 1000, np.random.default_rng(0))
    assert net.n_edges == 3 * (1000 - 3) + 3
    assert net.degree.max() > 5 * net.degree.mean()


def test_random_mean_degree():
    net = build_social_network("random", NetworkParams(k=6), 4000, np.random.default_rng(1))
    assert abs(net.degree.mean() - 6) < 0.2


def test_distance_network():
    xy = np.array([[0.0, 0.0], [0.3, 0.0], [2.0, 0.0], [2.0, 0.4]])
    assert build_social_network("distance", NetworkParams(radius_km=0.0), xy, np.random.default_rng(0)).n_edges == 0
    net = build_social_network("distance", NetworkParams(radius_km=0.5), xy, np.random.default_rng(0))
    assert net.edges().tolist() == [[0, 1], [2, 3]]
    with pytest.raises(ConfigError):
        build_social_network("distance", NetworkParams(), 4, np.random.default_rng(0))


def test_network_errors():
    rng = np.random.default_rng(0)
    with pytest.raises(ConfigError):
        build_social_network("small_world", NetworkParams(k=10), 10, rng)
    with pytest.raises(ConfigError):
        build_social_network("random", NetworkParams(k=5), 5, rng)
    with pytest.raises(ConfigError):
        build_social_network("scale_free", NetworkParams(m=4), 4, rng)
    with pytest.raises(ConfigError):
        build_social_network("lattice", NetworkParams(), 10, rng)
    with pytest.raises(ConfigError):
        SocialNetwork.from_edges("random", 3, [(1, 1)])


@pytest.mark.parametrize("kind", ["random", "small_world", "scale_free"])
def test_networks_undirected_simple(kind):
    net = build_social_network(kind, NetworkParams(), 300, np.random.default_rng(3))
    assert np.all(net.rows != net.indices)
    pairs = set(zip(net.rows.tolist(), net.indices.tolist()))
    assert all((v, u) in pairs for u, v in pairs)
    assert len(pairs) == len(net.indices)


def test_edge_list_export(tmp_path):
    net = SocialNetwork.from_edges("random", 4, [(2, 1), (0, 3), (1, 2)])
    net.export_edge_list(tmp_path / "e.csv")
    assert (tmp_path / "e.csv").read_text() == "source,target\n0,3\n1,2\n"


# information ----------------------------------------------------------------

def _star(n_leaves):
    return SocialNetwork.from_edges("random", n_leaves + 1, [(0, i) for i in range(1, n_leaves + 1)])


def test_official_reach_all():
    net = _star(5)
    s = step_information(0, DiffusionState.fresh(6), net, InfoParams(1.0, 0.5, 0.1), np.random.default_rng(0))
    assert s.informed.all() and np.all(s.inform_day == 0)


def test_no_probability_no_growth():
    net = _star(5)
    s = DiffusionState.fresh(6)
    s.informed[0] = True
    s.inform_day[0] = 0
    info = InfoParams(0.0, 0.0, 0.0)
    rng = np.random.default_rng(0)
    for day in range(20):
        step_information(day, s, net, info, rng)
    assert s.informed.tolist() == [True] + [False] * 5


def test_star_leaf_probability():
    n_leaves = 10_000
    net = _star(n_leaves)
    s = DiffusionState.fresh(n_leaves + 1)
    s.informed[0] = s.prepared[0] = True
    step_information(0, s, net, _quiet_info(p_official=0.0, p_prepared=0.5, p_other=0.0), np.random.default_rng(8))
    assert abs(s.informed[1:].mean() - 0.5) < 0.015


def test_unprepared_share_rate():
    n_leaves = 10_000
    net = _star(n_leaves)
    s = DiffusionState.fresh(n_leaves + 1)
    s.informed[0] = True
    step_information(0, s, net, _quiet_info(p_official=0.0, p_prepared=0.5, p_other=0.2), np.random.default_rng(2))
    assert abs(s.informed[1:].mean() - 0.2) < 0.015


def test_info_param_validation():
    with pytest.raises(ConfigError):
        InfoParams(1.5, 0.1, 0.1)
    with pytest.warns(UserWarning):
        InfoParams(0.0, 0.5, 0.1)
    with pytest.raises(ConfigError):
        AdoptionParams(peer_lambda=-1)
    with pytest.raises(ConfigError):
        AdoptionParams(mode="fuzzy")


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=30, deadline=None)
def test_disconnected_pair_stays_apart(seed):
    net = SocialNetwork.from_edges("random", 2, [])
    s = DiffusionState.fresh(2)
    s.informed[0] = True
    info = _quiet_info(p_official=0.0, p_prepared=1.0, p_other=1.0)
    rng = np.random.default_rng(seed)
    for day in range(10):
        step_information(day, s, net, info, rng)
    assert not s.informed[1]


# adoption -------------------------------------------------------------------

def _households(n, seed=0):
    tracts = [Tract("A", 0, 0, 10), Tract("B", 2, 0, 10)]
    pop = synthesize_households(tracts, Marginals(), n, np.random.default_rng(seed))
    traits = derive_traits(pop, CoefficientSet(), np.random.default_rng(seed + 1))
    return pop, traits


def test_log_odds_shift_exact():
    net = _star(4)
    prepared = np.array([False, True, True, True, True])
    frac = peer_fraction(net, prepared)
    assert frac[0] == 1.0 and np.all(frac[1:] == 0.0)
    eta = np.array([-1.3, 0.2, 0.2, 0.2, 0.2])
    p = adoption_probability(eta, frac, 2.0)
    assert logit(p[0]) - logit(adoption_probability(-1.3, 0.0, 2.0)) == pytest.approx(2.0, abs=1e-12)


def test_isolated_node_fraction_zero():
    net = SocialNetwork.from_edges("random", 3, [(0, 1)])
    with np.errstate(all="raise"):
        frac = peer_fraction(net, np.array([True, False, False]))
    assert frac.tolist() == [0.0, 1.0, 0.0]


def test_lambda_zero_cumulative_matches_probability():
    n, f = 10_000, 7
    pop, traits = _households(n)
    net = build_social_network("small_world", NetworkParams(), n, np.random.default_rng(3))
    coeffs = CoefficientSet()
    s = run_forewarning(pop, traits, net, f, _quiet_info(p_official=1.0), AdoptionParams(peer_lambda=0.0),
                        coeffs, np.random.default_rng(4))
    expected = adoption_probability(Forewarning(pop, traits, coeffs, f).prep_eta, 0.0, 0.0).mean()
    assert abs(s.prepared.mean() - expected) < 0.02


def test_monotone_sets_and_days():
    pop, traits = _households(600)
    net = build_social_network("scale_free", NetworkParams(), 600, np.random.default_rng(0))
    hist = []
    s = run_forewarning(pop, traits, net, 9, InfoParams(0.1, 0.1, 0.05), AdoptionParams(), CoefficientSet(),
                        np.random.default_rng(1), history=hist)
    inf, prep = np.array(hist).T
    assert np.all(np.diff(inf) >= 0) and np.all(np.diff(prep) >= 0)
    assert np.all(s.prepared <= s.informed)
    assert np.all(s.prepare_day[s.prepared] >= s.inform_day[s.prepared])
    assert np.all(s.inform_day[~s.informed] == -1)
    assert np.all(s.substitute <= s.informed)
    assert np.all(s.expectation > 0)


def test_uninformed_expectation_uses_uninformed_flag():
    pop, traits = _households(50)
    net = SocialNetwork.from_edges("random", 50, [])
    coeffs = CoefficientSet()
    s = run_forewarning(pop, traits, net, 5, InfoParams(0.0, 0.0, 0.0), AdoptionParams(), coeffs,
                        np.random.default_rng(0))
    assert not s.informed.any() and not s.prepared.any()
    assert np.allclose(s.expectation, Forewarning(pop, traits, coeffs, 5).expectation(np.zeros(50)))


def test_ordinal_mode_levels():
    pop, traits = _households(400)
    net = build_social_network("random", NetworkParams(), 400, np.random.default_rng(0))
    s = run_forewarning(pop, traits, net, 7, InfoParams(0.5, 0.3, 0.1), AdoptionParams(mode="ordinal"),
                        CoefficientSet(), np.random.default_rng(1))
    assert set(np.unique(s.level[s.informed])) <= set(range(1, 6))
    assert np.all(s.level[~s.informed] == 0)
    assert np.array_equal(s.prepared, s.level >= 3)


def test_peer_effect_couples_pathwise():
    # with equal sharing rates the information process ignores preparedness,
    # so common random numbers make lambda > 0 adopt a superset of lambda = 0
    pop, traits = _households(500)
    net = build_social_network("small_world", NetworkParams(), 500, np.random.default_rng(2))
    info = InfoParams(0.2, 0.2, 0.2)
    for seed in range(10):
        a = run_forewarning(pop, traits, net, 9, info, AdoptionParams(peer_lambda=0.0), CoefficientSet(),
                            np.random.default_rng(seed))
        b = run_forewarning(pop, traits, net, 9, info, AdoptionParams(peer_lambda=2.0), CoefficientSet(),
                            np.random.default_rng(seed))
        assert np.all(a.prepared <= b.prepared)


def test_peer_effect_stochastic_dominance():
    n = 300
    pop, traits = _households(n)
    net = build_social_network("scale_free", NetworkParams(), n, np.random.default_rng(5))
    info = InfoParams()
    counts = {}
    for lam in (0.0, 1.5):
        counts[lam] = np.array([
            run_forewarning(pop, traits, net, 7, info, AdoptionParams(peer_lambda=lam), CoefficientSet(),
                            np.random.default_rng(1000 + r)).prepared.sum() for r in range(200)])
    grid = np.arange(0, n + 1)
    cdf0 = (counts[0.0][:, None] <= grid).mean(axis=0)
    cdf1 = (counts[1.5][:, None] <= grid).mean(axis=0)
    # empirical CDF of lambda > 0 never sits meaningfully above lambda = 0
    assert np.all(cdf1 <= cdf0 + 0.05)
    assert counts[1.5].mean() > counts[0.0].mean()


def test_generator_decided_on_inform_day():
    pop, traits = _households(300)
    net = SocialNetwork.from_edges("random", 300, [])
    fw = Forewarning(pop, traits, CoefficientSet(), 5)
    s = DiffusionState.fresh(300)
    rng = np.random.default_rng(0)
    step_information(0, s, net, InfoParams(0.5, 0.0, 0.0), rng)
    step_adoption(0, s, net, fw, AdoptionParams(), rng)
    first = s.substitute.copy()
    assert np.all(s.expectation[s.informed] > 0) and np.all(s.expectation[~s.informed] == 0)
    step_adoption(1, s, net, fw, AdoptionParams(), rng)
    assert np.array_equal(first, s.substitute)  # no informed-today households, no new draws
