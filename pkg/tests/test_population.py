import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gridshock.county import harris_like_marginals, harris_like_tracts
from gridshock.errors import ConfigError, MalformedRow
from gridshock.hazard import Tract
from gridshock.population import (BINARY_ATTRIBUTES, Marginals, assign_poles, derive_traits, load_marginals,
                                  synthesize_households, write_marginals)
from gridshock.regressions import (DEFAULT_COEFFICIENTS, CoefficientSet, cumulative_probs, expected_outage,
                                   experience_probability, linear_predictor, logistic_response, ordinal_pmf,
                                   ordinal_sample, substitute_probability, tolerance)


def _sig(x):
    return 1.0 / (1.0 + math.exp(-x))


# regression models ----------------------------------------------------------

def test_expected_outage_values():
    assert expected_outage(0) == pytest.approx(math.exp(1.747), rel=1e-12)
    assert expected_outage(0) == pytest.approx(5.74, abs=5e-3)
    base = expected_outage(9, x_i=1)
    assert base == pytest.approx(math.exp(1.747 + 0.30471 * math.log(10) + 0.12369), rel=1e-12)
    assert base == pytest.approx(13.10, abs=5e-3)
    assert expected_outage(9, x_i=1, x_m=1) / base == pytest.approx(0.599, abs=5e-4)
    with pytest.raises(ConfigError):
        expected_outage(-1)


def test_tolerance_values():
    assert tolerance(0, 1, 0) == pytest.approx(math.exp(1.9589), rel=1e-12)
    assert tolerance(0, 1, 0) == pytest.approx(7.09, abs=5e-3)
    assert tolerance(0, 3, 1) == pytest.approx(13.34, abs=5e-3)
    assert tolerance(0, 4, 0) / tolerance(0, 3, 0) == pytest.approx(1.2005, abs=5e-5)
    with pytest.raises(ConfigError):
        tolerance(0, 0, 0)
    with pytest.raises(ConfigError):
        tolerance(0, 6, 0)


def test_logistic_values():
    m = {"intercept": 0.0, "coef": {"a": 1.0}}
    assert logistic_response(m, {"a": 0.0}) == 0.5
    assert experience_probability(25, 0, 0, 0) == pytest.approx(_sig(1.371844 + 0.020162 * 25), abs=1e-12)
    assert experience_probability(25, 0, 0, 0) == pytest.approx(0.867, abs=5e-4)
    eta = -2.5395 + 0.07416 * 4 + 0.48647 * math.log(14.1) + 0.26128 * 3
    assert eta == pytest.approx(-0.1717, abs=5e-4)
    assert substitute_probability(4, 0, 13.1, 3) == pytest.approx(_sig(eta), abs=1e-12)
    assert substitute_probability(4, 0, 13.1, 3) == pytest.approx(0.457, abs=5e-4)


def test_arity_mismatch():
    m = DEFAULT_COEFFICIENTS["experience"]
    with pytest.raises(ConfigError):
        logistic_response(m, {"state_duration": 1.0})
    with pytest.raises(ConfigError):
        linear_predictor(m, {"state_duration": 1, "racial_minority": 0, "elderly": 0, "child_under_10": 0,
                             "extra": 1})


def test_ordinal_reference_values():
    need = DEFAULT_COEFFICIENTS["need"]
    assert cumulative_probs(need["intercepts"], 0.0)[0] == pytest.approx(_sig(0.44441), abs=1e-12)
    assert cumulative_probs(need["intercepts"], 0.0)[0] == pytest.approx(0.609, abs=5e-4)
    se = DEFAULT_COEFFICIENTS["self_efficacy"]
    assert cumulative_probs(se["intercepts"], 0.0)[0] == pytest.approx(0.0395, abs=5e-5)


def _need_cov(**kw):
    cov = {"racial_minority": 0, "mobility_issue": 0, "child_under_10": 0, "medical_condition": 0}
    cov.update(kw)
    return cov


def test_ordinal_sample_edges():
    need = DEFAULT_COEFFICIENTS["need"]
    assert ordinal_sample(need["intercepts"], need, _need_cov(racial_minority=1), 0.0) == 1
    assert ordinal_sample(need["intercepts"], need, _need_cov(), 0.9999999) == 5
    assert ordinal_sample(need["intercepts"], need, _need_cov(), 0.5) == 1
    assert ordinal_sample(need["intercepts"], need, _need_cov(), 0.7) == 2


@pytest.mark.parametrize("bad", [[0.1, 0.1, 0.2, 0.3], [1.0, 0.5, 2.0, 3.0], [0.1, 0.2, 0.3]])
def test_bad_intercepts(bad):
    with pytest.raises(ConfigError):
        cumulative_probs(bad, 0.0)
    with pytest.raises(ConfigError):
        CoefficientSet.with_overrides({"need": {"intercepts": bad}})


def _brute_pmf(alpha, eta):
    cum = [_sig(a + eta) for a in alpha] + [1.0]
    return [cum[0]] + [cum[j] - cum[j - 1] for j in range(1, 5)]


@given(st.floats(-6, 6, allow_nan=False))
def test_pmf_matches_brute_force(eta):
    for model in ("need", "self_efficacy"):
        a = DEFAULT_COEFFICIENTS[model]["intercepts"]
        pmf = ordinal_pmf(a, eta)
        assert abs(pmf.sum() - 1.0) < 1e-12
        assert np.allclose(pmf, _brute_pmf(a, eta), atol=1e-12, rtol=0)
        assert np.all(pmf >= 0)


def test_empirical_level_means():
    need = DEFAULT_COEFFICIENTS["need"]
    rng = np.random.default_rng(5)
    for cov in (_need_cov(), _need_cov(racial_minority=1, child_under_10=1)):
        u = rng.random(100_000)
        levels = ordinal_sample(need["intercepts"], need, {k: np.full(len(u), v) for k, v in cov.items()}, u)
        pmf = ordinal_pmf(need["intercepts"], linear_predictor(need, cov))
        assert abs(levels.mean() - float(np.dot(np.arange(1, 6), pmf))) < 0.01


binary = st.integers(0, 1)


@given(binary, st.integers(1, 4), binary)
def test_tolerance_multiplicative(x_s, x_n, x_p):
    t = tolerance(x_s, x_n, x_p)
    c = DEFAULT_COEFFICIENTS["tolerance"]["coef"]
    assert t > 0
    assert tolerance(x_s, x_n + 1, x_p) / t == pytest.approx(math.exp(c["need"]), rel=1e-12)
    if x_s == 0:
        assert tolerance(1, x_n, x_p) / t == pytest.approx(math.exp(c["substitute"]), rel=1e-12)
    if x_p == 0:
        assert tolerance(x_s, x_n, 1) / t == pytest.approx(math.exp(c["prepared"]), rel=1e-12)


@given(st.integers(1, 7), binary, st.floats(0, 60), st.integers(1, 5), st.floats(0.01, 5))
def test_substitute_monotone(income, renter, expectation, se, step):
    p = substitute_probability(income, renter, expectation, se)
    assert 0 < p < 1
    assert substitute_probability(income, renter, expectation + step, se) >= p  # +0.486 on log expectation
    if renter == 0:
        assert substitute_probability(income, 1, expectation, se) < p
    if se < 5:
        assert substitute_probability(income, renter, expectation, se + 1) > p


@given(st.floats(0, 80), binary, binary, binary)
def test_experience_monotone(dur, minority, elderly, child):
    p = experience_probability(dur, minority, elderly, child)
    assert 0 < p < 1
    assert experience_probability(dur + 1, minority, elderly, child) > p
    if minority == 0:
        assert experience_probability(dur, 1, elderly, child) < p
    if child == 0:
        assert experience_probability(dur, minority, elderly, 1) > p


def test_coefficient_overrides_merge():
    c = CoefficientSet.with_overrides({"tolerance": {"coef": {"need": 0.0}}})
    assert c["tolerance"]["coef"]["substitute"] == -0.5130
    assert tolerance(0, 5, 0, coeffs=c) == pytest.approx(math.exp(1.7762))
    with pytest.raises(ConfigError):
        c["nonexistent"]


# synthesis ------------------------------------------------------------------

@pytest.fixture(scope="module")
def harris():
    tracts = harris_like_tracts()
    return tracts, harris_like_marginals(tracts)


def test_harris_sample_size(harris):
    tracts, marg = harris
    pop = synthesize_households(tracts, marg, 2500, np.random.default_rng(0))
    assert len(pop) == 2500
    assert set(np.unique(pop.income)) <= set(range(1, 8))
    assert pop.state_duration.min() >= 0 and pop.supermarket_distance.min() >= 0


def test_degenerate_and_concentrated_marginals():
    tracts = [Tract("A", 0, 0, 10), Tract("B", 5, 0, 30)]
    pop = synthesize_households(tracts, Marginals(racial_minority=1.0), 500, np.random.default_rng(1))
    assert np.all(pop.racial_minority == 1)
    assert np.bincount(pop.tract).tolist() == [125, 375]
    pop = synthesize_households(tracts, Marginals(racial_minority=0.3), 100_000, np.random.default_rng(2))
    assert abs(pop.racial_minority.mean() - 0.3) < 0.005


def test_marginal_validation():
    with pytest.raises(ConfigError):
        Marginals(elderly=1.2)
    with pytest.raises(ConfigError):
        Marginals(income=(0.5,) * 7)
    with pytest.raises(ConfigError):
        synthesize_households([Tract("A", 0, 0, 1)], {"B": Marginals()}, 10, np.random.default_rng(0))


def test_reproducible(harris):
    tracts, marg = harris
    a = synthesize_households(tracts, marg, 800, np.random.default_rng(9))
    b = synthesize_households(tracts, marg, 800, np.random.default_rng(9))
    c = synthesize_households(tracts, marg, 800, np.random.default_rng(10))
    assert a == b and not (a == c)
    ta = derive_traits(a, CoefficientSet(), np.random.default_rng(3))
    tb = derive_traits(b, CoefficientSet(), np.random.default_rng(3))
    assert np.array_equal(ta.need, tb.need) and np.array_equal(ta.experience, tb.experience)


def test_household_view_and_attributes(harris):
    tracts, marg = harris
    pop = synthesize_households(tracts, marg, 50, np.random.default_rng(0))
    h = pop.household(7)
    assert h.tract == tracts[pop.tract[7]].id
    assert h.renter == 1 - h.owner
    for a in BINARY_ATTRIBUTES:
        assert set(np.unique(pop.attribute(a))) <= {0, 1}
    with pytest.raises(ConfigError):
        pop.attribute("height")


def test_assign_poles_stays_in_tract():
    tracts = [Tract("A", 0, 0, 10), Tract("B", 5, 0, 10)]
    pop = synthesize_households(tracts, Marginals(), 200, np.random.default_rng(0))
    pole_tract = np.array([0, 0, 1, 1, 1])
    poles = assign_poles(pop, pole_tract, np.random.default_rng(1))
    assert np.array_equal(pole_tract[poles], pop.tract)
    with pytest.raises(ConfigError):
        assign_poles(pop, np.array([0, 0]), np.random.default_rng(1))


def test_derived_traits_match_models(harris):
    tracts, marg = harris
    pop = synthesize_households(tracts, Marginals(racial_minority=0.0, mobility_issue=0.0, child_under_10=0.0,
                                                  medical_condition=0.0), 40_000, np.random.default_rng(4))
    tr = derive_traits(pop, CoefficientSet(), np.random.default_rng(5))
    assert abs(np.mean(tr.need == 1) - _sig(0.44441)) < 0.01
    assert set(np.unique(tr.self_efficacy)) <= set(range(1, 6))


def test_marginals_round_trip(tmp_path, harris):
    tracts, marg = harris
    p = tmp_path / "m.csv"
    write_marginals(marg, p)
    assert load_marginals(p) == marg
    p.write_text("tract_id,income_1\nA,1\n")
    with pytest.raises(MalformedRow):
        load_marginals(p)
