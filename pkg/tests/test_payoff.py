import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mediagame.params import DEFAULT_PARAMS, CreatorStrategy as CS, GameParams, UserStrategy as US
from mediagame.payoff import (
    PopulationState,
    avg_cooperation,
    empirical_cooperation,
    expected_creator_payoffs,
    expected_user_payoffs,
    payoff_pair,
)

from conftest import random_params, random_state


def oracle_cell(creator, user, p):
    """Payoff table written out cell by cell, independent of the library."""
    b_u, c_u, b_c, c_c, c_i, q = p.b_u, p.c_u, p.b_c, p.c_c, p.c_i, p.q
    table = {
        ("D", "AllD"): (0.0, 0.0),
        ("D", "BMedia"): (-0.5 * c_u, 0.5 * b_c),
        ("D", "GMedia"): (-(1 - q) * c_u - c_i, (1 - q) * b_c),
        ("D", "AllC"): (-c_u, b_c),
        ("C", "AllD"): (0.0, -c_c),
        ("C", "BMedia"): (0.5 * b_u, 0.5 * b_c - c_c),
        ("C", "GMedia"): (q * b_u - c_i, q * b_c - c_c),
        ("C", "AllC"): (b_u, b_c - c_c),
    }
    return table[(creator, user)]


def test_table_against_oracle(rng):
    for _ in range(200):
        p = random_params(rng)
        for c in CS:
            for u in US:
                pp = payoff_pair(c, u, p)
                ou, oc = oracle_cell(c.label, u.label, p)
                assert abs(pp.user_payoff - ou) <= 1e-12
                assert abs(pp.creator_payoff - oc) <= 1e-12


def test_documented_cells():
    p = DEFAULT_PARAMS
    assert payoff_pair(CS.UNSAFE, US.ALLD, p) == payoff_pair(CS.UNSAFE, US.ALLD, p.with_(q=0.1))
    assert (payoff_pair(CS.UNSAFE, US.ALLD, p).user_payoff, payoff_pair(CS.UNSAFE, US.ALLD, p).creator_payoff) == (0, 0)
    safe_g = payoff_pair(CS.SAFE, US.GMEDIA, p)
    assert safe_g.user_payoff == pytest.approx(0.26, abs=1e-12)
    assert safe_g.creator_payoff == pytest.approx(0.26, abs=1e-12)
    unsafe_b = payoff_pair(CS.UNSAFE, US.BMEDIA, p)
    assert (unsafe_b.user_payoff, unsafe_b.creator_payoff) == pytest.approx((-0.4, 0.2), abs=1e-12)
    unsafe_g = payoff_pair(CS.UNSAFE, US.GMEDIA, p)
    assert unsafe_g.user_payoff == pytest.approx(-(1 - 0.9) * 0.8 - 0.1, abs=1e-12)


def test_expected_user_payoffs_examples():
    p = DEFAULT_PARAMS
    np.testing.assert_allclose(expected_user_payoffs(PopulationState.uniform(1.0), p), [0, 0.2, 0.26, 0.4], atol=1e-12)
    np.testing.assert_allclose(expected_user_payoffs(PopulationState.uniform(0.0), p), [0, -0.4, -0.18, -0.8], atol=1e-12)


def test_expected_creator_payoffs_examples():
    p = DEFAULT_PARAMS
    pi_d, pi_c = expected_creator_payoffs(PopulationState((1, 0, 0, 0), 0.3), p)
    assert (pi_d, pi_c) == pytest.approx((0.0, -0.1), abs=1e-12)
    pi_d, pi_c = expected_creator_payoffs(PopulationState((0, 0, 0, 1), 0.3), p)
    assert (pi_d, pi_c) == pytest.approx((0.4, 0.3), abs=1e-12)
    pi_d, pi_c = expected_creator_payoffs(PopulationState((0, 0, 1, 0), 0.3), p.with_(q=0.5))
    assert pi_d == pytest.approx(pi_c + p.c_c, abs=1e-12)


def test_expected_payoffs_are_frequency_weighted_cells(rng):
    for _ in range(100):
        p, s = random_params(rng), random_state(rng)
        weights_c = {CS.UNSAFE: 1 - s.y, CS.SAFE: s.y}
        for u in US:
            brute = sum(w * payoff_pair(c, u, p).user_payoff for c, w in weights_c.items())
            assert expected_user_payoffs(s, p)[int(u)] == pytest.approx(brute, abs=1e-12)
        for c in CS:
            brute = sum(s.x[int(u)] * payoff_pair(c, u, p).creator_payoff for u in US)
            assert expected_creator_payoffs(s, p)[int(c)] == pytest.approx(brute, abs=1e-12)


def test_gmedia_degenerates_to_bmedia():
    p = DEFAULT_PARAMS.with_(q=0.5, c_i=0.0)
    for c in CS:
        assert payoff_pair(c, US.GMEDIA, p) == payoff_pair(c, US.BMEDIA, p)


def test_eta_examples():
    p = DEFAULT_PARAMS
    assert avg_cooperation(PopulationState((1, 0, 0, 0), 0.0), p) == 0.0
    assert avg_cooperation(PopulationState((0, 0, 0, 1), 1.0), p) == 1.0
    assert avg_cooperation(PopulationState((0, 0, 1, 0), 0.5), p) == pytest.approx(0.5, abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(
    st.lists(st.floats(0, 1), min_size=4, max_size=4).filter(lambda v: sum(v) > 1e-3),
    st.floats(0, 1),
    st.floats(0, 1),
)
def test_eta_bounded_and_affine(raw, y, q):
    x = np.array(raw) / sum(raw)
    p = DEFAULT_PARAMS.with_(q=q)
    s = PopulationState(tuple(x), y)
    eta = avg_cooperation(s, p)
    assert -1e-12 <= eta <= 1 + 1e-12
    # affine in y: midpoint value is the mean of the endpoints
    e0 = avg_cooperation(PopulationState(tuple(x), 0.0), p)
    e1 = avg_cooperation(PopulationState(tuple(x), 1.0), p)
    assert avg_cooperation(PopulationState(tuple(x), 0.5), p) == pytest.approx((e0 + e1) / 2, abs=1e-12)


def test_empirical_cooperation():
    p = DEFAULT_PARAMS
    assert empirical_cooperation([US.ALLD] * 10, [CS.UNSAFE] * 5, p) == 0.0
    users = [US.GMEDIA] * 50 + [US.ALLC] * 50
    assert empirical_cooperation(users, [CS.SAFE] * 50, p) == pytest.approx(0.975, abs=1e-12)
    with pytest.raises(ValueError):
        empirical_cooperation([], [CS.SAFE], p)
    with pytest.raises(ValueError):
        empirical_cooperation([US.ALLC], [], p)


def test_empirical_matches_frequencies(rng):
    for _ in range(50):
        p = random_params(rng)
        users = list(rng.integers(0, 4, size=int(rng.integers(1, 60))))
        creators = list(rng.integers(0, 2, size=int(rng.integers(1, 30))))
        x = np.bincount(users, minlength=4) / len(users)
        y = np.mean(creators)
        expect = avg_cooperation(PopulationState(tuple(x), y), p)
        got = empirical_cooperation([US(u) for u in users], [CS(c) for c in creators], p)
        assert got == pytest.approx(expect, abs=1e-12)


@pytest.mark.parametrize("bad", [((0.5, 0.5, 0.5, 0.5), 0.5), ((1, 0, 0, 0), 1.5), ((1.2, -0.2, 0, 0), 0.5), ((1, 0, 0), 0.5)])
def test_state_validation(bad):
    with pytest.raises(ValueError):
        PopulationState(*bad)
