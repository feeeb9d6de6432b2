import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mediagame.params import DEFAULT_PARAMS, OSCILLATION_PARAMS, CreatorStrategy as CS, UserStrategy as US
from mediagame.payoff import PopulationState
from mediagame.replicator import (
    IntegrationError,
    IntegratorConfig,
    OutcomeKind,
    Trajectory,
    basin_census,
    census_states,
    classify_outcome,
    compositions,
    derivatives,
    full_derivatives,
    integrate,
    time_averaged_eta_grid,
)

from conftest import random_params, random_state

SHORT = IntegratorConfig(step_size=0.05, horizon=2000.0)


def pibar_rhs(z, p, form):
    """Independent transcription of the replicator field from the payoff block."""
    x1, x2, x3, y = z
    x4 = 1 - x1 - x2 - x3
    q = p.q
    pi = np.array([
        0.0,
        0.5 * p.b_u * y - 0.5 * p.c_u * (1 - y),
        (q * p.b_u - p.c_i) * y - ((1 - q) * p.c_u + p.c_i) * (1 - y),
        p.b_u * y - p.c_u * (1 - y),
    ])
    x = np.array([x1, x2, x3, x4])
    bar = x @ pi
    pi_d = 0.5 * p.b_c * x2 + (1 - q) * p.b_c * x3 + p.b_c * x4
    pi_c = -p.c_c * x1 + (0.5 * p.b_c - p.c_c) * x2 + (q * p.b_c - p.c_c) * x3 + (p.b_c - p.c_c) * x4
    bar_c = y * pi_c + (1 - y) * pi_d
    if form == "literal":
        dx = x * (1 - x) * (pi - bar)
    else:
        dx = x * (pi - bar)
    return np.array([dx[0], dx[1], dx[2], y * (pi_c - bar_c) if form == "standard" else y * (1 - y) * (pi_c - bar_c)])


def test_golden_derivatives_at_uniform_state():
    # hand evaluation: pi_user = (0, -0.1, 0.04, -0.2), mean -0.065;
    # pi_D = 0.16, pi_C = 0.14
    s = PopulationState.uniform(0.5)
    np.testing.assert_allclose(derivatives(s, DEFAULT_PARAMS), [0.01625, -0.00875, 0.02625, -0.005], atol=1e-15)
    np.testing.assert_allclose(
        derivatives(s, DEFAULT_PARAMS, form="literal"), [0.0121875, -0.0065625, 0.0196875, -0.0025], atol=1e-15
    )


@pytest.mark.parametrize("form", ["standard", "literal"])
def test_against_independent_transcription(rng, form):
    for _ in range(100):
        p, s = random_params(rng), random_state(rng)
        z = np.array([s.x[0], s.x[1], s.x[2], s.y])
        np.testing.assert_allclose(derivatives(s, p, form), pibar_rhs(z, p, form), atol=1e-10)


def test_standard_field_is_tangent_to_simplex(rng):
    for _ in range(100):
        d = full_derivatives(random_state(rng), random_params(rng))
        assert abs(d[:4].sum()) < 1e-14


@pytest.mark.parametrize("form", ["standard", "literal"])
def test_corners_are_fixed_points(rng, form):
    for _ in range(50):
        p = random_params(rng)
        for u in US:
            for c in CS:
                assert np.all(derivatives(PopulationState.corner(u, c), p, form) == 0.0)


def test_creator_equation_sign_at_all_allc():
    for y in (0.1, 0.5, 0.9):
        assert derivatives(PopulationState((0, 0, 0, 1), y), DEFAULT_PARAMS)[3] < 0


def test_corner_trajectory_is_constant():
    s0 = PopulationState.corner(US.ALLD, CS.UNSAFE)
    t = integrate(s0, DEFAULT_PARAMS, IntegratorConfig(horizon=100.0))
    assert np.all(t.states == s0.as_array())
    out = classify_outcome(t)
    assert out.kind is OutcomeKind.CONVERGED_DEFECTION and out.time_averaged_eta == 0.0


def test_trajectory_invariants():
    t = integrate(PopulationState.uniform(0.5), OSCILLATION_PARAMS, IntegratorConfig(horizon=500.0, record_stride=10))
    assert np.all(np.diff(t.times) > 0)
    assert np.all((t.states >= 0) & (t.states <= 1))
    assert np.max(np.abs(t.states[:, :4].sum(axis=1) - 1)) < 1e-9
    # drift of the raw step before projection at the default step size
    assert t.max_drift < 1e-6
    for i in (0, len(t) // 2, -1):
        t.state(i)  # re-validates the PopulationState invariants


def _final(h, s0, p):
    cfg = IntegratorConfig(step_size=h, horizon=10.0, record_stride=10**9, project=False)
    t = integrate(s0, p, cfg)
    assert t.times[-1] == pytest.approx(10.0)
    return t.states[-1]


def test_rk4_fourth_order():
    s0 = PopulationState((0.3, 0.2, 0.3, 0.2), 0.4)
    p = OSCILLATION_PARAMS
    ref = _final(0.1 / 64, s0, p)
    errs = [np.max(np.abs(_final(h, s0, p) - ref)) for h in (0.1, 0.05, 0.025)]
    assert errs[0] / errs[1] >= 12
    assert errs[1] / errs[2] >= 12


def test_gmedia_bmedia_swap_symmetry():
    p = DEFAULT_PARAMS.with_(q=0.5, c_i=0.0)
    cfg = IntegratorConfig(step_size=0.05, horizon=200.0, record_stride=40)
    a = integrate(PopulationState((0.1, 0.4, 0.2, 0.3), 0.6), p, cfg)
    b = integrate(PopulationState((0.1, 0.2, 0.4, 0.3), 0.6), p, cfg)
    np.testing.assert_allclose(a.states[:, [0, 2, 1, 3, 4]], b.states, atol=1e-12)


def test_local_stability_of_defection_corner(rng):
    cfg = IntegratorConfig(step_size=0.05, horizon=2000.0)
    for _ in range(10):
        dx = rng.uniform(0, 0.01 / 3, size=3)
        s0 = PopulationState((1 - dx.sum(), *dx), float(rng.uniform(0, 0.01)))
        out = classify_outcome(integrate(s0, DEFAULT_PARAMS, cfg), cfg)
        assert out.kind is OutcomeKind.CONVERGED_DEFECTION


def test_bistability_pair():
    cfg = IntegratorConfig()
    up = classify_outcome(integrate(PopulationState.uniform(0.5), OSCILLATION_PARAMS, cfg), cfg)
    down = classify_outcome(integrate(PopulationState.uniform(0.45), OSCILLATION_PARAMS, cfg), cfg)
    assert up.kind is OutcomeKind.OSCILLATING and up.time_averaged_eta > 0.5
    assert down.kind is OutcomeKind.CONVERGED_DEFECTION and down.defection_distance < 1e-3
    # x1 and x2 die out on the oscillating branch
    assert up.terminal_state.x[0] < 1e-3 and up.terminal_state.x[1] < 1e-3


def test_kernel_average_matches_trapezoid():
    cfg = IntegratorConfig(horizon=1000.0, record_stride=1)
    t = integrate(PopulationState.uniform(0.5), OSCILLATION_PARAMS, cfg)
    stripped = Trajectory(t.times, t.states, t.eta_series, None, params=t.params)
    assert classify_outcome(stripped, cfg).time_averaged_eta == pytest.approx(t.eta_time_average, abs=1e-9)


def test_short_trajectory_rejected():
    t = Trajectory(np.array([0.0]), np.array([[1, 0, 0, 0, 0.0]]), np.array([0.0]), params=DEFAULT_PARAMS)
    with pytest.raises(ValueError):
        classify_outcome(t)


def test_non_finite_state_reports_step():
    with pytest.raises(IntegrationError) as exc:
        integrate(np.array([np.nan, 0, 0, 1, 0.5]), DEFAULT_PARAMS, IntegratorConfig(horizon=10.0, step_size=0.1))
    assert exc.value.step >= 0


@pytest.mark.parametrize("bad", [dict(step_size=0.2), dict(step_size=0.1, horizon=5.0), dict(record_stride=0), dict(form="x")])
def test_config_validation(bad):
    with pytest.raises(ValueError):
        IntegratorConfig(**bad)


def test_census_grid_enumeration():
    states = census_states(0.5)
    assert len(states) == 30
    comps = {tuple(r[:4]) for r in states}
    assert len(comps) == 10
    assert sorted({r[4] for r in states}) == [0.0, 0.5, 1.0]
    assert len(list(compositions(50))) == 23426
    with pytest.raises(ValueError):
        census_states(0.3)


def test_small_census_matches_individual_runs():
    census = basin_census(DEFAULT_PARAMS, 0.5, SHORT)
    assert census.total_states == 30 and census.failed == 0
    kinds = []
    for row in census_states(0.5):
        s = PopulationState(tuple(row[:4]), row[4])
        kinds.append(classify_outcome(integrate(s, DEFAULT_PARAMS, SHORT), SHORT).kind.value)
    assert list(census.outcomes) == kinds
    assert census.defection_fraction == pytest.approx(kinds.count("ConvergedDefection") / 30)


def test_census_independent_of_jobs():
    a = basin_census(DEFAULT_PARAMS, 0.25, SHORT, jobs=1)
    b = basin_census(DEFAULT_PARAMS, 0.25, SHORT, jobs=2)
    assert list(a.outcomes) == list(b.outcomes)
    assert np.array_equal(a.etas, b.etas, equal_nan=True)


def test_census_preset_agrees_with_default_settings():
    coarse = basin_census(DEFAULT_PARAMS, 0.25, IntegratorConfig(step_size=0.1, horizon=1000.0))
    fine = basin_census(DEFAULT_PARAMS, 0.25, IntegratorConfig(step_size=0.05, horizon=2000.0))
    assert list(coarse.outcomes) == list(fine.outcomes)
    assert coarse.mean_eta == pytest.approx(fine.mean_eta, abs=1e-3)


def test_costly_safety_collapses_census():
    census = basin_census(DEFAULT_PARAMS.with_(c_c=0.5), 0.25, SHORT)
    # x1 = 0 and y = 1 are invariant faces, so starts on them can never reach
    # the defection corner; every other start does
    reachable = (census.states[:, 0] > 0) & (census.states[:, 4] < 1)
    assert np.all(census.outcomes[reachable] == "ConvergedDefection")
    assert not np.any(census.outcomes[~reachable] == "ConvergedDefection")
    assert census.defection_fraction == pytest.approx(reachable.mean())


def test_eta_grid_examples():
    cfg = SHORT
    grid = [DEFAULT_PARAMS, DEFAULT_PARAMS.with_(c_c=0.4), DEFAULT_PARAMS.with_(c_i=0.5)]
    etas = time_averaged_eta_grid(grid, cfg=cfg)
    assert etas[0] > 0.4 and etas[1] < 0.05 and etas[2] < 0.05
    assert time_averaged_eta_grid(grid, cfg=cfg, jobs=2) == etas


@settings(max_examples=30, deadline=None)
@given(st.floats(0.0, 1.0), st.floats(0.05, 0.95))
def test_simplex_preserved_along_random_runs(y0, x1):
    rest = (1 - x1) / 3
    t = integrate(PopulationState((x1, rest, rest, rest), y0), DEFAULT_PARAMS, IntegratorConfig(step_size=0.1, horizon=100.0, record_stride=5))
    assert np.max(np.abs(t.states[:, :4].sum(axis=1) - 1)) < 1e-9
    assert np.all((t.eta_series >= 0) & (t.eta_series <= 1))
