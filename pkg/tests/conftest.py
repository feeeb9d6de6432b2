import warnings

import numpy as np
import pytest

from mediagame.params import GameParams, ParameterWarning


def random_params(rng, c_c_range=(-0.5, 0.5)):
    """A validated parameter draw. c_c may be negative so both corner
    conditions get exercised."""
    return GameParams(
        b_u=float(rng.uniform(0, 1)),
        c_u=float(rng.uniform(0, 1)),
        b_c=float(rng.uniform(0, 1)),
        c_c=float(rng.uniform(*c_c_range)),
        c_i=float(rng.uniform(0, 0.5)),
        q=float(rng.uniform(0, 1)),
    )


def random_state(rng):
    from mediagame.payoff import PopulationState

    x = rng.dirichlet(np.ones(4))
    return PopulationState(tuple(x), float(rng.uniform()))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(autouse=True)
def _quiet_regime_warning():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ParameterWarning)
        yield


# acceptance lines, printed once at the end of the run
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE):
        terminalreporter.write_line(line)
