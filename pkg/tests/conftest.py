import pytest

from banditlab.core import BanditState, Outcome, transition
from banditlab.gittins import compute_gittins_table


@pytest.fixture(scope='session')
def gittins_table():
    """Gittins indices for states with up to 40 pulls."""
    return compute_gittins_table(gamma=0.99, horizon=300, lambda_step=0.001, max_pulls=40)


@pytest.fixture(scope='session')
def desk_gittins_table():
    return compute_gittins_table(gamma=0.99, horizon=1000, lambda_step=0.001, max_pulls=200)


def iter_state_levels(n_arms, max_t):
    """Yield ``(t, states)`` for every time step up to ``max_t``."""
    level = {BanditState.initial(n_arms)}
    for t in range(1, max_t + 1):
        yield t, level
        level = {
            transition(state, i, outcome)
            for state in level
            for i in range(n_arms)
            for outcome in Outcome
        }
