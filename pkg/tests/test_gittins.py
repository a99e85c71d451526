import numpy as np
import pytest

from banditlab import ArgumentError, ResourceBudgetError, StateRangeError, TableFormatError, TableMismatchError
from banditlab.core import ArmPosterior, iter_arm_states
from banditlab.gittins import (
    GittinsIndex, compute_gittins_table, compute_gittins_table_bisection, gittins_index,
    lambda_grid, load_table, save_table)


def test_lambda_grid():
    grid = lambda_grid(0.25)
    np.testing.assert_array_equal(grid, [0.0, 0.25, 0.5, 0.75, 1.0])
    assert len(lambda_grid(0.001)) == 1001


def test_table_covers_triangle(gittins_table):
    assert gittins_table.covers(1, 1)
    assert gittins_table.covers(21, 21)
    assert not gittins_table.covers(22, 21)
    for arm in iter_arm_states(41):
        assert np.isfinite(gittins_table.values[arm.alpha - 1, arm.beta - 1])


def test_index_at_least_mean(gittins_table):
    step = gittins_table.lambda_step
    for arm in iter_arm_states(41):
        mean = arm.alpha / (arm.alpha + arm.beta)
        assert gittins_index(gittins_table, arm) >= mean - step


def test_index_of_prior_state(gittins_table):
    value = gittins_index(gittins_table, ArmPosterior(1, 1))
    assert 0.5 < value < 1.0


def test_index_monotone(gittins_table):
    step = gittins_table.lambda_step
    values = gittins_table.values
    for arm in iter_arm_states(40):
        a, b = arm.alpha, arm.beta
        assert values[a, b - 1] >= values[a - 1, b - 1] - step
        assert values[a - 1, b] <= values[a - 1, b - 1] + step


@pytest.fixture(scope='module')
def table_50():
    return compute_gittins_table(gamma=0.99, horizon=300, lambda_step=0.001, max_pulls=50)


def test_bonus_shrinks_with_evidence(table_50):
    index = GittinsIndex(table_50)
    step = table_50.lambda_step
    for a, b in ((1, 1), (1, 2), (2, 1), (1, 3), (2, 3), (3, 1), (1, 5)):
        bonuses = [index.bonus(ArmPosterior(k * a, k * b), 1) for k in range(1, 52 // (a + b) + 1)]
        assert len(bonuses) > 1
        for earlier, later in zip(bonuses, bonuses[1:]):
            assert later <= earlier + 2 * step
    assert table_50.covers(26, 26)


def test_myopic_discount():
    table = compute_gittins_table(gamma=0.01, horizon=30, lambda_step=0.001, max_pulls=20)
    for arm in iter_arm_states(21):
        mean = arm.alpha / (arm.alpha + arm.beta)
        assert abs(gittins_index(table, arm) - mean) <= 0.02


def test_sweep_matches_bisection():
    kwargs = dict(gamma=0.95, horizon=60, lambda_step=0.001, max_pulls=10)
    assert compute_gittins_table(**kwargs) == compute_gittins_table_bisection(**kwargs)


def test_workers_do_not_change_table():
    kwargs = dict(gamma=0.9, horizon=80, lambda_step=0.002, max_pulls=15)
    assert compute_gittins_table(workers=1, **kwargs) == compute_gittins_table(workers=3, **kwargs)


def test_gittins_index_out_of_range(gittins_table):
    with pytest.raises(StateRangeError):
        gittins_index(gittins_table, ArmPosterior(30, 20))
    with pytest.raises(StateRangeError):
        GittinsIndex(gittins_table).bonus(ArmPosterior(30, 20), 1)


def test_argument_checks():
    with pytest.raises(ArgumentError):
        compute_gittins_table(gamma=1.0, horizon=20, max_pulls=5)
    with pytest.raises(ArgumentError):
        compute_gittins_table(gamma=0.9, horizon=5, max_pulls=10)
    with pytest.raises(ArgumentError):
        compute_gittins_table(gamma=0.9, horizon=20, lambda_step=0.7, max_pulls=5)


def test_state_budget():
    with pytest.raises(ResourceBudgetError):
        compute_gittins_table(gamma=0.9, horizon=100, lambda_step=0.01, max_pulls=10, state_budget=1000)


def test_save_load(tmp_path, gittins_table):
    path = str(tmp_path / 'gittins.csv')
    save_table(gittins_table, path)
    loaded = load_table(path)
    assert loaded == gittins_table
    assert loaded.header() == gittins_table.header()

    assert load_table(path, gamma=0.99, max_pulls=40) == gittins_table


def test_load_mismatch(tmp_path, gittins_table):
    path = str(tmp_path / 'gittins.csv')
    save_table(gittins_table, path)
    with pytest.raises(TableMismatchError):
        load_table(path, gamma=0.9)
    with pytest.raises(TableMismatchError):
        load_table(path, max_pulls=200)


def test_load_truncated(tmp_path, gittins_table):
    path = tmp_path / 'gittins.csv'
    save_table(gittins_table, str(path))
    lines = path.read_text().splitlines()
    path.write_text('\n'.join(lines[:-10]) + '\n')

    with pytest.raises(TableFormatError) as excinfo:
        load_table(str(path))
    assert 'rows' in str(excinfo.value)


def test_load_corrupt(tmp_path, gittins_table):
    path = tmp_path / 'gittins.csv'
    save_table(gittins_table, str(path))
    lines = path.read_text().splitlines()

    path.write_text('\n'.join(['not a table'] + lines[1:]))
    with pytest.raises(TableFormatError):
        load_table(str(path))

    lines[5] = '1,1,zero'
    path.write_text('\n'.join(lines))
    with pytest.raises(TableFormatError) as excinfo:
        load_table(str(path))
    assert excinfo.value.lineno == 6
