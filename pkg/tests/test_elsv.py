import numpy as np
import pytest

from banditlab import ComputationError, StateRangeError, TableFormatError, TableMismatchError
from banditlab.core import ArmPosterior, BanditState, iter_arm_states
from banditlab.elsv import (
    ValueTableCache, compute_value_table, export_contour_csv, load_value_table,
    normalize_for_plot, precompute_tables, save_value_table, separable_value,
    telescoping_residuals)
from banditlab.gittins import GittinsIndex, gittins_index
from banditlab.indices import (
    BayesUcbIndex, UcbIndex, UcbParams, ZeroBonus, index_policy_choose, tolerant_argmax)
from banditlab.planner import one_step_choose, q_values

from .conftest import iter_state_levels


def constant_bonus(c):
    def bonus(alpha, beta, t):
        return np.full(np.shape(alpha), c)
    return bonus


def test_zero_bonus_table_is_zero():
    table = compute_value_table(20, ZeroBonus())
    for arm in iter_arm_states(20):
        assert table[arm] == 0.0


def test_constant_bonus_small_table():
    c = 0.3
    table = compute_value_table(3, constant_bonus(c))
    assert table.lookup(3, 1) == 0.0
    assert table.lookup(2, 2) == 0.0
    assert table.lookup(1, 3) == 0.0
    assert table.lookup(2, 1) == pytest.approx(-c)
    assert table.lookup(1, 2) == pytest.approx(-c)
    assert table.lookup(1, 1) == pytest.approx(-2 * c)

    state = BanditState.from_counts([(1, 1), (2, 1)])
    assert separable_value([table, table], state) == pytest.approx(-3 * c)


def test_lookup_out_of_range():
    table = compute_value_table(5, ZeroBonus())
    with pytest.raises(StateRangeError):
        table.lookup(5, 2)
    with pytest.raises(StateRangeError):
        separable_value([table], BanditState.from_counts([(6, 1)]))


@pytest.mark.parametrize('t', [5, 10, 50, 200])
def test_telescoping_ucb_and_zero(t):
    for bonus in (UcbIndex(), UcbIndex(UcbParams(0.4)), ZeroBonus()):
        table = compute_value_table(t, bonus)
        residuals = telescoping_residuals(table, bonus)
        assert len(residuals) == t * (t - 1) // 2
        assert max(abs(r) for r in residuals.values()) <= 1e-9


@pytest.mark.parametrize('t', [5, 10, 41])
def test_telescoping_gittins(t, gittins_table):
    bonus = GittinsIndex(gittins_table)
    table = compute_value_table(t, bonus)
    assert max(abs(r) for r in telescoping_residuals(table, bonus).values()) <= 1e-9


def test_telescoping_bayes_ucb():
    bonus = BayesUcbIndex(horizon=50, c=0.0)
    table = compute_value_table(50, bonus)
    assert max(abs(r) for r in telescoping_residuals(table, bonus).values()) <= 1e-9


def test_non_finite_bonus():
    def broken(alpha, beta, t):
        return np.where((alpha == 1) & (beta == 1), np.inf, 0.0)

    with pytest.raises(ComputationError):
        compute_value_table(4, broken)


def test_ucb_table_depends_on_pulls_only():
    table = compute_value_table(40, UcbIndex())
    for pulls in range(39):
        row = [table.lookup(a, pulls + 2 - a) for a in range(1, pulls + 2)]
        assert max(row) - min(row) <= 1e-12

    along = [table.lookup(1, pulls + 1) for pulls in range(40)]
    steps = np.diff(along)
    # values rise towards zero on the outer diagonal and flatten as bonuses shrink
    assert np.all(steps > 0)
    assert np.all(np.diff(steps) <= 1e-12)


def test_bonus_time_defaults_to_t():
    bonus = UcbIndex()
    assert compute_value_table(10, bonus).bonus_time == 10
    table = compute_value_table(10, bonus, bonus_time=9)
    assert table.bonus_time == 9
    assert table.lookup(1, 1) != compute_value_table(10, bonus).lookup(1, 1)


def test_update_counts():
    for t in (50, 100, 200):
        updates = compute_value_table(t, ZeroBonus()).updates
        assert updates == t * (t - 1) // 2
        assert abs(updates / (t * t / 2.0) - 1.0) < 0.2

    tables, total = precompute_tables(60, ZeroBonus())
    assert len(tables) == 60
    assert [table.t for table in tables] == list(range(1, 61))
    assert abs(total / (60 ** 3 / 6.0) - 1.0) < 0.2


def test_one_step_lookahead_matches_index(gittins_table):
    levels = list(iter_state_levels(2, 30))
    bonuses = [UcbIndex(), UcbIndex(UcbParams(0.4)), ZeroBonus(), GittinsIndex(gittins_table)]
    for bonus in bonuses:
        cache = ValueTableCache(bonus)
        for t, states in levels:
            tables = cache.lookahead_tables(t, 2)
            for state in states:
                assert one_step_choose(state, tables) == index_policy_choose(state, bonus)


def test_q_value_gap_is_bonus():
    bonus = UcbIndex()
    cache = ValueTableCache(bonus)
    state = BanditState.from_counts([(3, 2), (1, 4), (2, 2)])
    tables = cache.lookahead_tables(state.t, 3)
    base = separable_value(tables, state)
    for q, arm in zip(q_values(state, tables), state.arms):
        assert q.value - base == pytest.approx(bonus.index(arm, state.t), abs=1e-9)


@pytest.mark.parametrize('bonus', [ZeroBonus(), UcbIndex()])
def test_normalize_keeps_choices(bonus):
    table = compute_value_table(10, bonus, bonus_time=9)
    normalized = normalize_for_plot(table)
    for t, states in iter_state_levels(2, 9):
        for state in states:
            before = q_values(state, [table, table])
            after = q_values(state, [normalized, normalized])
            assert (after[0].value - after[1].value) == pytest.approx(
                before[0].value - before[1].value, abs=1e-9)
            assert one_step_choose(state, [normalized, normalized]) == one_step_choose(state, [table, table])


def test_normalize_satisfies_inequalities():
    table = normalize_for_plot(compute_value_table(12, UcbIndex()))
    for arm in iter_arm_states(11):
        a, b = arm.alpha, arm.beta
        p = a / (a + b)
        pulled = p * (1.0 + table.lookup(a + 1, b)) + (1 - p) * table.lookup(a, b + 1)
        assert table.lookup(a, b) >= pulled - 1e-9


def test_normalize_idempotent():
    once = normalize_for_plot(compute_value_table(15, UcbIndex()))
    twice = normalize_for_plot(once)
    np.testing.assert_allclose(twice.values, once.values, atol=1e-9)


def test_export_contour(tmp_path):
    path = tmp_path / 'contour.csv'
    export_contour_csv(compute_value_table(10, ZeroBonus()), str(path))
    lines = path.read_text().splitlines()
    assert lines[0] == 'mean,pulls,value'
    assert len(lines) == 56
    for line in lines[1:]:
        mean, pulls, value = line.split(',')
        assert 0.0 < float(mean) < 1.0
        assert 0 <= int(pulls) <= 9
        assert float(value) == 0.0


def test_save_load_value_table(tmp_path):
    path = str(tmp_path / 'values.csv')
    table = compute_value_table(25, UcbIndex(), bonus_time=24)
    save_value_table(table, path)

    loaded = load_value_table(path, t=25, bonus_name='ucb(1.0)')
    assert loaded.bonus_time == 24
    np.testing.assert_array_equal(loaded.values, table.values)

    with pytest.raises(TableMismatchError):
        load_value_table(path, t=30)
    with pytest.raises(TableMismatchError):
        load_value_table(path, bonus_name='zero')


def test_load_value_table_truncated(tmp_path):
    path = tmp_path / 'values.csv'
    save_value_table(compute_value_table(8, ZeroBonus()), str(path))
    lines = path.read_text().splitlines()
    path.write_text('\n'.join(lines[:-3]) + '\n')
    with pytest.raises(TableFormatError):
        load_value_table(str(path))


def test_cache_reuses_tables():
    cache = ValueTableCache(UcbIndex())
    first = cache.lookahead_table(7)
    assert first is cache.lookahead_table(7)
    assert first.t == 8
    assert first.bonus_time == 7

    deep = cache.lookahead_table(7, depth=3)
    assert deep.t == 10
    assert deep.bonus_time == 9

    tables = cache.lookahead_tables(7, 3)
    assert len(tables) == 3
    assert all(table is first for table in tables)
    assert cache.table(5) is cache.table(5, bonus_time=5)


def test_separable_value_single_arm():
    table = compute_value_table(6, UcbIndex())
    arm = ArmPosterior(2, 3)
    state = BanditState.from_counts([(2, 3)])
    assert separable_value([table], state) == table[arm]


def test_zero_bonus_lookahead_is_greedy():
    rng = np.random.default_rng(21)
    rewards = (0.8, 0.9, 1.0)
    cache = ValueTableCache(ZeroBonus())
    for _ in range(10000):
        counts = [(int(rng.integers(1, 15)), int(rng.integers(1, 15))) for _ in range(3)]
        state = BanditState.from_counts(counts)
        greedy = [r * a / (a + b) for r, (a, b) in zip(rewards, counts)]
        assert one_step_choose(state, cache.lookahead_tables(state.t, 3), rewards) == tolerant_argmax(greedy)


def test_reward_weighted_gittins_lookahead(gittins_table):
    rewards = (0.8, 1.0)
    index = GittinsIndex(gittins_table)
    cache = ValueTableCache(index)
    arms = list(iter_arm_states(15))
    for first in arms:
        for second in arms:
            state = BanditState((first, second), first.pulls + second.pulls + 1)
            weighted = [r * gittins_index(gittins_table, arm) for r, arm in zip(rewards, state.arms)]
            expected = tolerant_argmax(weighted)
            assert index_policy_choose(state, index, rewards) == expected
            tables = cache.lookahead_tables(state.t, 2, rewards=rewards)
            assert one_step_choose(state, tables, rewards) == expected


def test_reward_weighted_choice_example(gittins_table):
    state = BanditState.from_counts([(1, 1), (1, 2)])
    rewards = (0.8, 1.0)
    g = [gittins_index(gittins_table, arm) for arm in state.arms]
    assert g[0] > g[1]
    assert 0.8 * g[0] < g[1]
    assert index_policy_choose(state, GittinsIndex(gittins_table), rewards) == 1


def test_cache_scales_tables_by_reward():
    cache = ValueTableCache(UcbIndex())
    unit = cache.lookahead_table(7)
    scaled, same = cache.lookahead_tables(7, 2, rewards=(0.5, 1.0))
    assert same is unit
    np.testing.assert_array_equal(scaled.values, 0.5 * unit.values)
    assert cache.lookahead_tables(7, 2, rewards=(0.5, 1.0))[0] is scaled

    direct = compute_value_table(8, lambda a, b, t: 0.5 * UcbIndex().bonus_values(a, b, t), bonus_time=7)
    np.testing.assert_allclose(scaled.values, direct.values, atol=1e-12)


def test_load_value_table_bad_row(tmp_path):
    path = tmp_path / 'values.csv'
    save_value_table(compute_value_table(6, UcbIndex()), str(path))
    lines = path.read_text().splitlines()
    lines[4] = '2,1,oops'
    path.write_text('\n'.join(lines) + '\n')
    with pytest.raises(TableFormatError) as excinfo:
        load_value_table(str(path))
    assert excinfo.value.lineno == 5
