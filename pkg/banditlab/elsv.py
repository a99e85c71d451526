"""
Linearly separable value functions built from index policies.

A value table for time ``t`` covers the arm states with at most ``t - 1``
pulls. It starts at zero on the outermost diagonal and is filled inwards
with

    v(a, b) = p v(a + 1, b) + (1 - p) v(a, b + 1) - bonus(a, b),

so that pulling an arm raises its expected table value by exactly the
bonus the index assigns to it. One-step lookahead on the sum of such
tables then picks the same arm as the index.
"""
import logging
import threading
from dataclasses import dataclass

import numpy as np
import pandas as pd

from banditlab import ArgumentError, ComputationError, StateRangeError, TableFormatError, TableMismatchError
from banditlab.core import iter_arm_states
from banditlab.tablefile import check_state_rows, read_state_rows, write_state_rows


logger = logging.getLogger(__name__)

TABLE_MAGIC = '#elsv-table v1'


@dataclass(frozen=True, eq=False)
class ValueTable:
    """
    ``values[alpha - 1, beta - 1]`` for ``alpha + beta - 2 <= t - 1``; NaN
    elsewhere. ``bonus_time`` is the time argument the bonus was evaluated
    at and ``updates`` the number of recurrence steps spent building it.
    """
    t: int
    bonus_name: str
    values: np.ndarray
    bonus_time: int = None
    updates: int = 0

    def covers(self, alpha, beta):
        return alpha >= 1 and beta >= 1 and alpha + beta - 2 <= self.t - 1

    def lookup(self, alpha, beta):
        if not self.covers(alpha, beta):
            raise StateRangeError(
                'state ({}, {}) outside value table for t={}'.format(alpha, beta, self.t))
        return float(self.values[alpha - 1, beta - 1])

    def __getitem__(self, arm):
        return self.lookup(arm.alpha, arm.beta)

    def shifted(self, constant):
        return ValueTable(self.t, self.bonus_name, self.values + constant, self.bonus_time, self.updates)

    def scaled(self, factor):
        return ValueTable(self.t, self.bonus_name, self.values * factor, self.bonus_time, self.updates)


def _diagonal(pulls):
    alpha = np.arange(1, pulls + 2)
    return alpha, pulls + 2 - alpha


def compute_value_table(t, bonus, bonus_time=None):
    """
    Run the backward recurrence over the triangle of states with at most
    ``t - 1`` pulls, down to and including the prior state.

    :param int t: table time; the outermost diagonal has ``t - 1`` pulls
    :param bonus: an :class:`~banditlab.indices.IndexFunction` or any
        callable ``bonus(alpha, beta, t)`` accepting numpy arrays
    :param int bonus_time: time argument passed to the bonus, ``t`` when
        omitted
    """
    if t < 1:
        raise ArgumentError('t must be >= 1, got {}'.format(t))
    if bonus_time is None:
        bonus_time = t
    bonus_values = getattr(bonus, 'bonus_values', bonus)
    bonus_name = getattr(bonus, 'describe', lambda: getattr(bonus, '__name__', 'custom'))()

    values = np.full((t, t), np.nan)
    top_alpha, top_beta = _diagonal(t - 1)
    values[top_alpha - 1, top_beta - 1] = 0.0
    updates = 0

    for pulls in range(t - 2, -1, -1):
        alpha, beta = _diagonal(pulls)
        b = np.broadcast_to(np.asarray(bonus_values(alpha, beta, bonus_time), dtype=float), alpha.shape)
        if not np.all(np.isfinite(b)):
            k = int(np.flatnonzero(~np.isfinite(b))[0])
            raise ComputationError('non-finite bonus {} at state ({}, {}), t={}'.format(
                b[k], alpha[k], beta[k], bonus_time))
        p = alpha / (alpha + beta)
        q = beta / (alpha + beta)
        values[alpha - 1, beta - 1] = p * values[alpha, beta - 1] + q * values[alpha - 1, beta] - b
        updates += len(alpha)

    logger.debug('value table t=%d bonus=%s: %d updates', t, bonus_name, updates)
    return ValueTable(t, bonus_name, values, bonus_time, updates)


def precompute_tables(horizon, bonus):
    """
    Tables for every ``t`` in ``1..horizon``. Returns the tables and the
    total number of recurrence updates spent.
    """
    tables = [compute_value_table(t, bonus) for t in range(1, horizon + 1)]
    total = sum(table.updates for table in tables)
    logger.info('precomputed %d value tables with %d updates', horizon, total)
    return tables, total


def separable_value(tables, state):
    """Sum of each arm's own table entry."""
    if len(tables) != state.n_arms:
        raise ArgumentError('{} tables for {} arms'.format(len(tables), state.n_arms))
    return sum(table.lookup(arm.alpha, arm.beta) for table, arm in zip(tables, state.arms))


def telescoping_residuals(table, bonus):
    """
    ``E[v(S')] - v(s) - bonus(s)`` at every interior state, keyed by
    ``(alpha, beta)``. All zero up to rounding for a correctly built table.
    """
    bonus_values = getattr(bonus, 'bonus_values', bonus)
    residuals = {}
    for arm in iter_arm_states(table.t - 1):
        a, b = arm.alpha, arm.beta
        p = a / (a + b)
        gain = p * table.lookup(a + 1, b) + (1 - p) * table.lookup(a, b + 1) - table.lookup(a, b)
        residuals[(a, b)] = gain - float(bonus_values(a, b, table.bonus_time))
    return residuals


def normalize_for_plot(table, reward=1.0):
    """
    Offset a table so that the value of a state is at least the expected
    reward plus the expected value after pulling, and at least the value of
    not pulling.

    The offset added to a state is ``K`` times the number of pulls left
    before the outer diagonal. For a fixed decision time the offsets summed
    over all arms are the same for every joint state, so lookahead choices
    do not change.
    """
    gap = 0.0
    for arm in iter_arm_states(table.t - 1):
        a, b = arm.alpha, arm.beta
        p = a / (a + b)
        gain = reward * p + p * table.lookup(a + 1, b) + (1 - p) * table.lookup(a, b + 1) - table.lookup(a, b)
        gap = max(gap, gain)

    if gap == 0.0:
        return table

    remaining = np.full_like(table.values, np.nan)
    for arm in iter_arm_states(table.t):
        remaining[arm.alpha - 1, arm.beta - 1] = table.t - 1 - arm.pulls
    return ValueTable(table.t, table.bonus_name, table.values + gap * remaining,
                      table.bonus_time, table.updates)


def _state_frame(table):
    states = list(iter_arm_states(table.t))
    alpha = np.array([arm.alpha for arm in states])
    beta = np.array([arm.beta for arm in states])
    return pd.DataFrame({'alpha': alpha, 'beta': beta, 'value': table.values[alpha - 1, beta - 1]})


def export_contour_csv(table, path):
    """
    Write ``mean,pulls,value`` rows, one per state, for contour plots over
    posterior mean and number of pulls.
    """
    frame = _state_frame(table)
    contour = pd.DataFrame({
        'mean': frame['alpha'] / (frame['alpha'] + frame['beta']),
        'pulls': frame['alpha'] + frame['beta'] - 2,
        'value': frame['value'],
    })
    contour.to_csv(path, index=False)


def save_value_table(table, path):
    header = 't={},bonus_name={},bonus_time={}'.format(table.t, table.bonus_name, table.bonus_time)
    write_state_rows(path, TABLE_MAGIC, header, _state_frame(table))


def load_value_table(path, t=None, bonus_name=None):
    line, frame = read_state_rows(path, TABLE_MAGIC, ['alpha', 'beta', 'value'])
    try:
        # bonus names such as ucb(1.0) contain no commas, so a plain split works
        header = dict(item.split('=', 1) for item in line.split(','))
        size, name, bonus_time = int(header['t']), header['bonus_name'], int(header['bonus_time'])
    except (KeyError, ValueError) as e:
        raise TableFormatError('malformed header {!r} ({})'.format(line, e), 2)
    if t is not None and t != size:
        raise TableMismatchError('header t={} does not match requested {}'.format(size, t), 2)
    if bonus_name is not None and bonus_name != name:
        raise TableMismatchError('header bonus_name={} does not match requested {}'.format(name, bonus_name), 2)

    value = check_state_rows(frame, list(iter_arm_states(size)), 'value')
    values = np.full((size, size), np.nan)
    values[frame['alpha'].to_numpy(dtype=int) - 1, frame['beta'].to_numpy(dtype=int) - 1] = value
    return ValueTable(size, name, values, bonus_time)


class ValueTableCache:
    """
    Lazily built, memoized tables for one bonus. The table used to look
    one step ahead from decision time ``t`` covers ``t`` pulls and is built
    with the bonus evaluated at ``t``.

    An arm whose success pays ``r`` gets the table built from ``r`` times
    the bonus. The recurrence is linear in the bonus, so that table is the
    unit table scaled by ``r``.

    Safe to share between threads; arms with equal rewards share one table.
    """

    def __init__(self, bonus):
        self.bonus = bonus
        self._tables = {}
        self._lock = threading.Lock()

    def table(self, t, bonus_time=None, reward=1.0):
        bonus_time = t if bonus_time is None else bonus_time
        key = (t, bonus_time, reward)
        with self._lock:
            table = self._tables.get(key)
            if table is None:
                unit = self._tables.get((t, bonus_time, 1.0))
                if unit is None:
                    unit = compute_value_table(t, self.bonus, bonus_time)
                    self._tables[(t, bonus_time, 1.0)] = unit
                table = unit if reward == 1.0 else unit.scaled(reward)
                self._tables[key] = table
        return table

    def lookahead_table(self, decision_time, depth=1, reward=1.0):
        """Table for the frontier of a ``depth``-step lookahead."""
        frontier = decision_time + depth - 1
        return self.table(frontier + 1, frontier, reward)

    def lookahead_tables(self, decision_time, n_arms, depth=1, rewards=None):
        if rewards is None:
            return [self.lookahead_table(decision_time, depth)] * n_arms
        return [self.lookahead_table(decision_time, depth, float(r)) for r in rewards]
