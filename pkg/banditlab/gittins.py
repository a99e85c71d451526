"""
Gittins indices of Beta-Bernoulli arms by the calibration method.

For every retirement rate ``lam`` on a grid the one-armed retirement
problem is solved by backward induction,

    V(a, b) = max(lam / (1 - gamma),
                  p (1 + gamma V(a + 1, b)) + (1 - p) gamma V(a, b + 1)),

with ``p = a / (a + b)`` and ``V = lam / (1 - gamma)`` at the truncation
depth. The index of ``(a, b)`` is the largest grid ``lam`` at which
continuing is still weakly preferred.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import pandas as pd

from banditlab import (
    ArgumentError, ResourceBudgetError, StateRangeError, TableFormatError,
    TableMismatchError, DEFAULT_GAMMA, DEFAULT_GITTINS_HORIZON,
    DEFAULT_LAMBDA_STEP, DEFAULT_MAX_PULLS, DEFAULT_STATE_BUDGET)
from banditlab.core import iter_arm_states
from banditlab.indices import IndexFunction
from banditlab.tablefile import check_state_rows, read_state_rows, write_state_rows


logger = logging.getLogger(__name__)

TABLE_MAGIC = '#gittins-table v1'


@dataclass(frozen=True, eq=False)
class GittinsTable:
    """
    Gittins indices for every arm state with ``alpha + beta - 2 <= max_pulls``.
    ``values[alpha - 1, beta - 1]`` holds the index; cells outside the
    triangle are NaN.
    """
    gamma: float
    horizon: int
    lambda_step: float
    max_pulls: int
    values: np.ndarray

    def __eq__(self, other):
        if not isinstance(other, GittinsTable):
            return NotImplemented
        return (self.header() == other.header()
                and np.array_equal(self.values, other.values, equal_nan=True))

    def header(self):
        return (self.gamma, self.horizon, self.lambda_step, self.max_pulls)

    def covers(self, alpha, beta):
        return alpha >= 1 and beta >= 1 and alpha + beta - 2 <= self.max_pulls


def lambda_grid(lambda_step):
    n_steps = int(round(1.0 / lambda_step))
    return np.arange(n_steps + 1) * lambda_step


def _continuation(p, v_success, v_failure, gamma):
    return p * (1.0 + gamma * v_success) + (1.0 - p) * gamma * v_failure


def _diagonal(pulls):
    alpha = np.arange(1, pulls + 2, dtype=float)
    beta = pulls + 2 - alpha
    return alpha, beta


def _check_args(gamma, horizon, lambda_step, max_pulls):
    if not 0.0 < gamma < 1.0:
        raise ArgumentError('gamma must lie in (0, 1), got {}'.format(gamma))
    if not 0.0 < lambda_step < 0.5:
        raise ArgumentError('lambda_step must lie in (0, 0.5), got {}'.format(lambda_step))
    if max_pulls < 0:
        raise ArgumentError('max_pulls must be >= 0, got {}'.format(max_pulls))
    if horizon < max_pulls:
        raise ArgumentError('horizon {} must be >= max_pulls {}'.format(horizon, max_pulls))


def _depth(horizon, max_pulls):
    # the outermost covered diagonal still needs one continuation step
    return max(horizon, max_pulls + 1)


def _sweep(lambdas, gamma, horizon, max_pulls):
    """
    Solve the retirement problem for a block of lambdas at once and return,
    for each diagonal ``pulls <= max_pulls``, the largest position in
    ``lambdas`` where continuation is weakly preferred (-1 if none).
    """
    retire = (lambdas / (1.0 - gamma))[:, None]
    depth = _depth(horizon, max_pulls)
    value = np.repeat(retire, depth + 1, axis=1)
    last_preferred = {}

    for pulls in range(depth - 1, -1, -1):
        alpha, beta = _diagonal(pulls)
        p = alpha / (alpha + beta)
        cont = _continuation(p, value[:, 1:], value[:, :-1], gamma)
        if pulls <= max_pulls:
            positions = np.arange(len(lambdas))[:, None]
            last_preferred[pulls] = np.where(cont >= retire, positions, -1).max(axis=0)
        value = np.maximum(retire, cont)

    return last_preferred


def compute_gittins_table(gamma=DEFAULT_GAMMA, horizon=DEFAULT_GITTINS_HORIZON,
                          lambda_step=DEFAULT_LAMBDA_STEP, max_pulls=DEFAULT_MAX_PULLS,
                          state_budget=DEFAULT_STATE_BUDGET, workers=1):
    """
    Compute the Gittins index table by sweeping the whole lambda grid.

    :param float gamma: discount factor in (0, 1)
    :param int horizon: truncation depth of the retirement problem
    :param float lambda_step: grid resolution in (0, 0.5)
    :param int max_pulls: the table covers ``alpha + beta - 2 <= max_pulls``
    :param int state_budget: refuse computations touching more lambda x
        state cells than this
    :param int workers: threads sharing the lambda grid
    """
    _check_args(gamma, horizon, lambda_step, max_pulls)

    grid = lambda_grid(lambda_step)
    cells = len(grid) * (horizon + 1) * (horizon + 2) // 2
    if cells > state_budget:
        raise ResourceBudgetError(
            'Gittins table needs {} cells, budget is {}'.format(cells, state_budget))

    logger.info('Computing Gittins table gamma=%s horizon=%s step=%s max_pulls=%s (%d lambdas)',
                gamma, horizon, lambda_step, max_pulls, len(grid))

    blocks = np.array_split(np.arange(len(grid)), max(1, min(workers, len(grid))))
    with ThreadPoolExecutor(max_workers=max(1, workers)) as executor:
        results = list(executor.map(
            lambda block: (block[0], _sweep(grid[block], gamma, horizon, max_pulls)), blocks))

    values = np.full((max_pulls + 1, max_pulls + 1), np.nan)
    for pulls in range(max_pulls + 1):
        best = np.full(pulls + 1, -1)
        for offset, last_preferred in results:
            found = last_preferred[pulls]
            best = np.maximum(best, np.where(found >= 0, found + offset, -1))
        alpha, beta = _diagonal(pulls)
        values[alpha.astype(int) - 1, beta.astype(int) - 1] = grid[np.maximum(best, 0)]

    return GittinsTable(gamma, horizon, lambda_step, max_pulls, values)


def _single_lambda_values(lam, gamma, horizon, max_pulls):
    """Continuation and retirement values at one lambda, per diagonal."""
    retire = lam / (1.0 - gamma)
    depth = _depth(horizon, max_pulls)
    value = np.full(depth + 1, retire)
    prefers = {}
    for pulls in range(depth - 1, -1, -1):
        alpha, beta = _diagonal(pulls)
        p = alpha / (alpha + beta)
        cont = _continuation(p, value[1:], value[:-1], gamma)
        if pulls <= max_pulls:
            prefers[pulls] = cont >= retire
        value = np.maximum(retire, cont)
    return prefers


def compute_gittins_table_bisection(gamma=DEFAULT_GAMMA, horizon=DEFAULT_GITTINS_HORIZON,
                                    lambda_step=DEFAULT_LAMBDA_STEP, max_pulls=DEFAULT_MAX_PULLS):
    """
    Same table as :func:`compute_gittins_table`, found by bisecting the
    lambda grid separately for every state. Much slower; used to check the
    sweep.
    """
    _check_args(gamma, horizon, lambda_step, max_pulls)

    grid = lambda_grid(lambda_step)
    cache = {}

    def prefers(position):
        if position not in cache:
            cache[position] = _single_lambda_values(grid[position], gamma, horizon, max_pulls)
        return cache[position]

    values = np.full((max_pulls + 1, max_pulls + 1), np.nan)
    for arm in iter_arm_states(max_pulls + 1):
        pulls, k = arm.pulls, arm.alpha - 1
        low, high = 0, len(grid) - 1
        if prefers(high)[pulls][k]:
            low = high
        while high - low > 1:
            mid = (low + high) // 2
            if prefers(mid)[pulls][k]:
                low = mid
            else:
                high = mid
        values[arm.alpha - 1, arm.beta - 1] = grid[low]

    return GittinsTable(gamma, horizon, lambda_step, max_pulls, values)


def gittins_index(table, arm):
    if not table.covers(arm.alpha, arm.beta):
        raise StateRangeError(
            'state ({}, {}) outside Gittins table with max_pulls={}'.format(
                arm.alpha, arm.beta, table.max_pulls))
    return float(table.values[arm.alpha - 1, arm.beta - 1])


class GittinsIndex(IndexFunction):
    """Index function backed by a precomputed table; time independent."""

    name = 'gittins'

    def __init__(self, table):
        self.table = table

    def index(self, arm, t):
        return gittins_index(self.table, arm)

    def bonus_values(self, alpha, beta, t):
        alpha = np.asarray(alpha)
        beta = np.asarray(beta)
        if np.any(alpha + beta - 2 > self.table.max_pulls):
            raise StateRangeError(
                'states beyond max_pulls={} requested from Gittins table'.format(self.table.max_pulls))
        alpha_i = alpha.astype(int)
        beta_i = beta.astype(int)
        return self.table.values[alpha_i - 1, beta_i - 1] - alpha / (alpha + beta)


def save_table(table, path):
    states = list(iter_arm_states(table.max_pulls + 1))
    alpha = np.array([arm.alpha for arm in states])
    beta = np.array([arm.beta for arm in states])
    frame = pd.DataFrame({'alpha': alpha, 'beta': beta, 'index': table.values[alpha - 1, beta - 1]})
    header = 'gamma={!r},horizon={},step={!r},max_pulls={}'.format(
        table.gamma, table.horizon, table.lambda_step, table.max_pulls)
    write_state_rows(path, TABLE_MAGIC, header, frame)


def _parse_header(line, lineno, fields):
    try:
        pairs = dict(item.split('=', 1) for item in line.strip().split(','))
        return {key: cast(pairs[key]) for key, cast in fields.items()}
    except (KeyError, ValueError) as e:
        raise TableFormatError('malformed header {!r} ({})'.format(line.strip(), e), lineno)


def _check_expected(header, expected, lineno):
    for key, want in (expected or {}).items():
        if want is not None and header[key] != want:
            raise TableMismatchError(
                'header {}={} does not match requested {}'.format(key, header[key], want), lineno)


def load_table(path, gamma=None, horizon=None, lambda_step=None, max_pulls=None):
    """
    Read a table written by :func:`save_table`. Any of the keyword
    arguments that is given must match the file header.
    """
    line, frame = read_state_rows(path, TABLE_MAGIC, ['alpha', 'beta', 'index'])
    header = _parse_header(line, 2, {'gamma': float, 'horizon': int, 'step': float, 'max_pulls': int})
    _check_expected(header, {'gamma': gamma, 'horizon': horizon, 'step': lambda_step,
                             'max_pulls': max_pulls}, 2)

    size = header['max_pulls'] + 1
    states = list(iter_arm_states(size))
    index = check_state_rows(frame, states, 'index')
    values = np.full((size, size), np.nan)
    values[frame['alpha'].to_numpy(dtype=int) - 1, frame['beta'].to_numpy(dtype=int) - 1] = index

    return GittinsTable(header['gamma'], header['horizon'], header['step'], header['max_pulls'], values)
