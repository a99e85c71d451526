"""
Choosing arms by looking ahead on value tables.
"""
import logging
from dataclasses import dataclass

import numpy as np

from banditlab import ArgumentError, StateRangeError, DEFAULT_MIN_ACCEPTED, DEFAULT_SAMPLE_COUNT
from banditlab.core import Outcome, success_probability, transition
from banditlab.elsv import separable_value
from banditlab.indices import tolerant_argmax, tolerant_argmax_rows


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PlannerConfig:
    depth: int = 1
    sample_count: int = DEFAULT_SAMPLE_COUNT
    min_accepted: int = DEFAULT_MIN_ACCEPTED
    rewards: tuple = None

    def __post_init__(self):
        if self.depth < 1:
            raise ArgumentError('depth must be >= 1, got {}'.format(self.depth))
        if not self.sample_count >= self.min_accepted >= 1:
            raise ArgumentError('need sample_count >= min_accepted >= 1, got {} and {}'.format(
                self.sample_count, self.min_accepted))


@dataclass(frozen=True)
class QValue:
    arm_index: int
    value: float


@dataclass(frozen=True)
class ConstrainedMeans:
    """Posterior means under the ordering constraint, with how they were found."""
    means: np.ndarray
    accepted: int
    sample_count: int
    fallback: bool

    @property
    def acceptance_rate(self):
        return self.accepted / self.sample_count if self.sample_count else 1.0


def _rewards(rewards, n_arms):
    return (1.0,) * n_arms if rewards is None else tuple(rewards)


def _gain(table, arm, p, reward):
    """
    Expected one-step change of the separable value from pulling ``arm``
    with success probability ``p``, plus the expected reward.
    """
    a, b = arm.alpha, arm.beta
    return (p * (reward + table.lookup(a + 1, b))
            + (1.0 - p) * table.lookup(a, b + 1)
            - table.lookup(a, b))


def q_value(state, arm_index, tables, rewards=None):
    """
    ``E[r + v(S')]`` for pulling ``arm_index``, with ``v`` the sum of the
    per-arm tables.

    Computed as ``v(s) + gain`` so that arms in identical states get
    bit-identical q-values.
    """
    rewards = _rewards(rewards, state.n_arms)
    arm = state.arms[arm_index]
    return separable_value(tables, state) + _gain(
        tables[arm_index], arm, success_probability(arm), rewards[arm_index])


def q_values(state, tables, rewards=None):
    rewards = _rewards(rewards, state.n_arms)
    base = separable_value(tables, state)
    return [
        QValue(i, base + _gain(tables[i], arm, success_probability(arm), rewards[i]))
        for i, arm in enumerate(state.arms)
    ]


def one_step_choose(state, tables, rewards=None):
    return tolerant_argmax([q.value for q in q_values(state, tables, rewards)])


def one_step_gains(alpha, beta, tables, rewards=None):
    """
    Per-arm one-step gains ``r p + E[v(S')] - v(s)`` for many joint states
    at once, one state per row of ``alpha`` and ``beta``. The shared
    ``v(s)`` of the other arms cancels between arms, so the gains order
    arms exactly as the q-values do.
    """
    alpha = np.asarray(alpha, dtype=int)
    beta = np.asarray(beta, dtype=int)
    n_arms = alpha.shape[1]
    if len(tables) != n_arms:
        raise ArgumentError('{} tables for {} arms'.format(len(tables), n_arms))
    rewards = _rewards(rewards, n_arms)

    gains = np.empty(alpha.shape)
    for i, table in enumerate(tables):
        a, b = alpha[:, i], beta[:, i]
        if a.size and (a.min() < 1 or b.min() < 1 or (a + b).max() - 1 > table.t - 1):
            raise StateRangeError('successor states outside value table for t={}'.format(table.t))
        p = a / (a + b)
        v = table.values
        gains[:, i] = p * (rewards[i] + v[a, b - 1]) + (1.0 - p) * v[a - 1, b] - v[a - 1, b - 1]
    return gains


def one_step_choose_many(alpha, beta, tables, rewards=None):
    """:func:`one_step_choose` for every row of ``alpha`` and ``beta``."""
    return tolerant_argmax_rows(one_step_gains(alpha, beta, tables, rewards))


class LookaheadPlanner:
    """
    Expectimax search of the bandit decision graph to a fixed depth, with
    the tables evaluated at the frontier. Nodes are keyed on the ordered
    tuple of arm states, so paths that reach the same state share one node.

    After :meth:`choose`, ``expanded`` holds the number of distinct
    interior nodes searched and ``frontier`` the number of distinct leaves
    evaluated.
    """

    def __init__(self, depth, tables, rewards=None):
        if depth < 1:
            raise ArgumentError('depth must be >= 1, got {}'.format(depth))
        self.depth = depth
        self.tables = tables
        self.rewards = rewards
        self.expanded = 0
        self.frontier = 0

    def choose(self, state):
        if self.depth == 1:
            self.expanded, self.frontier = 1, 2 * state.n_arms
            return one_step_choose(state, self.tables, self.rewards)

        rewards = _rewards(self.rewards, state.n_arms)
        memo = {}
        leaves = {}

        def leaf(node):
            if node.arms not in leaves:
                leaves[node.arms] = separable_value(self.tables, node)
            return leaves[node.arms]

        def q(node, i, remaining):
            p = success_probability(node.arms[i])
            win = transition(node, i, Outcome.SUCCESS)
            lose = transition(node, i, Outcome.FAILURE)
            return p * (rewards[i] + value(win, remaining - 1)) + (1.0 - p) * value(lose, remaining - 1)

        def value(node, remaining):
            if remaining == 0:
                return leaf(node)
            if node.arms not in memo:
                memo[node.arms] = max(q(node, i, remaining) for i in range(node.n_arms))
            return memo[node.arms]

        root = [q(state, i, self.depth) for i in range(state.n_arms)]
        self.expanded = len(memo) + 1
        self.frontier = len(leaves)
        logger.debug('lookahead depth=%d at t=%d: %d expanded, %d leaves',
                     self.depth, state.t, self.expanded, self.frontier)
        return tolerant_argmax(root)


def lookahead_choose(state, depth, tables, rewards=None):
    """
    Arm chosen by a ``depth``-step lookahead. Depth one is the one-step
    q-value rule.
    """
    return LookaheadPlanner(depth, tables, rewards).choose(state)


def constrained_posterior_means(state, rng, sample_count=DEFAULT_SAMPLE_COUNT,
                                min_accepted=DEFAULT_MIN_ACCEPTED):
    """
    Estimate the posterior means given ``mu_1 >= mu_2 >= ... >= mu_N`` by
    rejection sampling the independent Beta posteriors.

    With fewer than ``min_accepted`` accepted draws the unconstrained
    posterior means are returned and ``fallback`` is set.
    """
    alphas = np.array([arm.alpha for arm in state.arms], dtype=float)
    betas = np.array([arm.beta for arm in state.arms], dtype=float)
    posterior = alphas / (alphas + betas)

    if state.n_arms == 1:
        return ConstrainedMeans(posterior, sample_count, sample_count, False)

    theta = rng.beta(alphas, betas, size=(sample_count, state.n_arms))
    ordered = np.all(theta[:, :-1] >= theta[:, 1:], axis=1)
    accepted = int(ordered.sum())

    if accepted < min_accepted:
        logger.warning('only %d of %d draws respect the ordering at %s; using unconstrained means',
                       accepted, sample_count, state.counts())
        return ConstrainedMeans(posterior, accepted, sample_count, True)

    return ConstrainedMeans(theta[ordered].mean(axis=0), accepted, sample_count, False)


def constrained_q_values(state, tables, means, rewards=None):
    rewards = _rewards(rewards, state.n_arms)
    base = separable_value(tables, state)
    return [
        QValue(i, base + _gain(tables[i], arm, float(means[i]), rewards[i]))
        for i, arm in enumerate(state.arms)
    ]


def constrained_lookahead(state, tables, rewards, rng, config=None):
    """
    One-step lookahead with the success probability of every arm replaced
    by its mean under the ordering constraint. Returns the arm and the
    :class:`ConstrainedMeans` used. ``rewards`` defaults to
    ``config.rewards``.
    """
    config = config or PlannerConfig()
    if rewards is None:
        rewards = config.rewards
    means = constrained_posterior_means(state, rng, config.sample_count, config.min_accepted)
    q = constrained_q_values(state, tables, means.means, rewards)
    return tolerant_argmax([qv.value for qv in q]), means


def constrained_lookahead_choose(state, tables, rewards, rng, config=None):
    return constrained_lookahead(state, tables, rewards, rng, config)[0]
