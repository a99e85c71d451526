"""
Index policies. Each index splits into the posterior-mean reward and an
exploration bonus, ``index = mean + bonus``; the bonus half is what the
value-table construction in :mod:`banditlab.elsv` consumes.
"""
import abc
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize, special

from banditlab import ArgumentError, TIE_TOLERANCE
from banditlab.core import success_probability


logger = logging.getLogger(__name__)

# Bayes-UCB quantile levels are kept inside this range
BAYES_UCB_MIN_LEVEL = 0.5
BAYES_UCB_MAX_LEVEL = 1.0 - 1e-12

# largest |I_x(alpha, beta) - p| accepted from betaincinv
QUANTILE_TOLERANCE = 1e-12


def tolerant_argmax(values, tol=TIE_TOLERANCE, rng=None):
    """
    Index of the largest value. Values within ``tol`` of the maximum are
    ties; the lowest index wins unless ``rng`` is given, in which case a
    tied index is drawn uniformly.
    """
    values = np.asarray(values, dtype=float)
    best = values.max()
    tied = np.flatnonzero(values >= best - tol)
    if rng is None or len(tied) == 1:
        return int(tied[0])
    return int(rng.choice(tied))


def tolerant_argmax_rows(values, tol=TIE_TOLERANCE):
    """:func:`tolerant_argmax` applied to every row of a 2-d array."""
    values = np.asarray(values, dtype=float)
    best = values.max(axis=1, keepdims=True)
    return np.argmax(values >= best - tol, axis=1)


@dataclass(frozen=True)
class UcbParams:
    ucb_alpha: float = 1.0

    def __post_init__(self):
        if not self.ucb_alpha > 0:
            raise ArgumentError('ucb_alpha must be positive, got {}'.format(self.ucb_alpha))


class IndexFunction(abc.ABC):
    """
    Per-arm score ``index(arm, t) = mean(arm) + bonus(arm, t)``.

    Subclasses implement :meth:`bonus_values`, which must accept numpy
    arrays of alphas and betas so whole diagonals of a value table can be
    filled at once.
    """

    name = None

    @property
    def params(self):
        return {}

    @abc.abstractmethod
    def bonus_values(self, alpha, beta, t):
        pass

    def bonus(self, arm, t):
        return float(self.bonus_values(arm.alpha, arm.beta, t))

    def index(self, arm, t):
        return success_probability(arm) + self.bonus(arm, t)

    def describe(self):
        if not self.params:
            return self.name
        args = ','.join('{}'.format(v) for v in self.params.values())
        return '{}({})'.format(self.name, args)

    def __repr__(self):
        return '<{} {}>'.format(type(self).__name__, self.describe())


class ZeroBonus(IndexFunction):
    """Greedy baseline: the index is the posterior mean."""

    name = 'zero'

    def bonus_values(self, alpha, beta, t):
        return np.zeros(np.broadcast(alpha, beta).shape)


class UcbIndex(IndexFunction):

    name = 'ucb'

    def __init__(self, params=None):
        self.ucb_params = params or UcbParams()

    @property
    def params(self):
        return {'ucb_alpha': self.ucb_params.ucb_alpha}

    def bonus_values(self, alpha, beta, t):
        pulls = np.maximum(np.asarray(alpha) + np.asarray(beta) - 2, 1)
        return np.sqrt(self.ucb_params.ucb_alpha * math.log(t) / pulls)


class BayesUcbIndex(IndexFunction):

    name = 'bayes_ucb'

    def __init__(self, horizon, c=0.0):
        self.horizon = horizon
        self.c = c

    @property
    def params(self):
        return {'c': self.c}

    def index(self, arm, t):
        return bayes_ucb_index(arm, t, self.horizon, self.c)

    def bonus_values(self, alpha, beta, t):
        level = bayes_ucb_level(t, self.horizon, self.c)
        alpha, beta = np.broadcast_arrays(np.asarray(alpha, dtype=float), np.asarray(beta, dtype=float))
        quantiles = beta_quantiles(level, alpha, beta).reshape(alpha.shape)
        return quantiles - alpha / (alpha + beta)


def ucb_index(arm, t, params=None):
    """
    Optimistic index with the Bayesian mean,
    ``mean + sqrt(ucb_alpha * log t / max(pulls, 1))``.
    """
    return UcbIndex(params).index(arm, t)


def bayes_ucb_level(t, horizon, c=0.0):
    denominator = t * math.log(horizon) ** c if c else float(t)
    if denominator <= 0:
        return BAYES_UCB_MAX_LEVEL
    level = 1.0 - 1.0 / denominator
    return min(max(level, BAYES_UCB_MIN_LEVEL), BAYES_UCB_MAX_LEVEL)


def bayes_ucb_index(arm, t, horizon, c=0.0):
    """
    Upper quantile of the arm's posterior at level
    ``1 - 1 / (t * log(horizon) ** c)``, clamped to ``[0.5, 1 - 1e-12]``.
    """
    return beta_quantile(bayes_ucb_level(t, horizon, c), arm.alpha, arm.beta)


def beta_quantiles(p, alpha, beta):
    """
    Vectorized :func:`beta_quantile` over arrays of Beta parameters.
    ``scipy.special.betaincinv`` gives the answer; entries where it is not
    finite or misses ``p`` by more than ``QUANTILE_TOLERANCE`` are solved
    again by bracketed root finding on ``betainc``.
    """
    alpha, beta = np.broadcast_arrays(np.asarray(alpha, dtype=float), np.asarray(beta, dtype=float))
    x = np.array(special.betaincinv(alpha, beta, p), dtype=float, ndmin=1)
    alpha, beta = alpha.reshape(x.shape), beta.reshape(x.shape)
    with np.errstate(invalid='ignore'):
        miss = ~np.isfinite(x) | (np.abs(special.betainc(alpha, beta, x) - p) > QUANTILE_TOLERANCE)
    for k in np.flatnonzero(miss):
        a, b = alpha.flat[k], beta.flat[k]
        logger.debug('betaincinv missed level %r for Beta(%r, %r); bisecting', p, a, b)
        x.flat[k] = optimize.brentq(
            lambda y: special.betainc(a, b, y) - p,
            0.0, 1.0, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=500)
    return x


def beta_quantile(p, alpha, beta):
    """
    Inverse of the regularized incomplete beta function: the ``x`` with
    ``I_x(alpha, beta) = p``.

    :param float p: probability in (0, 1)
    :param float alpha:
    :param float beta:
    """
    if not 0.0 < p < 1.0:
        raise ArgumentError('p must lie in (0, 1), got {}'.format(p))
    if alpha <= 0 or beta <= 0:
        raise ArgumentError('Beta parameters must be positive, got ({}, {})'.format(alpha, beta))
    return float(beta_quantiles(p, alpha, beta)[0])


def index_scores(state, index, rewards=None):
    """
    Reward-weighted index of every arm, ``rewards[i] * index_i``. An arm
    paying ``r`` on success is the unit arm with every payoff scaled by
    ``r``, and so is its index. With unit rewards this is the index itself.
    """
    if rewards is None:
        return [index.index(arm, state.t) for arm in state.arms]
    return [r * index.index(arm, state.t) for arm, r in zip(state.arms, rewards)]


def index_policy_choose(state, index, rewards=None, rng=None):
    """
    Pull the arm with the largest index; ties go to the lowest arm.
    """
    return tolerant_argmax(index_scores(state, index, rewards), rng=rng)


def index_scores_many(alpha, beta, t, index, rewards=None):
    """
    :func:`index_scores` for many joint states at once. ``alpha`` and
    ``beta`` hold one state per row and one arm per column.
    """
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    scores = alpha / (alpha + beta) + index.bonus_values(alpha, beta, t)
    if rewards is not None:
        scores = scores * np.asarray(rewards, dtype=float)
    return scores


def index_policy_choose_many(alpha, beta, t, index, rewards=None):
    return tolerant_argmax_rows(index_scores_many(alpha, beta, t, index, rewards))


def thompson_choose(state, rng, rewards=None):
    """
    Draw one success probability per arm from its posterior and pull the
    arm with the largest draw (weighted by the arm reward when given).
    """
    alphas = np.array([arm.alpha for arm in state.arms], dtype=float)
    betas = np.array([arm.beta for arm in state.arms], dtype=float)
    theta = rng.beta(alphas, betas)
    if rewards is not None:
        theta = theta * np.asarray(rewards, dtype=float)
    return int(np.argmax(theta))
