"""
The Beta-Bernoulli bandit as a Markov decision process: per-arm posteriors,
joint states, transitions, priors and hidden problem instances.
"""
import enum
import logging
from dataclasses import dataclass

import numpy as np

from banditlab import ArgumentError, ConfigError


logger = logging.getLogger(__name__)


class Outcome(enum.Enum):
    SUCCESS = 1
    FAILURE = 0


@dataclass(frozen=True, order=True)
class ArmPosterior:
    """
    Beta(alpha, beta) belief over one arm's success probability. Under the
    uniform prior ``alpha - 1`` successes and ``beta - 1`` failures have been
    observed.
    """
    alpha: int = 1
    beta: int = 1

    def __post_init__(self):
        if self.alpha < 1 or self.beta < 1:
            raise ArgumentError(
                'Beta parameters must be >= 1, got ({}, {})'.format(self.alpha, self.beta))

    @property
    def pulls(self):
        return self.alpha + self.beta - 2

    def success(self):
        return ArmPosterior(self.alpha + 1, self.beta)

    def failure(self):
        return ArmPosterior(self.alpha, self.beta + 1)


@dataclass(frozen=True)
class BanditState:
    arms: tuple
    t: int = 1

    def __post_init__(self):
        object.__setattr__(self, 'arms', tuple(self.arms))
        if self.t < 1:
            raise ArgumentError('time step must be >= 1, got {}'.format(self.t))
        if not self.arms:
            raise ArgumentError('a state needs at least one arm')

    @classmethod
    def initial(cls, n_arms, prior_alpha=1, prior_beta=1):
        alphas = _per_arm(prior_alpha, n_arms)
        betas = _per_arm(prior_beta, n_arms)
        return cls(tuple(ArmPosterior(a, b) for a, b in zip(alphas, betas)), 1)

    @classmethod
    def from_counts(cls, counts, t=None):
        """
        Build a state from ``[(alpha, beta), ...]``. When ``t`` is omitted it
        is inferred from the total number of pulls.
        """
        arms = tuple(ArmPosterior(a, b) for a, b in counts)
        if t is None:
            t = sum(arm.pulls for arm in arms) + 1
        return cls(arms, t)

    @property
    def n_arms(self):
        return len(self.arms)

    def counts(self):
        return tuple((arm.alpha, arm.beta) for arm in self.arms)


@dataclass(frozen=True)
class ProblemInstance:
    mu: tuple
    rewards: tuple
    horizon: int
    constrained: bool = False

    def __post_init__(self):
        object.__setattr__(self, 'mu', tuple(float(m) for m in self.mu))
        object.__setattr__(self, 'rewards', tuple(float(r) for r in self.rewards))
        if len(self.mu) != len(self.rewards):
            raise ArgumentError('mu and rewards must have the same length')
        if any(m < 0.0 or m > 1.0 for m in self.mu):
            raise ArgumentError('success probabilities must lie in [0, 1]: {}'.format(self.mu))
        if any(r <= 0.0 for r in self.rewards):
            raise ArgumentError('rewards must be positive: {}'.format(self.rewards))
        if self.horizon < 1:
            raise ArgumentError('horizon must be >= 1, got {}'.format(self.horizon))
        if self.constrained:
            if any(a < b for a, b in zip(self.mu, self.mu[1:])):
                raise ArgumentError('constrained instance needs non-increasing mu: {}'.format(self.mu))
            _check_increasing(self.rewards)

    @property
    def n_arms(self):
        return len(self.mu)

    def expected_rewards(self):
        return np.asarray(self.mu) * np.asarray(self.rewards)

    def best_arm(self):
        return int(np.argmax(self.expected_rewards()))


@dataclass(frozen=True)
class PriorSpec:
    n_arms: int
    constrained: bool = False
    rewards: tuple = None
    prior_alpha: tuple = None
    prior_beta: tuple = None

    def __post_init__(self):
        if self.n_arms < 1:
            raise ArgumentError('n_arms must be >= 1, got {}'.format(self.n_arms))
        rewards = (1.0,) * self.n_arms if self.rewards is None else tuple(float(r) for r in self.rewards)
        object.__setattr__(self, 'rewards', rewards)
        object.__setattr__(self, 'prior_alpha', tuple(_per_arm(1 if self.prior_alpha is None else self.prior_alpha, self.n_arms)))
        object.__setattr__(self, 'prior_beta', tuple(_per_arm(1 if self.prior_beta is None else self.prior_beta, self.n_arms)))
        if len(self.rewards) != self.n_arms:
            raise ArgumentError('expected {} rewards, got {}'.format(self.n_arms, len(self.rewards)))
        if any(a < 1 for a in self.prior_alpha) or any(b < 1 for b in self.prior_beta):
            raise ArgumentError('prior parameters must be >= 1')
        if self.constrained:
            _check_increasing(self.rewards)
            if len(set(zip(self.prior_alpha, self.prior_beta))) > 1:
                raise ConfigError('an ordered prior needs identical per-arm priors')

    def initial_state(self):
        return BanditState.initial(self.n_arms, self.prior_alpha, self.prior_beta)


def _per_arm(value, n_arms):
    if isinstance(value, (int, np.integer)):
        return [int(value)] * n_arms
    value = [int(v) for v in value]
    if len(value) != n_arms:
        raise ArgumentError('expected {} per-arm values, got {}'.format(n_arms, len(value)))
    return value


def _check_increasing(rewards):
    if any(a >= b for a, b in zip(rewards, rewards[1:])):
        raise ArgumentError('constrained rewards must be strictly increasing: {}'.format(rewards))


def _check_arm(n_arms, arm_index):
    if not 0 <= arm_index < n_arms:
        raise ArgumentError('arm index {} out of range for {} arms'.format(arm_index, n_arms))


def success_probability(arm):
    """
    Posterior mean of an arm, which is also the probability that the next
    pull succeeds.
    """
    return arm.alpha / (arm.alpha + arm.beta)


def transition(state, arm_index, outcome):
    _check_arm(state.n_arms, arm_index)

    arm = state.arms[arm_index]
    arm = arm.success() if outcome is Outcome.SUCCESS else arm.failure()
    arms = state.arms[:arm_index] + (arm,) + state.arms[arm_index + 1:]

    return BanditState(arms, state.t + 1)


def sample_instance(prior, rng, horizon=1):
    """
    Draw the hidden success probabilities of one problem.

    Unconstrained priors draw each arm independently from its Beta prior.
    Ordered priors draw i.i.d. from the shared prior and sort in decreasing
    order, which is the prior conditioned on ``mu_1 >= ... >= mu_N``.

    :param PriorSpec prior:
    :param numpy.random.Generator rng:
    :param int horizon: copied into the instance
    """
    mu = rng.beta(np.asarray(prior.prior_alpha, dtype=float), np.asarray(prior.prior_beta, dtype=float))
    if prior.constrained:
        mu = np.sort(mu)[::-1]

    return ProblemInstance(tuple(mu), prior.rewards, horizon, constrained=prior.constrained)


def pull(instance, arm_index, rng):
    _check_arm(instance.n_arms, arm_index)
    return Outcome.SUCCESS if rng.random() < instance.mu[arm_index] else Outcome.FAILURE


def enumerate_arm_states(t):
    """
    All arm posteriors reachable within ``t - 1`` pulls of the uniform prior,
    i.e. ``alpha + beta - 2 <= t - 1``. There are ``t (t + 1) / 2`` of them.
    """
    if t < 1:
        raise ArgumentError('t must be >= 1, got {}'.format(t))
    return frozenset(iter_arm_states(t))


def iter_arm_states(t):
    """Arm states of ``enumerate_arm_states`` ordered by (alpha + beta, alpha)."""
    for pulls in range(t):
        for alpha in range(1, pulls + 2):
            yield ArmPosterior(alpha, pulls + 2 - alpha)


def reachable_states(n_arms, t, prior_alpha=1, prior_beta=1):
    """
    Every joint state at time step ``t``, i.e. after exactly ``t - 1`` pulls
    distributed in any way among ``n_arms`` arms.
    """
    start = BanditState.initial(n_arms, prior_alpha, prior_beta)
    frontier = {start}
    for _ in range(t - 1):
        frontier = {
            transition(state, i, outcome)
            for state in frontier
            for i in range(n_arms)
            for outcome in Outcome
        }
    return frontier


def _splits(total, parts):
    if parts == 1:
        yield (total,)
        return
    for k in range(total + 1):
        for rest in _splits(total - k, parts - 1):
            yield (k,) + rest


def level_arrays(n_arms, t):
    """
    The joint states of :func:`reachable_states` from the uniform prior as
    two integer arrays ``(alpha, beta)`` of shape ``(states, n_arms)``, for
    checks that sweep whole levels with numpy.
    """
    if n_arms < 1 or t < 1:
        raise ArgumentError('need n_arms >= 1 and t >= 1, got {} and {}'.format(n_arms, t))
    alphas, betas = [], []
    for split in _splits(t - 1, n_arms):
        grids = np.meshgrid(*[np.arange(1, k + 2) for k in split], indexing='ij')
        alpha = np.stack([grid.ravel() for grid in grids], axis=1)
        alphas.append(alpha)
        betas.append(np.asarray(split) + 2 - alpha)
    return np.concatenate(alphas), np.concatenate(betas)
