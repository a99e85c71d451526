"""
Policies the experiment harness can run, and the text descriptors that
name them in config files, e.g. ``ucb(0.4)`` or ``elsv(gittins,3)``.
"""
import logging
from dataclasses import dataclass

import numpy as np

from banditlab import ConfigError, DEFAULT_MIN_ACCEPTED, DEFAULT_SAMPLE_COUNT
from banditlab.elsv import ValueTableCache
from banditlab.gittins import GittinsIndex
from banditlab.indices import (
    BayesUcbIndex, UcbIndex, UcbParams, ZeroBonus, index_policy_choose, thompson_choose)
from banditlab.planner import LookaheadPlanner, PlannerConfig, constrained_lookahead


logger = logging.getLogger(__name__)

POLICY_KINDS = (
    'ucb', 'bayes_ucb', 'thompson', 'thompson_constrained', 'gittins', 'greedy',
    'oracle', 'elsv', 'elsv_constrained')

BONUS_KINDS = ('ucb', 'gittins', 'zero', 'bayes_ucb')


@dataclass(frozen=True)
class PolicySpec:
    kind: str
    args: tuple = ()

    def __str__(self):
        if not self.args:
            return self.kind
        return '{}({})'.format(self.kind, ','.join(str(a) for a in self.args))

    @property
    def constrained(self):
        return self.kind.endswith('_constrained')

    @property
    def needs_gittins(self):
        return self.kind == 'gittins' or (
            self.kind.startswith('elsv') and bool(self.args) and parse_policy(self.args[0]).kind == 'gittins')

    @property
    def depth(self):
        """Lookahead depth of an ``elsv`` policy; 1 for everything else."""
        if self.kind == 'elsv' and len(self.args) > 1:
            depth = _number(self.args[1], int, 'depth')
            if depth < 1:
                raise ConfigError('lookahead depth must be >= 1, got {}'.format(depth))
            return depth
        return 1

    def table_pulls(self, horizon):
        """Pulls an index table must cover to run this policy for ``horizon`` steps."""
        return horizon + self.depth - 1


def _split_args(text):
    args, depth, current = [], 0, ''
    for c in text:
        if c == ',' and depth == 0:
            args.append(current.strip())
            current = ''
            continue
        depth += {'(': 1, ')': -1}.get(c, 0)
        current += c
    if current.strip():
        args.append(current.strip())
    return tuple(args)


def parse_policy(text):
    """
    Parse ``name`` or ``name(arg, ...)``. Arguments stay strings; nested
    descriptors such as ``elsv(ucb(0.4),1)`` keep their parentheses.
    """
    text = text.strip().replace(' ', '')
    if '(' in text:
        if not text.endswith(')'):
            raise ConfigError('malformed policy descriptor {!r}'.format(text))
        name, _, rest = text.partition('(')
        spec = PolicySpec(name, _split_args(rest[:-1]))
    else:
        spec = PolicySpec(text)
    if spec.kind not in POLICY_KINDS and spec.kind not in BONUS_KINDS:
        raise ConfigError('unknown policy {!r}'.format(spec.kind))
    return spec


def _number(text, cast, what):
    try:
        return cast(text)
    except (TypeError, ValueError):
        raise ConfigError('{} must be a number, got {!r}'.format(what, text))


def make_index(descriptor, horizon, gittins_table=None, max_pulls=None):
    """
    Index function for a bonus descriptor such as ``ucb(0.4)``. A Gittins
    table must cover ``max_pulls`` pulls, ``horizon`` when omitted.
    """
    spec = parse_policy(descriptor) if isinstance(descriptor, str) else descriptor
    if spec.kind in ('ucb',):
        alpha = _number(spec.args[0], float, 'ucb_alpha') if spec.args else 1.0
        return UcbIndex(UcbParams(alpha))
    if spec.kind in ('zero', 'greedy'):
        return ZeroBonus()
    if spec.kind == 'bayes_ucb':
        c = _number(spec.args[0], float, 'c') if spec.args else 0.0
        return BayesUcbIndex(horizon, c)
    if spec.kind == 'gittins':
        if gittins_table is None:
            raise ConfigError('a Gittins table is required for {}'.format(spec))
        needed = horizon if max_pulls is None else max_pulls
        if gittins_table.max_pulls < needed:
            raise ConfigError('Gittins table covers {} pulls, {} needs {}'.format(
                gittins_table.max_pulls, spec, needed))
        return GittinsIndex(gittins_table)
    raise ConfigError('{} is not an index'.format(spec))


class IndexPolicy:

    def __init__(self, index, rewards=None):
        self.index = index
        self.rewards = rewards

    def choose(self, state, rng):
        return index_policy_choose(state, self.index, self.rewards)


class ThompsonPolicy:

    def __init__(self, rewards=None):
        self.rewards = rewards

    def choose(self, state, rng):
        return thompson_choose(state, rng, self.rewards)


class ConstrainedThompsonPolicy:
    """
    Thompson sampling from the posterior restricted to ordered success
    probabilities. Joint draws are made in batches of ``batch_size`` until
    one respects the ordering or ``sample_count`` draws are spent; in the
    latter case the first draw is used and ``fallbacks`` counts it.
    """

    batch_size = 64

    def __init__(self, rewards=None, sample_count=DEFAULT_SAMPLE_COUNT):
        self.rewards = rewards
        self.sample_count = sample_count
        self.fallbacks = 0

    def _ordered_draw(self, state, rng):
        alphas = np.array([arm.alpha for arm in state.arms], dtype=float)
        betas = np.array([arm.beta for arm in state.arms], dtype=float)
        first = None
        drawn = 0
        while drawn < self.sample_count:
            size = min(self.batch_size, self.sample_count - drawn)
            theta = rng.beta(alphas, betas, size=(size, state.n_arms))
            drawn += size
            if first is None:
                first = theta[0]
            ordered = np.flatnonzero(np.all(theta[:, :-1] >= theta[:, 1:], axis=1))
            if len(ordered):
                return theta[ordered[0]]
        self.fallbacks += 1
        return first

    def choose(self, state, rng):
        sample = self._ordered_draw(state, rng)
        if self.rewards is not None:
            sample = sample * np.asarray(self.rewards)
        return int(np.argmax(sample))


class ElsvPolicy:

    def __init__(self, cache, depth=1, rewards=None):
        self.cache = cache
        self.depth = depth
        self.rewards = rewards

    def tables(self, state):
        return self.cache.lookahead_tables(state.t, state.n_arms, self.depth, self.rewards)

    def choose(self, state, rng):
        return LookaheadPlanner(self.depth, self.tables(state), self.rewards).choose(state)


class ConstrainedElsvPolicy:
    """
    One-step lookahead on the means under the ordering constraint. Success
    rewards come from ``config.rewards``; ``fallbacks`` counts decisions
    that used the unconstrained means.
    """

    def __init__(self, cache, config=None):
        self.cache = cache
        self.config = config or PlannerConfig()
        self.fallbacks = 0

    def choose(self, state, rng):
        tables = self.cache.lookahead_tables(state.t, state.n_arms, rewards=self.config.rewards)
        arm, means = constrained_lookahead(state, tables, None, rng, self.config)
        self.fallbacks += means.fallback
        return arm


class OraclePolicy:
    """Pulls the arm with the best expected reward under the true parameters."""

    def __init__(self, instance):
        self.arm = instance.best_arm()

    def choose(self, state, rng):
        return self.arm


class PolicyFactory:
    """
    Builds a fresh policy for every episode of an experiment. Value tables
    are shared between episodes through one cache per experiment.
    """

    def __init__(self, spec, prior, horizon, gittins_table=None,
                 sample_count=DEFAULT_SAMPLE_COUNT, min_accepted=DEFAULT_MIN_ACCEPTED):
        self.spec = parse_policy(spec) if isinstance(spec, str) else spec
        self.prior = prior
        self.horizon = horizon
        self.gittins_table = gittins_table
        self.sample_count = sample_count
        self.min_accepted = min_accepted

        if self.spec.kind not in POLICY_KINDS:
            raise ConfigError('{} is a bonus, not a policy'.format(self.spec))
        if self.spec.constrained and not prior.constrained:
            raise ConfigError('{} needs an ordered prior'.format(self.spec))

        self.cache = None
        self.index = None
        if self.spec.kind in ('ucb', 'bayes_ucb', 'gittins', 'greedy'):
            self.index = make_index(self.spec, horizon, gittins_table)
        elif self.spec.kind.startswith('elsv'):
            if not self.spec.args:
                raise ConfigError('{} needs a bonus argument'.format(self.spec))
            self.cache = ValueTableCache(make_index(
                self.spec.args[0], horizon, gittins_table, self.spec.table_pulls(horizon)))
        self.depth = self.spec.depth
        if self.spec.kind == 'elsv_constrained' and len(self.spec.args) > 1:
            self.sample_count = _number(self.spec.args[1], int, 'sample_count')

    @property
    def rewards(self):
        rewards = self.prior.rewards
        return None if all(r == 1.0 for r in rewards) else rewards

    def __call__(self, instance):
        kind = self.spec.kind
        if self.index is not None:
            return IndexPolicy(self.index, self.rewards)
        if kind == 'thompson':
            return ThompsonPolicy(self.rewards)
        if kind == 'thompson_constrained':
            return ConstrainedThompsonPolicy(self.rewards, self.sample_count)
        if kind == 'elsv':
            return ElsvPolicy(self.cache, self.depth, self.rewards)
        if kind == 'elsv_constrained':
            config = PlannerConfig(1, self.sample_count, min(self.min_accepted, self.sample_count),
                                   self.rewards)
            return ConstrainedElsvPolicy(self.cache, config)
        if kind == 'oracle':
            return OraclePolicy(instance)
        raise ConfigError('unknown policy {}'.format(self.spec))
