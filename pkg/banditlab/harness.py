"""
Monte Carlo estimation of Bayesian regret, residual diagnostics, and the
CSV files they produce.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import pandas as pd

from banditlab import BanditLabError, ConfigError, DiagnosticError, TableFormatError
from banditlab.core import BanditState, pull, sample_instance, transition
from banditlab.elsv import separable_value
from banditlab.gittins import compute_gittins_table, load_table
from banditlab.planner import q_value
from banditlab.policies import ElsvPolicy, PolicyFactory


logger = logging.getLogger(__name__)

Z_95 = 1.96

CSV_COLUMNS = ['t', 'mean_cum_regret', 'ci_low', 'ci_high', 'n']


def episode_rng(master_seed, k):
    """Random stream of instance ``k``; depends only on the seed and ``k``."""
    return np.random.default_rng(np.random.SeedSequence([master_seed, k]))


def step_regret(instance, arm_index):
    expected = instance.expected_rewards()
    return float(expected.max() - expected[arm_index])


def run_episode(policy, instance, rng, state=None):
    """
    Play ``instance.horizon`` decisions and return the expected (pseudo)
    regret of each one.

    :param policy: object with ``choose(state, rng) -> arm index``
    :param ProblemInstance instance:
    :param numpy.random.Generator rng:
    :param BanditState state: starting posterior, the uniform prior if omitted
    """
    if state is None:
        state = BanditState.initial(instance.n_arms)
    regret = np.empty(instance.horizon)

    for step in range(instance.horizon):
        arm = policy.choose(state, rng)
        regret[step] = step_regret(instance, arm)
        state = transition(state, arm, pull(instance, arm, rng))

    return regret


@dataclass(frozen=True, eq=False)
class RegretCurve:
    """
    Mean cumulative regret per step with its 95% confidence band.
    ``fallbacks`` totals the decisions, over all instances, where rejection
    sampling for an ordered prior found too few draws.
    """
    mean: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray
    n_instances: int
    config: object = None
    fallbacks: int = 0

    @property
    def t(self):
        return np.arange(1, len(self.mean) + 1)

    @property
    def half_width(self):
        return (self.ci_high - self.ci_low) / 2.0

    @property
    def single_instance(self):
        return self.n_instances == 1

    @property
    def final(self):
        return float(self.mean[-1])

    @property
    def final_half_width(self):
        return float(self.half_width[-1])


def summarize(cumulative):
    """
    Mean and normal-approximation 95% half-width of cumulative regret
    traces stacked one instance per row.
    """
    cumulative = np.asarray(cumulative, dtype=float)
    n = cumulative.shape[0]
    mean = cumulative.mean(axis=0)
    if n == 1:
        logger.warning('single-instance regret curve; confidence band is zero')
        return mean, np.zeros_like(mean)
    return mean, Z_95 * cumulative.std(axis=0, ddof=1) / math.sqrt(n)


def gittins_table_for(config):
    """Load or compute the Gittins table a config's policy needs, or None."""
    spec = config.policy_spec
    if not spec.needs_gittins:
        return None
    max_pulls = spec.table_pulls(config.horizon)
    if config.gittins_table:
        table = load_table(config.gittins_table, gamma=config.gittins_gamma)
        if table.max_pulls < max_pulls:
            raise ConfigError('Gittins table {} covers {} pulls, {} needs {}'.format(
                config.gittins_table, table.max_pulls, spec, max_pulls))
        return table
    return compute_gittins_table(
        config.gittins_gamma, max(config.gittins_horizon, max_pulls),
        config.gittins_step, max_pulls, workers=config.workers)


def policy_factory(config, gittins_table=None):
    if gittins_table is None:
        gittins_table = gittins_table_for(config)
    return PolicyFactory(config.policy_spec, config.prior, config.horizon, gittins_table,
                         config.sample_count, config.min_accepted)


def _map_instances(config, work):
    def guarded(k):
        try:
            return work(k)
        except BanditLabError as e:
            raise type(e)('instance {}: {}'.format(k, e)) from e

    with ThreadPoolExecutor(max_workers=config.workers) as executor:
        return list(executor.map(guarded, range(config.n_instances)))


def bayes_regret(config, gittins_table=None):
    """
    Average cumulative regret over ``config.n_instances`` problems drawn
    from the prior.

    Instance ``k`` uses its own random stream seeded from
    ``(master_seed, k)`` and results are reduced in instance order, so the
    curve does not depend on ``config.workers``.
    """
    factory = policy_factory(config, gittins_table)
    logger.info('estimating Bayesian regret of %s: %d instances, T=%d',
                config.policy, config.n_instances, config.horizon)

    def work(k):
        rng = episode_rng(config.master_seed, k)
        instance = sample_instance(config.prior, rng, config.horizon)
        policy = factory(instance)
        regret = run_episode(policy, instance, rng, config.prior.initial_state())
        return np.cumsum(regret), getattr(policy, 'fallbacks', 0)

    results = _map_instances(config, work)
    mean, half_width = summarize(np.stack([cumulative for cumulative, _ in results]))
    fallbacks = sum(count for _, count in results)
    if fallbacks:
        logger.warning('%s fell back to unconstrained sampling in %d decisions', config.policy, fallbacks)
    return RegretCurve(mean, mean - half_width, mean + half_width, config.n_instances, config, fallbacks)


def residual_phi(mu, state, arm_index, tables, rewards=None):
    """
    Lookahead q-value minus the value estimate that knows the truth,
    ``q(s, a) - (mu_a r_a + v(s))``.
    """
    rewards = (1.0,) * state.n_arms if rewards is None else rewards
    return (q_value(state, arm_index, tables, rewards)
            - (mu[arm_index] * rewards[arm_index] + separable_value(tables, state)))


@dataclass(frozen=True, eq=False)
class ResidualReport:
    """
    Per-step means of the residual at the chosen arm and at the best arm,
    the regret bound their sums give, and the regret actually measured.
    """
    phi_policy: np.ndarray
    phi_best: np.ndarray
    bound: float
    regret: float
    standard_error: float
    n_instances: int

    @property
    def holds(self):
        return self.regret <= self.bound + 3.0 * self.standard_error

    def lines(self):
        yield 'instances      {}'.format(self.n_instances)
        yield 'regret         {:.6f}'.format(self.regret)
        yield 'bound          {:.6f}'.format(self.bound)
        yield 'sum phi(pi)    {:.6f}'.format(float(self.phi_policy.sum()))
        yield 'sum phi(best)  {:.6f}'.format(float(self.phi_best.sum()))
        yield 'std error      {:.6f}'.format(self.standard_error)
        yield 'holds          {}'.format(self.holds)


def verify_decomposition(config, gittins_table=None, raise_on_failure=True):
    """
    Check by simulation that the regret of a one-step value lookahead is
    bounded by the summed residuals at the chosen arm minus those at the
    best arm.
    """
    spec = config.policy_spec
    if spec.kind != 'elsv':
        raise ConfigError('decomposition needs a one-step elsv policy, got {}'.format(spec))
    factory = policy_factory(config, gittins_table)
    if factory.depth != 1:
        raise ConfigError('decomposition needs one-step lookahead, got depth {}'.format(factory.depth))
    rewards = config.prior.rewards

    def work(k):
        rng = episode_rng(config.master_seed, k)
        instance = sample_instance(config.prior, rng, config.horizon)
        policy = factory(instance)
        if not isinstance(policy, ElsvPolicy):
            raise ConfigError('decomposition needs an elsv policy')
        best = instance.best_arm()
        state = config.prior.initial_state()
        trace = np.empty((3, config.horizon))
        for step in range(config.horizon):
            tables = policy.tables(state)
            arm = policy.choose(state, rng)
            trace[0, step] = residual_phi(instance.mu, state, arm, tables, rewards)
            trace[1, step] = residual_phi(instance.mu, state, best, tables, rewards)
            trace[2, step] = step_regret(instance, arm)
            state = transition(state, arm, pull(instance, arm, rng))
        return trace

    traces = np.stack(_map_instances(config, work))
    bounds = traces[:, 0, :].sum(axis=1) - traces[:, 1, :].sum(axis=1)
    regrets = traces[:, 2, :].sum(axis=1)
    n = config.n_instances
    if n > 1:
        se = math.sqrt((bounds.var(ddof=1) + regrets.var(ddof=1)) / n)
    else:
        se = 0.0

    report = ResidualReport(traces[:, 0, :].mean(axis=0), traces[:, 1, :].mean(axis=0),
                            float(bounds.mean()), float(regrets.mean()), se, n)
    for line in report.lines():
        logger.info(line)
    if raise_on_failure and not report.holds:
        raise DiagnosticError('regret {:.6f} exceeds decomposition bound {:.6f} + 3 SE'.format(
            report.regret, report.bound), report)
    return report


def export_regret_csv(curve, path):
    frame = pd.DataFrame({
        't': curve.t,
        'mean_cum_regret': curve.mean,
        'ci_low': curve.ci_low,
        'ci_high': curve.ci_high,
        'n': curve.n_instances,
    }, columns=CSV_COLUMNS)
    frame.to_csv(path, index=False)


def load_regret_csv(path):
    try:
        data = pd.read_csv(path, float_precision='round_trip')
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise TableFormatError('{} is not a regret curve ({})'.format(path, e))
    missing = [c for c in CSV_COLUMNS if c not in data.columns]
    if missing or data.empty:
        raise TableFormatError('{} is not a regret curve (missing {})'.format(path, missing or 'rows'), 1)
    return RegretCurve(data['mean_cum_regret'].to_numpy(), data['ci_low'].to_numpy(),
                       data['ci_high'].to_numpy(), int(data['n'].iloc[0]))
