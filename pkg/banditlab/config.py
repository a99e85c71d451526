"""
Flat ``key=value`` text serialization of priors, problem instances and
experiment configurations. Vectors are comma separated, booleans are
``true``/``false`` and ``#`` starts a comment.
"""
import logging
from dataclasses import dataclass, replace

from banditlab import (
    ArgumentError, ConfigError, DEFAULT_GAMMA, DEFAULT_GITTINS_HORIZON,
    DEFAULT_LAMBDA_STEP, DEFAULT_MIN_ACCEPTED, DEFAULT_SAMPLE_COUNT)
from banditlab.core import PriorSpec, ProblemInstance
from banditlab.policies import parse_policy


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ExperimentConfig:
    """
    Everything one regret experiment depends on. Two runs of the same
    config produce bitwise identical results.
    """
    prior: PriorSpec
    policy: str
    horizon: int
    n_instances: int
    master_seed: int = 0
    output_path: str = None
    workers: int = 1
    gittins_table: str = None
    gittins_gamma: float = DEFAULT_GAMMA
    gittins_horizon: int = DEFAULT_GITTINS_HORIZON
    gittins_step: float = DEFAULT_LAMBDA_STEP
    sample_count: int = DEFAULT_SAMPLE_COUNT
    min_accepted: int = DEFAULT_MIN_ACCEPTED

    def __post_init__(self):
        if self.horizon < 1:
            raise ConfigError('horizon must be >= 1, got {}'.format(self.horizon))
        if self.n_instances < 1:
            raise ConfigError('n_instances must be >= 1, got {}'.format(self.n_instances))
        if self.workers < 1:
            raise ConfigError('workers must be >= 1, got {}'.format(self.workers))
        parse_policy(self.policy)

    @property
    def policy_spec(self):
        return parse_policy(self.policy)

    def override(self, **changes):
        """Copy with the non-None keyword values replaced."""
        return replace(self, **{k: v for k, v in changes.items() if v is not None})


def _bool(text):
    lowered = text.strip().lower()
    if lowered in ('true', 'yes', '1'):
        return True
    if lowered in ('false', 'no', '0'):
        return False
    raise ValueError('not a boolean: {!r}'.format(text))


def _vector(cast):
    return lambda text: tuple(cast(v) for v in text.split(',') if v.strip())


def _format(value):
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, (tuple, list)):
        return ','.join(_format(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def parse(text):
    """Parse ``key=value`` lines into a dict of strings."""
    pairs = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split('#', 1)[0].strip()
        if not line:
            continue
        if '=' not in line:
            raise ConfigError('line {}: expected key=value, got {!r}'.format(lineno, line))
        key, value = (s.strip() for s in line.split('=', 1))
        if key in pairs:
            raise ConfigError('line {}: duplicate key {!r}'.format(lineno, key))
        pairs[key] = value
    return pairs


def dumps(pairs):
    return ''.join('{}={}\n'.format(key, _format(value)) for key, value in pairs.items() if value is not None)


def _take(pairs, key, cast, default=None, required=False):
    if key not in pairs:
        if required:
            raise ConfigError('missing required key {!r}'.format(key))
        return default
    try:
        return cast(pairs[key])
    except ValueError as e:
        raise ConfigError('bad value for {!r}: {}'.format(key, e))


def prior_to_pairs(prior):
    return {
        'n_arms': prior.n_arms,
        'constrained': prior.constrained,
        'rewards': prior.rewards,
        'prior_alpha': prior.prior_alpha,
        'prior_beta': prior.prior_beta,
    }


def prior_from_pairs(pairs):
    try:
        return PriorSpec(
            n_arms=_take(pairs, 'n_arms', int, required=True),
            constrained=_take(pairs, 'constrained', _bool, False),
            rewards=_take(pairs, 'rewards', _vector(float)),
            prior_alpha=_take(pairs, 'prior_alpha', _vector(int)),
            prior_beta=_take(pairs, 'prior_beta', _vector(int)))
    except ArgumentError as e:
        raise ConfigError(str(e))


def instance_to_text(instance):
    return dumps({
        'mu': instance.mu,
        'rewards': instance.rewards,
        'horizon': instance.horizon,
        'constrained': instance.constrained,
    })


def instance_from_text(text):
    pairs = parse(text)
    try:
        return ProblemInstance(
            mu=_take(pairs, 'mu', _vector(float), required=True),
            rewards=_take(pairs, 'rewards', _vector(float), required=True),
            horizon=_take(pairs, 'horizon', int, required=True),
            constrained=_take(pairs, 'constrained', _bool, False))
    except ArgumentError as e:
        raise ConfigError(str(e))


def config_to_text(config):
    pairs = prior_to_pairs(config.prior)
    pairs.update({
        'policy': config.policy,
        'horizon': config.horizon,
        'n_instances': config.n_instances,
        'master_seed': config.master_seed,
        'output': config.output_path,
        'workers': config.workers,
        'gittins_table': config.gittins_table,
        'gittins_gamma': config.gittins_gamma,
        'gittins_horizon': config.gittins_horizon,
        'gittins_step': config.gittins_step,
        'sample_count': config.sample_count,
        'min_accepted': config.min_accepted,
    })
    return dumps(pairs)


def config_from_text(text):
    pairs = parse(text)
    known = set(prior_to_pairs(PriorSpec(1))) | {
        'policy', 'horizon', 'n_instances', 'master_seed', 'output', 'workers',
        'gittins_table', 'gittins_gamma', 'gittins_horizon', 'gittins_step',
        'sample_count', 'min_accepted'}
    unknown = set(pairs) - known
    if unknown:
        raise ConfigError('unknown keys: {}'.format(', '.join(sorted(unknown))))

    return ExperimentConfig(
        prior=prior_from_pairs(pairs),
        policy=_take(pairs, 'policy', str, required=True),
        horizon=_take(pairs, 'horizon', int, required=True),
        n_instances=_take(pairs, 'n_instances', int, required=True),
        master_seed=_take(pairs, 'master_seed', int, 0),
        output_path=_take(pairs, 'output', str),
        workers=_take(pairs, 'workers', int, 1),
        gittins_table=_take(pairs, 'gittins_table', str),
        gittins_gamma=_take(pairs, 'gittins_gamma', float, DEFAULT_GAMMA),
        gittins_horizon=_take(pairs, 'gittins_horizon', int, DEFAULT_GITTINS_HORIZON),
        gittins_step=_take(pairs, 'gittins_step', float, DEFAULT_LAMBDA_STEP),
        sample_count=_take(pairs, 'sample_count', int, DEFAULT_SAMPLE_COUNT),
        min_accepted=_take(pairs, 'min_accepted', int, DEFAULT_MIN_ACCEPTED))


def load_config(path):
    with open(path, encoding='utf-8') as f:
        return config_from_text(f.read())


def save_config(config, path):
    with open(path, 'w', encoding='utf-8') as f:
        f.write(config_to_text(config))
