import functools
import logging
import sys

import click

from banditlab import (
    ArgumentError, ComputationError, ConfigError, DiagnosticError, ResourceBudgetError,
    StateRangeError, TableFormatError,
    DEFAULT_GAMMA, DEFAULT_GITTINS_HORIZON, DEFAULT_LAMBDA_STEP,
    DEFAULT_MAX_PULLS, MIN_CI_INSTANCES)
from banditlab import config as configs
from banditlab import elsv, gittins, harness
from banditlab.policies import make_index


EXIT_CONFIG = 1
EXIT_DIAGNOSTIC = 2
EXIT_IO = 3


def exit_codes(f):
    """Map library errors onto the documented exit codes."""

    @functools.wraps(f)
    def wrapper(*args, **kwargs):
        try:
            return f(*args, **kwargs)
        except DiagnosticError as e:
            if e.report is not None:
                for line in e.report.lines():
                    click.echo(line, err=True)
            click.echo('Error: {}'.format(e), err=True)
            sys.exit(EXIT_DIAGNOSTIC)
        except (ConfigError, ArgumentError, ResourceBudgetError, StateRangeError, ComputationError) as e:
            click.echo('Error: {}'.format(e), err=True)
            sys.exit(EXIT_CONFIG)
        except (OSError, TableFormatError) as e:
            click.echo('Error: {}'.format(e), err=True)
            sys.exit(EXIT_IO)

    return wrapper


config_opt = click.option("--config", "config_path", type=click.Path(dir_okay=False), required=True,
                          help="Experiment config file of key=value lines.")
gittins_table_opt = click.option("--gittins-table", default=None, type=click.Path(dir_okay=False),
                                 help="Precomputed Gittins table; computed on the fly when omitted.")


@click.group()
@click.option("-v", "--verbose", count=True, help="Log progress (-v) or details (-vv) to stderr.")
def banditlab(verbose):
    level = {0: logging.WARNING, 1: logging.INFO}.get(verbose, logging.DEBUG)
    logging.basicConfig(stream=sys.stderr, level=level,
                        format='%(asctime)s %(name)s %(levelname)s %(message)s')


@click.command()
@click.option("--gamma", default=DEFAULT_GAMMA, type=float, show_default=True)
@click.option("--horizon", default=DEFAULT_GITTINS_HORIZON, type=int, show_default=True,
              help="Truncation depth of the retirement problem.")
@click.option("--step", default=DEFAULT_LAMBDA_STEP, type=float, show_default=True,
              help="Resolution of the retirement-rate grid.")
@click.option("--max-pulls", default=DEFAULT_MAX_PULLS, type=int, show_default=True)
@click.option("--workers", default=1, type=int, show_default=True)
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@exit_codes
def gittins_cmd(gamma, horizon, step, max_pulls, workers, out):
    table = gittins.compute_gittins_table(gamma, horizon, step, max_pulls, workers=workers)
    gittins.save_table(table, out)
    click.echo('Wrote Gittins table for {} states to {}'.format(
        (max_pulls + 1) * (max_pulls + 2) // 2, out))


@click.command()
@click.option("--bonus", required=True, help="One of ucb, ucb(a), gittins, zero, bayes_ucb.")
@click.option("--t", "t", required=True, type=int, help="Table time; covers t - 1 pulls.")
@click.option("--horizon", default=None, type=int,
              help="Horizon used by the bayes_ucb bonus; defaults to t.")
@click.option("--contour", is_flag=True, help="Write mean,pulls,value rows instead of the table format.")
@click.option("--normalize", is_flag=True, help="Offset values for plotting before writing.")
@gittins_table_opt
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@exit_codes
def elsv_cmd(bonus, t, horizon, contour, normalize, gittins_table, out):
    table = gittins.load_table(gittins_table) if gittins_table else None
    if table is None and bonus.startswith('gittins'):
        raise ConfigError('--gittins-table is required for the gittins bonus')
    index = make_index(bonus, horizon or t, table)
    if table is not None and table.max_pulls < t:
        raise ConfigError('Gittins table covers {} pulls, t={} needs {}'.format(table.max_pulls, t, t))

    values = elsv.compute_value_table(t, index)
    if normalize:
        values = elsv.normalize_for_plot(values)
    if contour:
        elsv.export_contour_csv(values, out)
    else:
        elsv.save_value_table(values, out)
    click.echo('Wrote value table t={} bonus={} to {}'.format(t, values.bonus_name, out))


def _load(config_path, **overrides):
    return configs.load_config(config_path).override(**overrides)


@click.command()
@config_opt
@click.option("--policy", default=None, help="Policy descriptor, e.g. ucb(1.0) or elsv(gittins,3).")
@click.option("--horizon", default=None, type=int)
@click.option("--instances", default=None, type=int)
@click.option("--seed", default=None, type=int)
@click.option("--workers", default=None, type=int)
@gittins_table_opt
@click.option("--out", default=None, type=click.Path(dir_okay=False))
@exit_codes
def simulate(config_path, policy, horizon, instances, seed, workers, gittins_table, out):
    config = _load(config_path, policy=policy, horizon=horizon, n_instances=instances,
                   master_seed=seed, workers=workers, gittins_table=gittins_table, output_path=out)
    if 1 < config.n_instances < MIN_CI_INSTANCES:
        raise ConfigError('confidence bands need at least {} instances, got {}'.format(
            MIN_CI_INSTANCES, config.n_instances))
    if not config.output_path:
        raise ConfigError('no output path: set output= in the config or pass --out')

    curve = harness.bayes_regret(config)
    harness.export_regret_csv(curve, config.output_path)
    click.echo('{}: final cumulative regret {:.4f} +/- {:.4f} over {} instances'.format(
        config.policy, curve.final, curve.final_half_width, curve.n_instances))
    if config.policy_spec.constrained:
        click.echo('unconstrained fallbacks: {}'.format(curve.fallbacks))


@click.command()
@config_opt
@click.option("--instances", default=None, type=int)
@click.option("--seed", default=None, type=int)
@gittins_table_opt
@exit_codes
def diagnose(config_path, instances, seed, gittins_table):
    config = _load(config_path, n_instances=instances, master_seed=seed, gittins_table=gittins_table)
    report = harness.verify_decomposition(config)
    for line in report.lines():
        click.echo(line)


banditlab.add_command(gittins_cmd, "gittins")
banditlab.add_command(elsv_cmd, "elsv")
banditlab.add_command(simulate)
banditlab.add_command(diagnose)
