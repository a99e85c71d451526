import logging
import os

from banditlab.config import ExperimentConfig
from banditlab.core import PriorSpec
from banditlab.gittins import compute_gittins_table, load_table, save_table
from banditlab.harness import bayes_regret, export_regret_csv

scriptdir = os.path.dirname(os.path.abspath(__file__))

HORIZON = 200
INSTANCES = 2000
WORKERS = os.cpu_count() or 1


def gittins_table(out_dir):
    """
    Load the desk-scale Gittins table from ``out_dir``, computing and
    saving it on first use. Covers two extra pulls for depth-3 lookahead.
    """
    path = os.path.join(out_dir, "gittins-0.99.csv")
    if os.path.exists(path):
        return load_table(path, gamma=0.99)

    table = compute_gittins_table(0.99, 1000, 0.001, HORIZON + 2, workers=WORKERS)
    save_table(table, path)
    return table


def run(out_dir, name, prior, policy, table, seed):
    config = ExperimentConfig(prior, policy, HORIZON, INSTANCES, master_seed=seed, workers=WORKERS)
    curve = bayes_regret(config, table)
    export_regret_csv(curve, os.path.join(out_dir, name + ".csv"))
    print("{:<32} {:10.4f} +/- {:.4f}  fallbacks {}".format(
        name, curve.final, curve.final_half_width, curve.fallbacks))


def run_desk_experiments():
    """
    Regret curves for one- versus three-step lookahead on a uniform prior,
    and for ordered-arm policies against their index baselines.
    """
    out_dir = os.path.join(scriptdir, "..", "results")
    os.makedirs(out_dir, exist_ok=True)
    table = gittins_table(out_dir)

    uniform = PriorSpec(3)
    run(out_dir, "uniform-elsv-gittins-1", uniform, "elsv(gittins,1)", table, 1)
    run(out_dir, "uniform-elsv-gittins-3", uniform, "elsv(gittins,3)", table, 1)
    run(out_dir, "uniform-gittins", uniform, "gittins", table, 1)

    ordered = PriorSpec(3, constrained=True, rewards=(0.8, 0.9, 1.0))
    for name, policy in [
        ("ordered-gittins", "gittins"),
        ("ordered-elsv-gittins", "elsv_constrained(gittins,10000)"),
        ("ordered-ucb", "ucb"),
        ("ordered-elsv-ucb", "elsv_constrained(ucb,10000)"),
        ("ordered-thompson", "thompson_constrained"),
    ]:
        run(out_dir, name, ordered, policy, table, 2)


if __name__ == '__main__':
    logging.basicConfig(level=logging.INFO)
    run_desk_experiments()
