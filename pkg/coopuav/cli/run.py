"""
Simulate one scenario under one scheme.

Outputs
-------
The folder given with `--out` receives
    slots.csv       one row per slot (slot, time, sum_rate, delivered_bits,
                    qos_violations, tasks_delivered, then per UAV
                    uav<i>_{mode, relay, subchannels, power, sinr_db, rate,
                    x, y, z, speed, qos_violation}, then task_<id>_state)
    summary.csv     mean sum-rate, completion time and solver statistics
    metadata.txt    the parameters of the run
    search_tree/    with `--dump-search-tree`, the branch-and-bound
                    statistics of every slot (slot_XXXXX.json)

The seed, scheme and subchannel count of the scenario file can be overridden
on the command line.
"""

import argparse

from coopuav.logger import logger
from coopuav.config import load_scenario
from coopuav.names import SCHEMES
from coopuav import simulate
from .base import CLIModule


class RunCLI(CLIModule):
    def __init__(self, subcommand="run"):
        super().__init__(
            subcommand=subcommand,
            docstring=__doc__
        )

    def create_parser(self, parser: argparse.ArgumentParser):
        parser.add_argument('--scenario', '-i', type=str, dest='scenario',
                            required=True,
                            help='Scenario file (INI)')
        parser.add_argument('--out', '-o', type=str, dest='out',
                            required=True,
                            help='Folder to write the run into')
        parser.add_argument('--seed', '-s', type=int, dest='seed',
                            required=False, default=None,
                            help='Overrides the seed of the scenario')
        parser.add_argument('--scheme', type=str, dest='scheme',
                            required=False, default=None, choices=list(SCHEMES),
                            help='Overrides the scheme of the scenario')
        parser.add_argument('--subchannels', '-k', type=int, dest='subchannels',
                            required=False, default=None,
                            help='Overrides the subchannel count of the scenario')
        parser.add_argument('--dump-search-tree', action='store_true', dest='dump_search_tree',
                            help='Write the branch-and-bound statistics of every slot')

    def main(self, args: argparse.Namespace):
        cfg = load_scenario(args.scenario)
        summary, _ = simulate.run(cfg, seed=args.seed, scheme=args.scheme,
            n_subchannels=args.subchannels, out=args.out,
            dump_search_tree=args.dump_search_tree)
        logger.info('Done: mean sum-rate {:.4E} bit/s, completion time {} s'.format(
            summary.mean_sum_rate, summary.completion_time))
