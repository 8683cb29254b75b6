"""
Replicate a scenario over seeds, and optionally over schemes and subchannel
counts.

`--seeds` takes either a count (`--seeds 50` runs seeds 0..49) or a list
(`--seeds 3 7 11` or `--seeds 3,7,11`). Every (scheme, subchannels, seed)
combination is an independent run on the process pool; a failed run is
reported and the others still complete.

Outputs
-------
    <out>/<scheme>_k<K>_s<seed>/   the files of every run (see `coopuav run`)
    <out>/summary.csv              one row per run
    <out>/aggregate.csv            means and 95% intervals per (scheme, subchannels)

Returns exit code 0 if every run succeeded, otherwise the exit code of the
first failure.
"""

import argparse

from coopuav.logger import logger
from coopuav.config import load_scenario
from coopuav.names import SCHEMES
from coopuav import simulate
from coopuav import pylab as pl
from .base import CLIModule, parse_seeds


class ReplicateCLI(CLIModule):
    def __init__(self, subcommand="replicate"):
        super().__init__(
            subcommand=subcommand,
            docstring=__doc__
        )

    def create_parser(self, parser: argparse.ArgumentParser):
        parser.add_argument('--scenario', '-i', type=str, dest='scenario',
                            required=True,
                            help='Scenario file (INI)')
        parser.add_argument('--seeds', type=str, dest='seeds', nargs='+',
                            required=True,
                            help='Number of seeds, or the list of seeds')
        parser.add_argument('--out', '-o', type=str, dest='out',
                            required=True,
                            help='Folder to write the replication into')
        parser.add_argument('--schemes', '--scheme', type=str, dest='schemes', nargs='+',
                            required=False, default=None, choices=list(SCHEMES),
                            help='Schemes to run. Default: the scheme of the scenario')
        parser.add_argument('--subchannels', '-k', type=int, dest='subchannels', nargs='+',
                            required=False, default=None,
                            help='Subchannel counts to sweep. Default: the count of the scenario')
        parser.add_argument('--workers', '-j', type=int, dest='workers',
                            required=False, default=None,
                            help='Processes to use. Default: number of physical cores')
        parser.add_argument('--dump-search-tree', action='store_true', dest='dump_search_tree',
                            help='Write the branch-and-bound statistics of every slot of every run')

    def main(self, args: argparse.Namespace):
        cfg = load_scenario(args.scenario)
        seeds = parse_seeds(args.seeds)
        results, table = simulate.replicate(cfg, seeds=seeds, schemes=args.schemes,
            subchannels=args.subchannels, n_workers=args.workers, out=args.out,
            dump_search_tree=args.dump_search_tree)
        logger.info('Aggregate:\n{}'.format(table.to_string(index=False)))
        for r in results:
            if pl.isjobfailure(r):
                return r.exit_code
        return 0
