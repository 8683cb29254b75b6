"""
Render static plots of a run or a replication.

Run folder (`coopuav run --out`):
    sum_rate.pdf        sum-rate over time
    trajectories.pdf    top-down paths of the UAVs
    snapshot.pdf        links of slot `--slot` (only with `--slot`)

Replication folder (`coopuav replicate --out`):
    subchannels.pdf     mean sum-rate against the subchannel count, per scheme

The base station and the task centers are taken from `--scenario` when it
is given.
"""

import os
import argparse
import pandas as pd
import matplotlib
matplotlib.use('Agg')

from coopuav.logger import logger
from coopuav.config import load_scenario
from coopuav.names import SLOTS_FILENAME, AGGREGATE_FILENAME
from coopuav import visualization
from .base import CLIModule


class PlotCLI(CLIModule):
    def __init__(self, subcommand="plot"):
        super().__init__(
            subcommand=subcommand,
            docstring=__doc__
        )

    def create_parser(self, parser: argparse.ArgumentParser):
        parser.add_argument('--input', '-i', type=str, dest='input',
                            required=True,
                            help='Folder of a run or of a replication')
        parser.add_argument('--out', '-o', type=str, dest='out',
                            required=False, default=None,
                            help='Folder to write the plots into. Default: `--input`')
        parser.add_argument('--scenario', type=str, dest='scenario',
                            required=False, default=None,
                            help='Scenario file of the run, for the base station and task centers')
        parser.add_argument('--slot', type=int, dest='slot',
                            required=False, default=None,
                            help='Slot of the link snapshot')
        parser.add_argument('--window', type=int, dest='window',
                            required=False, default=1,
                            help='Moving average of the sum-rate, in slots')
        parser.add_argument('--format', type=str, dest='format',
                            required=False, default='pdf',
                            help='Image format')

    def main(self, args: argparse.Namespace):
        out = args.out if args.out is not None else args.input
        os.makedirs(out, exist_ok=True)
        bs, centers = None, None
        if args.scenario is not None:
            cfg = load_scenario(args.scenario)
            bs = cfg.BS_POSITION
            centers = {tid: t.center for tid, t in cfg.TASKS.items()}

        slots = os.path.join(args.input, SLOTS_FILENAME)
        aggregate = os.path.join(args.input, AGGREGATE_FILENAME)
        n_plots = 0
        if os.path.isfile(slots):
            df = pd.read_csv(slots)
            ax = visualization.render_sum_rate(df, window=args.window)
            visualization.savefig(ax, os.path.join(out, 'sum_rate.{}'.format(args.format)))
            ax = visualization.render_trajectories(df, bs=bs, task_centers=centers)
            visualization.savefig(ax, os.path.join(out, 'trajectories.{}'.format(args.format)))
            n_plots += 2
            if args.slot is not None:
                if bs is None:
                    raise ValueError('`--slot` needs `--scenario` for the base station')
                ax = visualization.render_cooperative_snapshot(df, args.slot, bs)
                visualization.savefig(ax, os.path.join(out, 'snapshot.{}'.format(args.format)))
                n_plots += 1
        if os.path.isfile(aggregate):
            ax = visualization.render_subchannel_scaling(pd.read_csv(aggregate))
            visualization.savefig(ax, os.path.join(out, 'subchannels.{}'.format(args.format)))
            n_plots += 1
        if n_plots == 0:
            raise ValueError('`{}` holds neither `{}` nor `{}`'.format(args.input,
                SLOTS_FILENAME, AGGREGATE_FILENAME))
        logger.info('{} plots written to `{}`'.format(n_plots, out))
