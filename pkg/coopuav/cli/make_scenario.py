"""
Write a random scenario file.

UAVs and ground task centers are drawn uniformly in a circular cell around
the base station; tasks are dealt to the UAVs round-robin. The same seed
always produces the same file.
"""

import argparse

from coopuav.config import write_scenario
from coopuav.names import SCHEMES
from coopuav.synthetic import make_scenario
from .base import CLIModule


class MakeScenarioCLI(CLIModule):
    def __init__(self, subcommand="make-scenario"):
        super().__init__(
            subcommand=subcommand,
            docstring=__doc__
        )

    def create_parser(self, parser: argparse.ArgumentParser):
        parser.add_argument('--out', '-o', type=str, dest='out',
                            required=True,
                            help='Scenario file to write')
        parser.add_argument('--uavs', type=int, dest='n_uavs',
                            required=False, default=5,
                            help='Number of UAVs')
        parser.add_argument('--tasks', type=int, dest='n_tasks',
                            required=False, default=10,
                            help='Number of sensing tasks')
        parser.add_argument('--seed', '-s', type=int, dest='seed',
                            required=False, default=0,
                            help='Seed of the placement, also written as the seed of the scenario')
        parser.add_argument('--subchannels', '-k', type=int, dest='subchannels',
                            required=False, default=8,
                            help='Subchannels of the cell')
        parser.add_argument('--scheme', type=str, dest='scheme',
                            required=False, default=SCHEMES.COOPERATIVE, choices=list(SCHEMES),
                            help='Scheme of the scenario')
        parser.add_argument('--slots', type=int, dest='slots',
                            required=False, default=2000,
                            help='Slots to simulate')
        parser.add_argument('--cell-radius', type=float, dest='cell_radius',
                            required=False, default=500.,
                            help='Radius of the cell, m')

    def main(self, args: argparse.Namespace):
        cfg = make_scenario(n_uavs=args.n_uavs, n_tasks=args.n_tasks, seed=args.seed,
            cell_radius=args.cell_radius, scheme=args.scheme, n_subchannels=args.subchannels,
            total_slots=args.slots)
        write_scenario(cfg, args.out)
