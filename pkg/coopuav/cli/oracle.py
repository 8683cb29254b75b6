"""
Check the allocation and power control solvers against brute force.

For every instance, the greedy allocation is improved by branch and bound
and compared with the exhaustive enumeration of the served links (same
exempt links, full power). If at most three links hold a subchannel, DC
power control is compared with a grid search of resolution
`--grid-fraction * p_max` on the optimal allocation.

Instances come from `--instance` (a JSON file written by
`SmallInstance.save`) or are drawn at random with `--random N`.

Outputs
-------
A JSON report with one entry per instance, written to `--out` if given.
Exhaustive searches that exceed their budget exit with code 3.
"""

import json
import argparse
import numpy as np

from coopuav.logger import logger
from coopuav.oracle import SmallInstance, random_instance, exhaustive_allocation, \
    grid_power_search, MAX_GRID_LINKS
from coopuav.rrm import LinkSystem, initial_allocation, branch_and_bound, dc_power_control
from coopuav.pylab.util import atomic_write
from .base import CLIModule

# Relative slack of the comparisons
ALLOCATION_TOLERANCE = 1e-9
POWER_TOLERANCE = 0.02


def verify_allocation(instance: SmallInstance, node_budget: int=1000000) -> dict:
    '''Branch and bound against exhaustive enumeration
    '''
    system = LinkSystem.from_instance(instance)
    incumbent = initial_allocation(system)
    alloc = branch_and_bound(system, incumbent, node_budget=node_budget)
    served = np.flatnonzero(~alloc.deferred)
    powers = np.full(len(system), system.p_max)
    if len(served) == 0:
        return {'served': 0, 'bnb': 0., 'exhaustive': 0., 'match': True, 'allocation': alloc}
    bnb = system.sum_rate(alloc.matrix, powers)
    sub = SmallInstance.from_system(system.subsystem(served), exempt=alloc.exempt[served])
    _, best = exhaustive_allocation(sub)
    match = abs(bnb - best) <= ALLOCATION_TOLERANCE * max(abs(best), 1.)
    return {'served': int(len(served)), 'bnb': float(bnb), 'exhaustive': float(best),
        'match': bool(match), 'allocation': alloc}

def verify_power(instance: SmallInstance, allocation, grid_fraction: float=0.02) -> dict:
    '''DC power control against a power grid, on a fixed allocation
    '''
    system = LinkSystem.from_instance(instance)
    result = dc_power_control(system, allocation)
    dc = system.sum_rate(allocation.matrix, result.values)
    grid_instance = SmallInstance.from_system(system, exempt=allocation.exempt)
    _, grid = grid_power_search(grid_instance, allocation.matrix,
        resolution=grid_fraction * system.p_max)
    history = np.asarray(result.history, dtype=float)
    monotone = bool(np.all(np.diff(history) >= -1e-9 * np.abs(history[:-1]))) \
        if len(history) > 1 else True
    ok = (not np.isfinite(grid)) or dc >= (1 - POWER_TOLERANCE) * grid
    return {'dc': float(dc), 'grid': float(grid), 'dc_iterations': int(result.iterations),
        'monotone': monotone, 'match': bool(ok and monotone)}


class OracleCLI(CLIModule):
    def __init__(self, subcommand="oracle"):
        super().__init__(
            subcommand=subcommand,
            docstring=__doc__
        )

    def create_parser(self, parser: argparse.ArgumentParser):
        parser.add_argument('--instance', '-i', type=str, dest='instance',
                            required=False, default=None,
                            help='SmallInstance JSON file')
        parser.add_argument('--random', type=int, dest='random',
                            required=False, default=0,
                            help='Number of random instances to check')
        parser.add_argument('--links', type=int, dest='links',
                            required=False, default=4,
                            help='Links of the random instances')
        parser.add_argument('--subchannels', '-k', type=int, dest='subchannels',
                            required=False, default=3,
                            help='Subchannels of the random instances')
        parser.add_argument('--seed', '-s', type=int, dest='seed',
                            required=False, default=0,
                            help='Seed of the random instances')
        parser.add_argument('--grid-fraction', type=float, dest='grid_fraction',
                            required=False, default=0.02,
                            help='Grid resolution of the power search, as a fraction of p_max')
        parser.add_argument('--out', '-o', type=str, dest='out',
                            required=False, default=None,
                            help='JSON report to write')

    def main(self, args: argparse.Namespace):
        instances = []
        if args.instance is not None:
            instances.append(SmallInstance.load(args.instance))
        if args.random > 0:
            rng = np.random.default_rng(args.seed)
            instances += [random_instance(rng, args.links, args.subchannels)
                for _ in range(args.random)]
        if len(instances) == 0:
            raise ValueError('Give `--instance` or `--random`')

        report = []
        for idx, inst in enumerate(instances):
            entry = verify_allocation(inst)
            alloc = entry.pop('allocation')
            if 0 < int(alloc.matrix.any(axis=1).sum()) <= MAX_GRID_LINKS:
                entry['power'] = verify_power(inst, alloc, grid_fraction=args.grid_fraction)
            if not entry['match'] or not entry.get('power', {}).get('match', True):
                logger.warning('Instance {}: solver and oracle disagree: {}'.format(idx, entry))
            report.append(entry)

        n_bad = sum(not e['match'] or not e.get('power', {}).get('match', True) for e in report)
        logger.info('{}/{} instances agree with the oracle'.format(len(report) - n_bad,
            len(report)))
        if args.out is not None:
            def write(tmp):
                with open(tmp, 'w') as f:
                    json.dump(report, f, indent=2)
            atomic_write(args.out, write)
        return 0 if n_bad == 0 else 2
