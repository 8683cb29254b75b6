'''Run scenarios under a scheme, replicate them over seeds and persist the
metrics.

A run executes `TOTAL_SLOTS` slots of `protocol.run_slot` on a fresh
`World`. Its per-slot records become one CSV row each (column order in
`names.COLUMNS`). A replication runs independent (scheme, subchannels, seed)
jobs on a process pool and aggregates them into a table with 95% normal
approximation intervals.
'''
import os
import json
import math
import numpy as np
import pandas as pd
import scipy.stats
from dataclasses import dataclass, asdict
from coopuav.logger import logger

# Typing
from typing import Any, Iterable, List, Optional, Sequence, Tuple, Union

from .config import ScenarioConfig, isScenarioConfig
from .sensing import SensingTask, TaskState
from .protocol import World, UavState, SlotRecord, run_slot
from .names import COLUMNS, SCHEMES, SLOTS_FILENAME, SUMMARY_FILENAME, AGGREGATE_FILENAME, \
    METADATA_FILENAME, SCENARIO_FILENAME, SEARCH_TREE_DIRNAME
from . import pylab as pl

CONFIDENCE = 0.95


@dataclass
class RunSummary:
    '''Outcome of one run

    Parameters
    ----------
    scheme : str
    n_subchannels : int
    seed : int
    n_slots : int
        Slots executed
    mean_sum_rate : float
        Sum-rate averaged over every slot of the run, bit/s
    completion_time : float
        End time of the first slot after which every task is delivered.
        `inf` if the run ended first
    qos_violations : int
        Per-UAV QoS violation flags summed over the run
    bnb_nodes : int
        Branch-and-bound nodes explored over the run
    dc_iterations : int
        DC power control iterations over the run
    delivered_fraction : float
        Bits delivered over bits to deliver
    '''
    scheme: str
    n_subchannels: int
    seed: int
    n_slots: int
    mean_sum_rate: float
    completion_time: float
    qos_violations: int
    bnb_nodes: int
    dc_iterations: int
    delivered_fraction: float

    @property
    def complete(self) -> bool:
        return math.isfinite(self.completion_time)


def make_world(cfg: ScenarioConfig, seed: int=None, scheme: str=None, n_subchannels: int=None,
    keep_search_logs: bool=False) -> World:
    '''Fresh simulation state for `cfg`. `seed`, `scheme` and
    `n_subchannels` override the values of the scenario.
    '''
    if not isScenarioConfig(cfg):
        raise TypeError('`cfg` ({}) must be a ScenarioConfig'.format(type(cfg)))
    seed = cfg.SEED if seed is None else seed
    scheme = cfg.SCHEME if scheme is None else scheme
    n_subchannels = cfg.N_SUBCHANNELS if n_subchannels is None else n_subchannels

    uavs = []
    for uid, spec in sorted(cfg.UAVS.items()):
        tasks = []
        for tid in spec.tasks:
            t = cfg.TASKS[tid]
            tasks.append(SensingTask(id=tid, center=t.center,
                failure_tolerance=t.failure_tolerance, data_volume=t.data_volume,
                sense_slots_required=t.sense_slots_required))
        uavs.append(UavState(id=uid, position=spec.position, tasks=tasks))

    world = World(uavs=uavs, bs=cfg.BS_POSITION, params=cfg.RADIO, model=cfg.SENSING,
        scheme=scheme, n_subchannels=n_subchannels, snr_threshold_db=cfg.SNR_THRESHOLD_DB,
        r_min=cfg.R_MIN, p_max=cfg.P_MAX, v_max=cfg.V_MAX, max_altitude=cfg.MAX_ALTITUDE,
        slot_duration=cfg.SLOT_DURATION, completion_budget=cfg.COMPLETION_BUDGET,
        streams=pl.random.streams(seed), node_budget=cfg.NODE_BUDGET,
        keep_search_logs=keep_search_logs)
    world.plan()
    return world

def _delivered_fraction(tasks: Sequence[SensingTask]) -> float:
    total = sum(t.data_volume for t in tasks)
    if total == 0:
        return float(all(t.state == TaskState.DELIVERED for t in tasks))
    return float(sum(t.delivered for t in tasks) / total)

def summarize(records: Sequence[SlotRecord], scheme: str, n_subchannels: int, seed: int,
    tasks: Sequence[SensingTask]) -> RunSummary:
    '''Reduce the records of a run to a `RunSummary`
    '''
    n_tasks = len(tasks)
    completion = float('inf')
    for r in records:
        if r.tasks_delivered == n_tasks:
            completion = r.time
            break
    return RunSummary(scheme=scheme, n_subchannels=int(n_subchannels), seed=int(seed),
        n_slots=len(records),
        mean_sum_rate=float(np.mean([r.sum_rate for r in records])) if records else 0.,
        completion_time=completion,
        qos_violations=int(sum(r.qos_violations for r in records)),
        bnb_nodes=int(sum(r.bnb_nodes for r in records)),
        dc_iterations=int(sum(r.dc_iterations for r in records)),
        delivered_fraction=_delivered_fraction(tasks))

def records_to_dataframe(records: Sequence[SlotRecord], uav_ids: Sequence[int],
    task_ids: Sequence[str]) -> pd.DataFrame:
    '''One row per slot with the columns in `names.COLUMNS` order.

    Subchannels are written as `;`-separated indices and a missing relay as
    an empty field.
    '''
    columns = [COLUMNS.SLOT, COLUMNS.TIME, COLUMNS.SUM_RATE, COLUMNS.DELIVERED_BITS,
        COLUMNS.QOS_VIOLATIONS, COLUMNS.TASKS_DELIVERED]
    for uid in uav_ids:
        columns += [COLUMNS.uav_column(uid, f) for f in COLUMNS.UAV_FIELDS]
    columns += [COLUMNS.task_column(tid) for tid in task_ids]

    rows = []
    for r in records:
        row = [r.slot, r.time, r.sum_rate, r.delivered_bits, r.qos_violations,
            r.tasks_delivered]
        for uid in uav_ids:
            u = r.uavs[uid]
            row += [u.mode, '' if u.relay is None else str(u.relay),
                ';'.join(str(k) for k in u.subchannels), u.power, u.sinr_db, u.rate,
                u.position.x, u.position.y, u.position.z, u.speed, int(u.qos_violation)]
        row += [r.task_states[tid] for tid in task_ids]
        rows.append(row)
    return pd.DataFrame(rows, columns=columns)

def _write_csv(df: pd.DataFrame, path: str):
    def write(tmp):
        df.to_csv(tmp, index=False)
    pl.atomic_write(path, write)

def _write_json(obj: Any, path: str):
    def write(tmp):
        with open(tmp, 'w') as f:
            json.dump(obj, f, indent=2, sort_keys=True)
    pl.atomic_write(path, write)

def write_search_trees(records: Sequence[SlotRecord], basepath: str):
    '''Write `slot_XXXXX.json` with the branch-and-bound statistics of every
    slot that ran a search
    '''
    os.makedirs(basepath, exist_ok=True)
    for r in records:
        if not r.search_logs:
            continue
        _write_json({'slot': r.slot, 'searches': [log.to_dict() for log in r.search_logs]},
            os.path.join(basepath, 'slot_{:05d}.json'.format(r.slot)))

def run(cfg: ScenarioConfig, seed: int=None, scheme: str=None, n_subchannels: int=None,
    out: str=None, dump_search_tree: bool=False) -> Tuple[RunSummary, List[SlotRecord]]:
    '''Simulate a scenario for `TOTAL_SLOTS` slots

    Parameters
    ----------
    cfg : ScenarioConfig
    seed, scheme, n_subchannels : int, str, int, None
        Overrides of the scenario values
    out : str, None
        If given, the folder the slot CSV, the summary, the metadata and the
        pickled scenario (with the overrides applied) are written to
    dump_search_tree : bool
        If True (and `out` is given), also write the branch-and-bound
        statistics of every slot

    Returns
    -------
    RunSummary, list(SlotRecord)

    Raises
    ------
    SlotError
        If a slot fails. Carries the slot index
    '''
    seed = cfg.SEED if seed is None else seed
    scheme = cfg.SCHEME if scheme is None else scheme
    n_subchannels = cfg.N_SUBCHANNELS if n_subchannels is None else n_subchannels
    if scheme not in SCHEMES:
        raise ValueError('`scheme` ({}) not recognized. Options: {}'.format(scheme,
            list(SCHEMES)))

    logger.info('Running `{}` with {} subchannels, seed {}, {} slots'.format(scheme,
        n_subchannels, seed, cfg.TOTAL_SLOTS))
    world = make_world(cfg, seed=seed, scheme=scheme, n_subchannels=n_subchannels,
        keep_search_logs=dump_search_tree)
    records = []
    for _ in range(cfg.TOTAL_SLOTS):
        records.append(run_slot(world))

    summary = summarize(records, scheme, n_subchannels, seed, world.tasks)
    if summary.qos_violations > 0:
        logger.warning('{} QoS violations over the run'.format(summary.qos_violations))
    logger.info('Mean sum-rate {:.4E} bit/s, completion time {} s, {:.1f}% delivered'.format(
        summary.mean_sum_rate, summary.completion_time, 100 * summary.delivered_fraction))

    if out is not None:
        os.makedirs(out, exist_ok=True)
        uav_ids = [u.id for u in world.uavs]
        task_ids = [t.id for t in world.tasks]
        _write_csv(records_to_dataframe(records, uav_ids, task_ids),
            os.path.join(out, SLOTS_FILENAME))
        _write_csv(summary_table([summary]), os.path.join(out, SUMMARY_FILENAME))
        resolved = cfg.copy_with(seed=seed, scheme=scheme, n_subchannels=n_subchannels)
        resolved.make_metadata_file(os.path.join(out, METADATA_FILENAME))
        resolved.save(os.path.join(out, SCENARIO_FILENAME))
        if dump_search_tree:
            write_search_trees(records, os.path.join(out, SEARCH_TREE_DIRNAME))
        logger.info('Run written to `{}`'.format(out))
    return summary, records


# ------------------------------------------------------------------------------
# Replication
# ------------------------------------------------------------------------------
def summary_table(summaries: Iterable[Union[RunSummary, pl.JobFailure]]) -> pd.DataFrame:
    '''One row per run. Failed jobs keep their (scheme, subchannels, seed)
    and have `failed` set.
    '''
    rows = []
    for s in summaries:
        if pl.isjobfailure(s):
            scheme, k, seed = s.arg[1:4]
            rows.append({COLUMNS.SCHEME: scheme, COLUMNS.N_SUBCHANNELS: k, COLUMNS.SEED: seed,
                COLUMNS.FAILED: True})
        else:
            row = asdict(s)
            row[COLUMNS.FAILED] = False
            rows.append(row)
    columns = [COLUMNS.SCHEME, COLUMNS.N_SUBCHANNELS, COLUMNS.SEED, COLUMNS.N_SLOTS,
        COLUMNS.MEAN_SUM_RATE, COLUMNS.COMPLETION_TIME, COLUMNS.QOS_VIOLATIONS,
        COLUMNS.BNB_NODES, COLUMNS.DC_ITERATIONS, COLUMNS.DELIVERED_FRACTION, COLUMNS.FAILED]
    return pd.DataFrame(rows, columns=columns)

def _interval(values: np.ndarray) -> Tuple[float, float, float]:
    '''Mean and 95% normal approximation interval'''
    mean = float(np.mean(values))
    if len(values) < 2 or not np.all(np.isfinite(values)):
        return mean, mean, mean
    z = scipy.stats.norm.ppf(0.5 + CONFIDENCE / 2)
    half = z * float(np.std(values, ddof=1)) / math.sqrt(len(values))
    return mean, mean - half, mean + half

def aggregate(summaries: Iterable[Union[RunSummary, pl.JobFailure]]) -> pd.DataFrame:
    '''Aggregate successful runs by (scheme, subchannels)

    Every metric of `RunSummary` gets its mean. Sum-rate, completion time and
    delivered fraction also get a 95% interval (mean +- z * sd / sqrt(n)). A
    completion time is `inf` as soon as one run did not complete.
    '''
    df = summary_table(summaries)
    df = df[~df[COLUMNS.FAILED].astype(bool)]
    rows = []
    for (scheme, k), group in df.groupby([COLUMNS.SCHEME, COLUMNS.N_SUBCHANNELS], sort=False):
        row = {COLUMNS.SCHEME: scheme, COLUMNS.N_SUBCHANNELS: int(k), COLUMNS.N_RUNS: len(group)}
        for name in (COLUMNS.MEAN_SUM_RATE, COLUMNS.COMPLETION_TIME,
                COLUMNS.DELIVERED_FRACTION):
            mean, low, high = _interval(group[name].to_numpy(dtype=float))
            low_name, high_name = COLUMNS.ci_columns(name)
            row[name] = mean
            row[low_name] = low
            row[high_name] = high
        for name in (COLUMNS.QOS_VIOLATIONS, COLUMNS.BNB_NODES, COLUMNS.DC_ITERATIONS):
            row[name] = float(group[name].astype(float).mean())
        rows.append(row)
    return pd.DataFrame(rows)

def _replicate_job(payload: Tuple[ScenarioConfig, str, int, int, Optional[str], bool]) -> RunSummary:
    cfg, scheme, k, seed, out, dump_search_tree = payload
    path = None
    if out is not None:
        path = os.path.join(out, cfg.copy_with(scheme=scheme, n_subchannels=k,
            seed=seed).suffix())
    summary, _ = run(cfg, seed=seed, scheme=scheme, n_subchannels=k, out=path,
        dump_search_tree=dump_search_tree)
    return summary

def replicate(cfg: ScenarioConfig, seeds: Sequence[int], schemes: Sequence[str]=None,
    subchannels: Sequence[int]=None, n_workers: int=None, out: str=None,
    dump_search_tree: bool=False) -> Tuple[List[Union[RunSummary, pl.JobFailure]], pd.DataFrame]:
    '''Run every (scheme, subchannels, seed) combination as an independent job

    Parameters
    ----------
    cfg : ScenarioConfig
    seeds : list(int)
    schemes : list(str), None
        If None, the scheme of the scenario
    subchannels : list(int), None
        If None, the subchannel count of the scenario
    n_workers : int, None
        Processes. If None, the number of physical cores
    out : str, None
        If given, every run writes into `out/<scheme>_k<K>_s<seed>/` and the
        summary and aggregate tables are written into `out`

    Returns
    -------
    list(RunSummary or pylab.JobFailure), pandas.DataFrame
        Per-job results in (scheme, subchannels, seed) order and the
        aggregate table
    '''
    seeds = list(seeds)
    if len(seeds) == 0:
        raise ValueError('`seeds` must not be empty')
    for seed in seeds:
        if not pl.isint(seed) or seed < 0:
            raise ValueError('seed `{}` must be an int >= 0'.format(seed))
    schemes = [cfg.SCHEME] if schemes is None else list(schemes)
    for scheme in schemes:
        if scheme not in SCHEMES:
            raise ValueError('`scheme` ({}) not recognized. Options: {}'.format(scheme,
                list(SCHEMES)))
    subchannels = [cfg.N_SUBCHANNELS] if subchannels is None else list(subchannels)
    for k in subchannels:
        if not pl.isint(k) or k < 1:
            raise ValueError('subchannel count `{}` must be an int >= 1'.format(k))

    payloads = [(cfg, scheme, k, seed, out, dump_search_tree)
        for scheme in schemes for k in subchannels for seed in seeds]
    logger.info('Replicating {} schemes x {} subchannel counts x {} seeds'.format(
        len(schemes), len(subchannels), len(seeds)))
    results = pl.ordered_map(_replicate_job, payloads, n_workers=n_workers)
    table = aggregate(results)

    n_failed = sum(pl.isjobfailure(r) for r in results)
    if n_failed > 0:
        logger.error('{}/{} runs failed'.format(n_failed, len(results)))
    if out is not None:
        os.makedirs(out, exist_ok=True)
        _write_csv(summary_table(results), os.path.join(out, SUMMARY_FILENAME))
        _write_csv(table, os.path.join(out, AGGREGATE_FILENAME))
        logger.info('Replication written to `{}`'.format(out))
    return results, table
