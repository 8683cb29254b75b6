import os
import json
import math
import pytest
import numpy as np
import pandas as pd

from coopuav import simulate
from coopuav.geometry import Point3
from coopuav.config import ScenarioConfig, UavSpec, TaskSpec
from coopuav.names import SCHEMES, MODES, COLUMNS, SLOTS_FILENAME, SUMMARY_FILENAME, \
    AGGREGATE_FILENAME, METADATA_FILENAME, SCENARIO_FILENAME, SEARCH_TREE_DIRNAME
from coopuav.simulate import RunSummary, run, replicate, aggregate, summary_table, \
    records_to_dataframe
from coopuav.pylab import isjobfailure
from coopuav.pylab.errors import BudgetExceededError


def _summary(rate, completion=10., seed=0, scheme=SCHEMES.COOPERATIVE, k=4):
    return RunSummary(scheme=scheme, n_subchannels=k, seed=seed, n_slots=100,
        mean_sum_rate=rate, completion_time=completion, qos_violations=1, bnb_nodes=10,
        dc_iterations=3, delivered_fraction=1.)


def test_run_writes_outputs(tmp_path, small_cfg):
    out = str(tmp_path / 'run')
    summary, records = run(small_cfg, out=out, dump_search_tree=True)
    assert summary.n_slots == len(records) == small_cfg.TOTAL_SLOTS
    for name in (SLOTS_FILENAME, SUMMARY_FILENAME, METADATA_FILENAME):
        assert os.path.isfile(os.path.join(out, name))
    df = pd.read_csv(os.path.join(out, SLOTS_FILENAME))
    assert len(df) == small_cfg.TOTAL_SLOTS
    assert list(df[COLUMNS.SLOT]) == list(range(small_cfg.TOTAL_SLOTS))
    assert df[COLUMNS.TIME].iloc[0] == pytest.approx(small_cfg.SLOT_DURATION)
    for uid in small_cfg.UAVS:
        assert COLUMNS.uav_column(uid, 'sinr_db') in df.columns
    for tid in small_cfg.TASKS:
        assert COLUMNS.task_column(tid) in df.columns
    saved = ScenarioConfig.load(os.path.join(out, SCENARIO_FILENAME))
    assert saved.suffix() == small_cfg.suffix()
    assert saved.UAVS == small_cfg.UAVS
    # Only slots with links run a search; nothing is sensed yet at slot 0
    trees = sorted(os.listdir(os.path.join(out, SEARCH_TREE_DIRNAME)))
    assert 'slot_00000.json' not in trees
    assert len(trees) > 0
    with open(os.path.join(out, SEARCH_TREE_DIRNAME, trees[0])) as f:
        tree = json.load(f)
    assert trees[0] == 'slot_{:05d}.json'.format(tree['slot'])
    assert tree['searches'][0]['nodes'] >= 1

def test_run_is_deterministic(tmp_path, small_cfg):
    run(small_cfg, out=str(tmp_path / 'a'))
    run(small_cfg, out=str(tmp_path / 'b'))
    a = (tmp_path / 'a' / SLOTS_FILENAME).read_bytes()
    b = (tmp_path / 'b' / SLOTS_FILENAME).read_bytes()
    assert a == b

def test_seed_changes_the_run(small_cfg):
    _, a = run(small_cfg, seed=1)
    _, b = run(small_cfg, seed=2)
    assert [r.sum_rate for r in a] != [r.sum_rate for r in b]

def test_summary_matches_records(small_cfg):
    summary, records = run(small_cfg)
    assert summary.mean_sum_rate == pytest.approx(np.mean([r.sum_rate for r in records]))
    assert summary.qos_violations == sum(r.qos_violations for r in records)
    assert 0 <= summary.delivered_fraction <= 1
    if summary.complete:
        done = [r for r in records if r.tasks_delivered == len(small_cfg.TASKS)]
        assert summary.completion_time == pytest.approx(done[0].time)
    else:
        assert summary.completion_time == math.inf

def test_zero_volume_completes():
    cfg = ScenarioConfig(bs_position=Point3(0., 0., 25.),
        uavs={0: UavSpec(position=Point3(100., 0., 80.), tasks=('a',))},
        tasks={'a': TaskSpec(center=Point3(100., 0., 0.), failure_tolerance=0.5,
            data_volume=0., sense_slots_required=1)},
        n_subchannels=2, total_slots=200)
    summary, records = run(cfg)
    assert summary.complete
    assert summary.delivered_fraction == 1.
    assert sum(r.delivered_bits for r in records) == 0.
    assert all(r.sum_rate == 0. for r in records)

def test_tiny_scenario_delivers(tiny_cfg):
    cfg = tiny_cfg.copy_with(total_slots=200)
    summary, records = run(cfg)
    assert summary.complete
    assert sum(r.delivered_bits for r in records) == pytest.approx(1e5)

def test_noncooperative_never_relays(small_cfg):
    _, records = run(small_cfg, scheme=SCHEMES.NONCOOPERATIVE)
    for r in records:
        assert all(u.mode != MODES.U2U for u in r.uavs.values())
        used = [k for u in r.uavs.values() for k in u.subchannels]
        assert len(used) == len(set(used))

def test_separate_never_overlaps(small_cfg):
    _, records = run(small_cfg, scheme=SCHEMES.SEPARATE)
    for r in records:
        for u in r.uavs.values():
            assert not (u.sensing and u.transmitting)

def test_records_to_dataframe_encoding(tiny_cfg):
    _, records = run(tiny_cfg)
    df = records_to_dataframe(records, [0], ['a'])
    subchannels = df[COLUMNS.uav_column(0, 'subchannels')]
    active = [s for s in subchannels if s != '']
    assert all(set(s.split(';')) <= {'0', '1'} for s in active)
    assert set(df[COLUMNS.uav_column(0, 'qos_violation')]) <= {0, 1}
    assert set(df[COLUMNS.uav_column(0, 'relay')]) == {''}

def test_aggregate_intervals():
    table = aggregate([_summary(1.), _summary(3., seed=1), _summary(5., seed=2, k=8)])
    row = table[table[COLUMNS.N_SUBCHANNELS] == 4].iloc[0]
    assert row[COLUMNS.N_RUNS] == 2
    assert row[COLUMNS.MEAN_SUM_RATE] == pytest.approx(2.)
    low, high = COLUMNS.ci_columns(COLUMNS.MEAN_SUM_RATE)
    half = 1.959964 * np.std([1., 3.], ddof=1) / np.sqrt(2)
    assert row[low] == pytest.approx(2. - half, rel=1e-5)
    assert row[high] == pytest.approx(2. + half, rel=1e-5)
    single = table[table[COLUMNS.N_SUBCHANNELS] == 8].iloc[0]
    assert single[low] == single[high] == single[COLUMNS.MEAN_SUM_RATE] == 5.

def test_aggregate_incomplete_run():
    table = aggregate([_summary(1.), _summary(3., completion=math.inf, seed=1)])
    assert table[COLUMNS.COMPLETION_TIME].iloc[0] == math.inf

def test_replicate_single_seed_equals_run(tmp_path, small_cfg):
    summary, _ = run(small_cfg, seed=7)
    results, table = replicate(small_cfg, seeds=[7], n_workers=1, out=str(tmp_path))
    assert table[COLUMNS.MEAN_SUM_RATE].iloc[0] == pytest.approx(summary.mean_sum_rate)
    assert table[COLUMNS.N_RUNS].iloc[0] == 1
    assert os.path.isfile(tmp_path / AGGREGATE_FILENAME)
    assert os.path.isfile(tmp_path / SUMMARY_FILENAME)
    assert os.path.isdir(tmp_path / small_cfg.copy_with(seed=7).suffix())

def test_replicate_same_seed_twice(small_cfg):
    _, table = replicate(small_cfg, seeds=[3, 3], n_workers=1)
    low, high = COLUMNS.ci_columns(COLUMNS.MEAN_SUM_RATE)
    assert table[low].iloc[0] == pytest.approx(table[high].iloc[0])

def test_replicate_grid_order(small_cfg):
    results, table = replicate(small_cfg, seeds=[0, 1], schemes=[SCHEMES.COOPERATIVE,
        SCHEMES.NONCOOPERATIVE], subchannels=[2, 4], n_workers=1)
    keys = [(r.scheme, r.n_subchannels, r.seed) for r in results]
    assert keys == [(s, k, seed) for s in (SCHEMES.COOPERATIVE, SCHEMES.NONCOOPERATIVE)
        for k in (2, 4) for seed in (0, 1)]
    assert len(table) == 4

def test_replicate_keeps_going_after_a_failure(monkeypatch, small_cfg):
    original = simulate.run

    def flaky(cfg, seed=None, **kwargs):
        if seed == 1:
            raise BudgetExceededError('too many nodes')
        return original(cfg, seed=seed, **kwargs)

    monkeypatch.setattr(simulate, 'run', flaky)
    results, table = replicate(small_cfg, seeds=[0, 1, 2], n_workers=1)
    failed = [r for r in results if isjobfailure(r)]
    assert len(failed) == 1
    assert failed[0].exit_code == 3
    assert table[COLUMNS.N_RUNS].iloc[0] == 2
    summary = summary_table(results)
    assert list(summary[COLUMNS.FAILED]) == [False, True, False]
    assert summary[COLUMNS.SEED].iloc[1] == 1

def test_replicate_rejects_bad_arguments(small_cfg):
    with pytest.raises(ValueError):
        replicate(small_cfg, seeds=[])
    with pytest.raises(ValueError):
        replicate(small_cfg, seeds=[-1])
    with pytest.raises(ValueError):
        replicate(small_cfg, seeds=[0], schemes=['telepathy'])
    with pytest.raises(ValueError):
        replicate(small_cfg, seeds=[0], subchannels=[0])
