import os
import json
import pytest
import pandas as pd

from coopuav.cli import main
from coopuav.cli.base import parse_seeds
from coopuav.config import load_scenario
from coopuav.names import SLOTS_FILENAME, SUMMARY_FILENAME, AGGREGATE_FILENAME
from coopuav.pylab.errors import EXIT_SUCCESS, EXIT_VALIDATION, EXIT_RUNTIME


def _exit_code(argv):
    with pytest.raises(SystemExit) as e:
        main(argv)
    return e.value.code

@pytest.fixture
def scenario_file(tmp_path):
    path = str(tmp_path / 'scenario.ini')
    code = _exit_code(['make-scenario', '--out', path, '--uavs', '2', '--tasks', '3',
        '--seed', '5', '--subchannels', '2', '--slots', '40', '--cell-radius', '200'])
    assert code == EXIT_SUCCESS
    return path


def test_parse_seeds():
    assert parse_seeds(['3']) == [0, 1, 2]
    assert parse_seeds(['3', '7']) == [3, 7]
    assert parse_seeds(['4,9']) == [4, 9]
    assert parse_seeds(['1,']) == [1]

def test_make_scenario(scenario_file):
    cfg = load_scenario(scenario_file)
    assert len(cfg.UAVS) == 2
    assert len(cfg.TASKS) == 3
    assert cfg.SEED == 5
    assert cfg.N_SUBCHANNELS == 2

def test_run_and_plot(tmp_path, scenario_file):
    out = str(tmp_path / 'run')
    assert _exit_code(['run', '--scenario', scenario_file, '--out', out, '--seed', '1',
        '--scheme', 'separate']) == EXIT_SUCCESS
    df = pd.read_csv(os.path.join(out, SLOTS_FILENAME))
    assert len(df) == 40
    summary = pd.read_csv(os.path.join(out, SUMMARY_FILENAME))
    assert summary['scheme'].iloc[0] == 'separate'

    assert _exit_code(['plot', '--input', out, '--scenario', scenario_file, '--slot', '10',
        '--format', 'png']) == EXIT_SUCCESS
    for name in ('sum_rate.png', 'trajectories.png', 'snapshot.png'):
        assert os.path.isfile(os.path.join(out, name))

def test_replicate(tmp_path, scenario_file):
    out = str(tmp_path / 'rep')
    assert _exit_code(['replicate', '--scenario', scenario_file, '--seeds', '2',
        '--schemes', 'cooperative', 'noncooperative', '--workers', '1',
        '--out', out]) == EXIT_SUCCESS
    table = pd.read_csv(os.path.join(out, AGGREGATE_FILENAME))
    assert len(table) == 2
    for name in ('cooperative_k2_s0', 'cooperative_k2_s1', 'noncooperative_k2_s0'):
        assert os.path.isfile(os.path.join(out, name, SLOTS_FILENAME))

    assert _exit_code(['plot', '--input', out, '--format', 'png']) == EXIT_SUCCESS
    assert os.path.isfile(os.path.join(out, 'subchannels.png'))

def test_missing_scenario(tmp_path):
    assert _exit_code(['run', '--scenario', str(tmp_path / 'nope.ini'),
        '--out', str(tmp_path / 'run')]) == EXIT_VALIDATION

def test_invalid_scenario(tmp_path, scenario_file):
    text = open(scenario_file).read().replace('[scenario]', '[scenario]\ncolour = red')
    path = tmp_path / 'bad.ini'
    path.write_text(text)
    assert _exit_code(['run', '--scenario', str(path), '--out',
        str(tmp_path / 'run')]) == EXIT_VALIDATION

def test_plot_of_an_empty_folder(tmp_path):
    assert _exit_code(['plot', '--input', str(tmp_path)]) == EXIT_RUNTIME

def test_oracle_random(tmp_path):
    out = str(tmp_path / 'oracle.json')
    assert _exit_code(['oracle', '--random', '3', '--links', '3', '--subchannels', '2',
        '--seed', '0', '--out', out]) == EXIT_SUCCESS
    with open(out) as f:
        report = json.load(f)
    assert len(report) == 3
    assert all(entry['match'] for entry in report)
