"""
Tests for experiment configuration, radius sweeps, result output and the command line
"""

import json

import duckdb
import numpy as np
import pandas as pd
import pytest

from errors import ConfigError, InputDomainError
from ringradiant import (CSV_COLUMNS, THREADS_ENV, ExperimentConfig, RadiationSweeper, field_table,
                         load_config, main, parse_config_text, parse_point, persist_sweep, run_sweep,
                         sweep_to_csv, sweep_to_json, worker_count)
from verification import run_verify

FAST_CONFIG = """
# reduced quadrature for tests
m = 2
weights = 1, 1, 1, -1
radii = 5, 10, 20   # three radii are enough for a fit
theta_nodes = 256
phi_nodes = 16
sphere_theta_nodes = 32
time_nodes = 32
"""


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / 'fast.cfg'
    path.write_text(FAST_CONFIG, encoding='utf-8')
    return path


@pytest.fixture
def fast_config(config_file):
    return load_config(str(config_file))


def test_config_defaults():
    config = ExperimentConfig()
    assert config.m == 2
    assert config.c == 10.0
    assert config.weights == (1.0, 1.0, 1.0, -1.0)
    assert config.radii == (5.0, 10.0, 20.0, 40.0)
    assert config.mode == 'far_field'
    assert config.output_format == 'csv'


def test_parse_config_text():
    values = parse_config_text(FAST_CONFIG)
    assert values['m'] == '2'
    assert values['radii'] == ['5', '10', '20']
    assert values['weights'] == ['1', '1', '1', '-1']
    with pytest.raises(ConfigError):
        parse_config_text("m 2")


def test_load_config_applies_overrides(config_file):
    config = load_config(str(config_file), {'c': 20.0, 'mode': None})
    assert config.c == 20.0
    assert config.mode == 'far_field'
    assert config.radii == (5.0, 10.0, 20.0)
    assert config.theta_nodes == 256


@pytest.mark.parametrize("overrides", [
    {'radii': []},
    {'radii': [5.0, 3.0]},
    {'radii': [0.5, 3.0]},
    {'c': 1.0},
    {'m': 0},
    {'theta_nodes': 100},
    {'time_nodes': 8},
    {'weights': [1.0, 1.0]},
    {'wave_speed': -1.0},
    {'colour': 'red'},
])
def test_invalid_configuration(overrides):
    with pytest.raises(ConfigError):
        load_config(None, overrides)


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / 'absent.cfg'))


def test_config_hash_is_deterministic():
    assert ExperimentConfig().config_hash == ExperimentConfig().config_hash
    assert ExperimentConfig().config_hash != ExperimentConfig(c=20.0).config_hash
    assert len(ExperimentConfig().config_hash) == 64


def test_worker_count(monkeypatch):
    monkeypatch.setenv(THREADS_ENV, '3')
    assert worker_count() == 3
    monkeypatch.setenv(THREADS_ENV, 'many')
    with pytest.raises(ConfigError):
        worker_count()
    monkeypatch.setenv(THREADS_ENV, '0')
    with pytest.raises(ConfigError):
        worker_count()
    monkeypatch.delenv(THREADS_ENV)
    assert worker_count(5) == 5


def test_sweep_csv(fast_config):
    result = RadiationSweeper(fast_config, max_workers=2).run_sweep()
    assert len(result.records) == 3
    assert result.fit is not None
    lines = sweep_to_csv(result).splitlines()
    assert lines[0] == ','.join(CSV_COLUMNS)
    assert len(lines) == 5
    assert lines[1].split(',')[0] == '5'
    # far-field sweeps have no other term pairs
    assert lines[1].split(',')[5] == ''
    assert lines[-1].startswith('fit,0,')
    integral = float(lines[1].split(',')[6])
    assert integral == pytest.approx(result.records[0].integral, rel=1e-15)


def test_sweep_output_is_reproducible(fast_config):
    assert sweep_to_csv(run_sweep(fast_config)) == sweep_to_csv(run_sweep(fast_config))


def test_sweep_json(fast_config):
    document = json.loads(sweep_to_json(run_sweep(fast_config)))
    assert document['metadata']['config_hash'] == fast_config.config_hash
    assert document['metadata']['config']['radii'] == [5.0, 10.0, 20.0]
    assert 'numpy' in document['metadata']['versions']
    assert len(document['records']) == 3
    assert document['records'][0]['error'] is None
    assert document['records'][0]['P_other'] is None
    assert np.isfinite(document['fit']['exponent'])


def test_failed_radii_are_reported_per_row(config_file):
    # direct mode needs at least 64 ring nodes
    config = load_config(str(config_file), {'mode': 'direct', 'theta_nodes': 16})
    result = run_sweep(config)
    assert result.fit is None
    assert all(row['error'].startswith('InputDomainError') for row in result.rows)
    lines = sweep_to_csv(result).splitlines()
    assert len(lines) == 4
    assert not any(line.startswith('fit') for line in lines)


def test_persist_sweep(fast_config, tmp_path):
    db_path = str(tmp_path / 'sweeps.duckdb')
    result = run_sweep(fast_config)
    assert persist_sweep(result, db_path) == 3
    persist_sweep(result, db_path)
    connection = duckdb.connect(db_path)
    try:
        count, hashes = connection.execute(
            "SELECT count(*), count(DISTINCT config_hash) FROM cycle_records").fetchone()
        radii = [row[0] for row in connection.execute(
            "SELECT DISTINCT radius FROM cycle_records ORDER BY radius").fetchall()]
    finally:
        connection.close()
    assert count == 6
    assert hashes == 1
    assert radii == [5.0, 10.0, 20.0]


def test_parse_point():
    assert parse_point('3,0,4,0.5') == ((3.0, 0.0, 4.0), 0.5)
    with pytest.raises(ConfigError):
        parse_point('3,0,4')
    with pytest.raises(ConfigError):
        parse_point('3,0,x,1')


def test_field_table_includes_series_outside_unit_sphere():
    table = field_table(ExperimentConfig(theta_nodes=256), (3.0, 0.0, 4.0), 0.5)
    assert list(table['term']) == ['E1', 'E2', 'E3', 'B1', 'B2', 'E_total', 'B_total',
                                   'E2_series', 'E3_series', 'B2_series']
    inside = field_table(ExperimentConfig(theta_nodes=256), (0.2, 0.0, 0.1), 0.5)
    assert 'E2_series' not in set(inside['term'])


def test_unknown_suite():
    with pytest.raises(InputDomainError):
        run_verify('magnetism', ExperimentConfig())


def test_main_sweep(config_file, tmp_path, monkeypatch):
    monkeypatch.setenv(THREADS_ENV, '2')
    out = tmp_path / 'sweep.csv'
    assert main(['sweep', '--config', str(config_file), '--out', str(out)]) == 0
    text = out.read_text(encoding='utf-8')
    assert text.startswith(','.join(CSV_COLUMNS) + '\n')
    assert '\nfit,' in text


def test_main_sweep_json_to_database(config_file, tmp_path):
    out = tmp_path / 'sweep.json'
    db_path = tmp_path / 'runs.duckdb'
    assert main(['sweep', '--config', str(config_file), '--format', 'json', '--radii', '5,10,20,40',
                 '--out', str(out), '--db', str(db_path)]) == 0
    document = json.loads(out.read_text(encoding='utf-8'))
    assert len(document['records']) == 4
    assert db_path.exists()


def test_main_configuration_errors(config_file, tmp_path):
    assert main(['sweep', '--config', str(config_file), '--radii', '5,3']) == 2
    assert main(['sweep', '--config', str(tmp_path / 'absent.cfg')]) == 2
    assert main(['fields', '--at', '1,2']) == 2
    assert main(['wallis', '--max', '-1']) == 2


@pytest.mark.parametrize("suite", ['wallis', 'thermal'])
def test_main_verify_passing_suites(suite, tmp_path):
    out = tmp_path / f'{suite}.csv'
    assert main(['verify', suite, '--out', str(out)]) == 0
    header = out.read_text(encoding='utf-8').splitlines()[0]
    assert header.split(',')[:3] == ['suite', 'name', 'passed']


REDUCED_NODES = dict(theta_nodes=512, phi_nodes=32, sphere_theta_nodes=64, time_nodes=32)


@pytest.mark.parametrize("suite", ['wave', 'extension', 'cancellation'])
def test_reduced_node_suites_pass(suite):
    report = run_verify(suite, ExperimentConfig(**REDUCED_NODES))
    assert report.checks
    assert report.passed, [check.name for check in report.checks if not check.passed]


def test_main_verify_power_reports_only_the_decay_check(tmp_path):
    config = tmp_path / 'power.cfg'
    config.write_text(''.join(f"{key} = {value}\n" for key, value in REDUCED_NODES.items()), encoding='utf-8')
    out = tmp_path / 'power.csv'
    assert main(['verify', 'power', '--config', str(config), '--out', str(out)]) == 1
    table = pd.read_csv(out)
    assert len(table) == 10
    assert list(table.loc[~table['passed'], 'name']) == ["admissible cycle power decays like 1/r"]


def test_sweep_help_explains_the_fit_row(capsys):
    with pytest.raises(SystemExit) as exit_info:
        main(['sweep', '--help'])
    assert exit_info.value.code == 0
    text = ' '.join(capsys.readouterr().out.split())
    assert 'fitted decay exponent' in text
    assert 'cycle_integral' in text


def test_main_fields(tmp_path):
    out = tmp_path / 'fields.json'
    assert main(['fields', '--at', '3,0,4,0.5', '--format', 'json', '--out', str(out)]) == 0
    rows = json.loads(out.read_text(encoding='utf-8'))['rows']
    assert rows[0]['term'] == 'E1'
    assert len(rows) == 10


def test_main_wallis(tmp_path):
    out = tmp_path / 'wallis.csv'
    assert main(['wallis', '--max', '4', '--out', str(out)]) == 0
    lines = out.read_text(encoding='utf-8').splitlines()
    assert len(lines) == 1 + 25 + 3
