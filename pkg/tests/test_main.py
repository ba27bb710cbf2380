"""
Command-line entry point and exit codes
"""
from pathlib import Path

import pytest

import algebra
from main import EXIT_FAILURE, EXIT_INVALID, EXIT_OK, main

SCENARIOS = Path(__file__).resolve().parent.parent / 'scenarios'
DATA = Path(__file__).resolve().parent / 'data'


def write(tmp_path, text, name='scenario.yaml'):
    path = tmp_path / name
    path.write_text(text, encoding='utf-8')
    return str(path)


def test_simulate(tmp_path):
    out = tmp_path / 'run'
    assert main(['simulate', str(SCENARIOS / 'free_circular.yaml'), '--out', str(out)]) == EXIT_OK
    assert (out / 'diagnostics.ndjson').exists()
    assert (out / 'diagnostics_summary.csv').exists()


def test_simulate_matches_the_committed_journal(tmp_path):
    out = tmp_path / 'run'
    assert main(['simulate', str(SCENARIOS / 'uniform_pair.yaml'), '--out', str(out)]) == EXIT_OK
    assert (out / 'diagnostics.ndjson').read_bytes() == (DATA / 'uniform_pair.ndjson').read_bytes()
    assert (out / 'diagnostics_summary.csv').read_bytes() == (DATA / 'uniform_pair_summary.csv').read_bytes()


def test_order_override(tmp_path):
    out = tmp_path / 'run'
    args = ['simulate', str(SCENARIOS / 'free_circular.yaml'), '--out', str(out), '--order', '2']
    assert main(args) == EXIT_OK


def test_unstable_time_step(tmp_path):
    path = write(tmp_path, "kind: free\ngrid: {n: 8, h: 0.5}\ndt: 0.5\n")
    assert main(['simulate', path, '--out', str(tmp_path / 'run')]) == EXIT_INVALID
    assert not (tmp_path / 'run' / 'diagnostics.ndjson').exists()


def test_missing_file(tmp_path):
    assert main(['simulate', str(tmp_path / 'absent.yaml')]) == EXIT_INVALID


def test_simulate_rejects_check_scenarios(tmp_path):
    assert main(['simulate', str(SCENARIOS / 'lorentz_check.yaml'), '--out', str(tmp_path)]) == EXIT_INVALID


def test_overflow_aborts_the_run(tmp_path):
    path = write(tmp_path, (
        "kind: background\n"
        "grid: {n: 8, h: 0.5}\n"
        "fields:\n"
        "  - charge_current: {kind: uniform, amplitude: 1.0e200, polarization: [[0.0, -1.0], 0.0, 0.0, 0.0]}\n"
        "background: {kind: uniform, amplitude: 1.0e200, polarization: [0.0, 1.0, 0.0, 0.0]}\n"
    ))
    assert main(['simulate', path, '--out', str(tmp_path / 'run')]) == EXIT_FAILURE


def test_identities():
    assert main(['identities', '--seed', '1', '--count', '50']) == EXIT_OK


def test_identities_count(tmp_path):
    assert main(['identities', '--count', '0']) == EXIT_INVALID


def test_identities_with_a_corrupted_product(monkeypatch):
    product = algebra.qmul
    monkeypatch.setattr(algebra, 'qmul', lambda a, b: product(a, b) + 1e-6)
    assert main(['identities', '--count', '20']) == EXIT_FAILURE


def test_unknown_command():
    with pytest.raises(SystemExit):
        main(['orbit'])


@pytest.mark.slow
def test_lorentz_check(tmp_path):
    assert main(['lorentz-check', str(SCENARIOS / 'lorentz_check.yaml'), '--out', str(tmp_path)]) == EXIT_OK
    assert (tmp_path / 'lorentz_check.json').exists()
