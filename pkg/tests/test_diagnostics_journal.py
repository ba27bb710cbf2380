"""
NDJSON diagnostics journal, CSV summary and check reports
"""
import csv
import json

import pytest

from diagnostics_journal import DiagnosticsJournal, DiagnosticsRecord, max_residual, read_records, write_report
from errors import NonFiniteError


def record(step, **overrides):
    values = dict(step=step, tau=0.1 * step, maxwell=1e-6 * step, charge=0.0, charge_law=0.0, energy=2e-7,
                  action_reaction=0.0, thermo=0.0, stress=0.0, W=10.0 - 0.01 * step, Q=1.0, dW=0.0,
                  conservation=512)
    values.update(overrides)
    return DiagnosticsRecord(**values)


def test_records_round_trip(tmp_path):
    with DiagnosticsJournal(tmp_path) as journal:
        for step in (1, 2, 3):
            journal.log_record(record(step))
    lines = (tmp_path / 'diagnostics.ndjson').read_text(encoding='utf-8').splitlines()
    assert [json.loads(line)['step'] for line in lines] == [1, 2, 3]
    assert read_records(tmp_path / 'diagnostics.ndjson') == [record(1), record(2), record(3)]


def test_summary(tmp_path):
    with DiagnosticsJournal(tmp_path, name='run') as journal:
        for step in (1, 2):
            journal.log_record(record(step))
        summary = journal.get_summary()
    assert summary['maxwell']['max'] == pytest.approx(2e-6)
    assert summary['W']['drift'] == pytest.approx(-0.01)
    with open(tmp_path / 'run_summary.csv', newline='', encoding='utf-8') as f:
        rows = list(csv.reader(f))
    assert rows[0] == ['quantity', 'statistic', 'value']
    assert rows[1] == ['records', 'count', '2']
    assert ['W', 'final', repr(10.0 - 0.01 * 2)] in rows


def test_non_finite_record_aborts_but_keeps_the_journal(tmp_path):
    with pytest.raises(NonFiniteError) as info:
        with DiagnosticsJournal(tmp_path) as journal:
            journal.log_record(record(1))
            journal.log_record(record(2, energy=float('nan')))
    assert info.value.field == 'diagnostics.energy'
    assert info.value.step == 2
    assert len(read_records(tmp_path / 'diagnostics.ndjson')) == 1
    assert (tmp_path / 'diagnostics_summary.csv').exists()


def test_max_residual():
    records = [record(1), record(4), record(2)]
    assert max_residual(records, 'maxwell') == pytest.approx(4e-6)
    assert max_residual([], 'maxwell') is None


def test_write_report(tmp_path):
    path = write_report(tmp_path / 'checks', 'lorentz_check', {'passed': True, 'covariance_residual': 1e-9})
    assert json.loads(path.read_text(encoding='utf-8')) == {'covariance_residual': 1e-9, 'passed': True}
