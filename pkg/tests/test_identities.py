"""
Randomized identity battery
"""
import pytest

import algebra
from identities import check_identities


def test_battery_passes():
    report = check_identities(seed=1, count=200)
    assert report.passed, report.failures
    names = [r.name for r in report.results]
    assert 'associativity' in names
    assert 'closed form power_force' in names
    assert 'emergent resistance' in names
    assert len(report.lines()) == len(report.results)


def test_same_seed_same_residuals():
    first = check_identities(seed=4, count=50).as_dict()
    assert check_identities(seed=4, count=50).as_dict() == first


def test_corrupted_product_is_caught(monkeypatch):
    product = algebra.qmul
    monkeypatch.setattr(algebra, 'qmul', lambda a, b: product(a, b) + 1e-6)
    report = check_identities(seed=1, count=20)
    assert not report.passed
    assert 'associativity' in report.failures


def test_count_must_be_positive():
    with pytest.raises(ValueError):
        check_identities(seed=1, count=0)
