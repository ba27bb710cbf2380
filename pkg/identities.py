"""
Identity Battery
Randomized checks of the algebra and Lorentz identities with max relative
residuals per identity. Products go through `algebra.qmul` looked up at
call time, so a corrupted kernel shows up as failing identities.
"""
import math
from dataclasses import dataclass, field
from typing import List

import numpy as np

import algebra
from algebra import Biquaternion, qconj_complex, qconj_quat, qpseudonorm_sq
from config import Config
from lorentz import (ClosedForm, make_lorentz, relativistic_closed_forms, transform_arrays,
                     transform_biq)


@dataclass
class IdentityResult:
    name: str
    max_residual: float
    tol: float

    @property
    def passed(self) -> bool:
        return math.isfinite(self.max_residual) and self.max_residual <= self.tol


@dataclass
class IdentityReport:
    seed: int
    count: int
    results: List[IdentityResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    @property
    def failures(self) -> List[str]:
        return [r.name for r in self.results if not r.passed]

    def lines(self) -> List[str]:
        out = []
        for r in self.results:
            mark = "✅" if r.passed else "❌"
            out.append(f"{mark} {r.name:<28} max residual {r.max_residual:.3e} (tol {r.tol:.0e})")
        return out

    def as_dict(self) -> dict:
        return {
            'seed': self.seed,
            'count': self.count,
            'passed': self.passed,
            'identities': {r.name: {'max_residual': r.max_residual, 'tol': r.tol, 'passed': r.passed}
                           for r in self.results},
        }


def _random_biq(rng: np.random.Generator, count: int) -> np.ndarray:
    return rng.standard_normal((4, count)) + 1j * rng.standard_normal((4, count))


def _random_units(rng: np.random.Generator, count: int) -> np.ndarray:
    e = rng.standard_normal((3, count))
    return e / np.linalg.norm(e, axis=0)


def _relative(diff: np.ndarray, scale: np.ndarray) -> float:
    return float(np.max(np.max(np.abs(diff), axis=0) / (1.0 + scale)))


def algebra_battery(rng: np.random.Generator, count: int) -> List[IdentityResult]:
    """Associativity, distributivity, involutions, U o U bar = 1, Z o Z bar = pseudonorm"""
    tol = Config.IDENTITY_TOL
    a, b, c = (_random_biq(rng, count) for _ in range(3))
    mul = algebra.qmul

    def size(x):
        return np.sqrt(np.sum(np.abs(x) ** 2, axis=0))

    sa, sb, sc = size(a), size(b), size(c)

    results = [
        IdentityResult('associativity', _relative(mul(mul(a, b), c) - mul(a, mul(b, c)), sa * sb * sc), tol),
        IdentityResult('distributivity', _relative(mul(a, b + c) - mul(a, b) - mul(a, c), sa * (sb + sc)), tol),
        IdentityResult('complex involution', _relative(qconj_complex(qconj_complex(a)) - a, sa), tol),
        IdentityResult('quaternion involution', _relative(qconj_quat(qconj_quat(a)) - a, sa), tol),
        IdentityResult('conjugate of product',
                       _relative(qconj_quat(mul(a, b)) - mul(qconj_quat(b), qconj_quat(a)), sa * sb), tol),
    ]

    # U o U bar = 1 for hyperbolic factors
    theta = rng.uniform(-2.0, 2.0, count)
    e = _random_units(rng, count)
    U = np.concatenate([np.cosh(theta)[np.newaxis], 1j * e * np.sinh(theta)])
    one = np.zeros_like(U)
    one[0] = 1.0
    results.append(IdentityResult('U o U bar = 1', _relative(mul(U, qconj_complex(U)) - one,
                                                             np.cosh(theta) ** 2), tol))

    # Z o Z bar = pseudonorm for events
    Z = np.concatenate([rng.standard_normal((1, count)), 1j * rng.standard_normal((3, count))]).astype(complex)
    prod = mul(Z, qconj_complex(Z))
    expected = np.zeros_like(prod)
    expected[0] = qpseudonorm_sq(Z)
    results.append(IdentityResult('Z o Z bar = pseudonorm', _relative(prod - expected, size(Z) ** 2), tol))
    return results


def lorentz_battery(rng: np.random.Generator, count: int) -> List[IdentityResult]:
    """Pseudonorm invariance, L bar o L* = 1 and the closed forms against conjugation"""
    tol = Config.IDENTITY_TOL
    v = rng.uniform(-0.95, 0.95, count)
    e = _random_units(rng, count)
    phi = rng.uniform(-math.pi, math.pi, count)
    Z = np.concatenate([rng.standard_normal((1, count)), 1j * rng.standard_normal((3, count))]).astype(complex)

    pseudo, unit = np.zeros(count), np.zeros(count)
    closed = {kind: np.zeros(count) for kind in ClosedForm}
    emergent = np.zeros(count)
    for j in range(count):
        lb = make_lorentz(v[j], e[:, j], phi[j])
        Zp = transform_arrays(lb, Z[:, j])
        scale = 1.0 + float(np.sum(np.abs(Z[:, j]) ** 2))
        pseudo[j] = abs(qpseudonorm_sq(Zp) - qpseudonorm_sq(Z[:, j])) / scale
        unit[j] = lb.unit_residual()

        boost = make_lorentz(v[j], e[:, j])
        gamma = 1.0 / math.sqrt(1.0 - v[j] ** 2)
        samples = {
            ClosedForm.EVENT: Biquaternion.from_array(Z[:, j]),
            ClosedForm.TENSION: Biquaternion.from_array(np.concatenate([[0.0], _random_biq(rng, 1)[1:, 0]])),
            ClosedForm.CHARGE_CURRENT: Biquaternion.from_array(_random_biq(rng, 1)[:, 0]),
            ClosedForm.POWER_FORCE: Biquaternion.from_array(_random_biq(rng, 1)[:, 0]),
        }
        for kind, value in samples.items():
            exact = transform_biq(boost, value).as_array()
            formula = relativistic_closed_forms(kind, value, v[j], e[:, j]).as_array()
            size = gamma * (1.0 + float(np.max(np.abs(value.as_array()))))
            if kind is ClosedForm.TENSION:
                # the scalar part is the emergent resistance i a' with a' = -v gamma (e, A)
                along = complex(np.dot(e[:, j], value.vector))
                emergent[j] = abs(exact[0] + 1j * v[j] * gamma * along) / size
                exact, formula = exact[1:], formula[1:]
            closed[kind][j] = float(np.max(np.abs(exact - formula))) / size

    results = [
        IdentityResult('pseudonorm invariance', float(pseudo.max()), tol),
        IdentityResult('L bar o L* = 1', float(unit.max()), tol),
    ]
    for kind in ClosedForm:
        results.append(IdentityResult(f'closed form {kind.value}', float(closed[kind].max()), tol))
    results.append(IdentityResult('emergent resistance', float(emergent.max()), tol))
    return results


def check_identities(seed: int, count: int) -> IdentityReport:
    """
    Run the algebra and Lorentz batteries

    Args:
        seed: RNG seed
        count: samples per identity (>= 1)

    Returns:
        IdentityReport with one result per identity
    """
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    rng = np.random.default_rng(seed)
    report = IdentityReport(seed, count)
    report.results.extend(algebra_battery(rng, count))
    report.results.extend(lorentz_battery(rng, count))
    return report
