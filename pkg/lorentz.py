"""
Lorentz Transformations
Boosts and rotations as biquaternion conjugations: L = W o U with
U = cosh(theta) + i e sinh(theta), W = cos(phi) + e sin(phi).
Events map as Z' = L o Z o L*, field values as K' = L o K o L*.
"""
import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Sequence, Tuple, Union

import numpy as np

from algebra import (Biquaternion, Vec3C, conj_complex, conj_quat, event, hyperbolic_factor, mul,
                     qmul, rotation_factor)
from fields import Grid, SampleStack, pointwise_bigradient

UNIT_TOL = 1e-9

Evaluator = Callable[[np.ndarray, np.ndarray], np.ndarray]


class ClosedForm(Enum):
    """Relativistic closed-form families"""
    EVENT = "event"
    TENSION = "tension"
    CHARGE_CURRENT = "charge_current"
    POWER_FORCE = "power_force"


def _unit_vector(e: Sequence[float]) -> Tuple[float, float, float]:
    e = np.asarray(e, dtype=float)
    if e.shape != (3,) or not np.all(np.isfinite(e)):
        raise ValueError(f"direction must be a finite 3-vector, got {e}")
    norm = float(np.linalg.norm(e))
    if abs(norm - 1.0) > UNIT_TOL:
        raise ValueError(f"direction must be a unit vector, |e| = {norm}")
    e = e / norm
    return (float(e[0]), float(e[1]), float(e[2]))


def _check_speed(v: float):
    if not (math.isfinite(v) and abs(v) < 1.0):
        raise ValueError(f"boost speed must satisfy |v| < 1, got {v}")


@dataclass(frozen=True)
class LorentzBiq:
    """
    Lorentz biquaternion with its generating parameters

    theta is the half rapidity (cosh 2 theta = gamma), phi the rotation
    half-angle; the transform rotates by 2 phi about e.
    """
    L: Biquaternion
    e: Tuple[float, float, float]
    theta: float = 0.0
    phi: float = 0.0

    @property
    def v(self) -> float:
        return math.tanh(2.0 * self.theta)

    @property
    def gamma(self) -> float:
        return math.cosh(2.0 * self.theta)

    @property
    def star(self) -> Biquaternion:
        """L*"""
        return conj_quat(self.L)

    @property
    def bar(self) -> Biquaternion:
        """L bar"""
        return conj_complex(self.L)

    @property
    def bar_star(self) -> Biquaternion:
        """L bar star, the inverse of L"""
        return conj_quat(conj_complex(self.L))

    def unit_residual(self) -> float:
        """|L bar o L* - 1|, zero for a valid transform"""
        return float(np.max(np.abs(mul(self.bar, self.star).as_array() - np.array([1, 0, 0, 0]))))


def _from_half_angles(theta: float, phi: float, e: Tuple[float, float, float]) -> LorentzBiq:
    L = mul(rotation_factor(phi, e), hyperbolic_factor(theta, e))
    return LorentzBiq(L, e, theta, phi)


def make_lorentz(v: float, e: Sequence[float], phi: float = 0.0) -> LorentzBiq:
    """
    Build L = W o U for a boost with speed v along e and rotation 2 phi about e

    Args:
        v: boost speed, |v| < 1 (c = 1)
        e: unit direction
        phi: rotation half-angle

    Returns:
        LorentzBiq
    """
    _check_speed(v)
    e = _unit_vector(e)
    gamma = 1.0 / math.sqrt(1.0 - v * v)
    sinh_theta = math.copysign(math.sqrt((gamma - 1.0) / 2.0), v)
    return _from_half_angles(math.asinh(sinh_theta), float(phi), e)


def make_rotation(phi: float, e: Sequence[float]) -> LorentzBiq:
    return make_lorentz(0.0, e, phi)


def compose(first: LorentzBiq, second: LorentzBiq) -> LorentzBiq:
    """
    Transform applying first, then second (L = L2 o L1)

    Only transforms sharing one axis compose into a LorentzBiq; their half
    angles add.
    """
    if np.max(np.abs(np.subtract(first.e, second.e))) > UNIT_TOL:
        raise ValueError("compose needs transforms about the same axis")
    return _from_half_angles(first.theta + second.theta, first.phi + second.phi, first.e)


def inverse(lb: LorentzBiq) -> LorentzBiq:
    return _from_half_angles(-lb.theta, -lb.phi, lb.e)


def _check_event(Z: Biquaternion, tol: float = 1e-12):
    arr = Z.as_array()
    scale = 1.0 + float(np.max(np.abs(arr)))
    if abs(arr[0].imag) > tol * scale or np.max(np.abs(arr[1:].real)) > tol * scale:
        raise ValueError(f"event must have the form tau + i x with real tau, x: {Z}")


def transform_event(lb: LorentzBiq, Z: Biquaternion) -> Biquaternion:
    """Z' = L o Z o L*"""
    _check_event(Z)
    return mul(mul(lb.L, Z), lb.star)


def inverse_event(lb: LorentzBiq, Z_prime: Biquaternion) -> Biquaternion:
    """Z = L bar* o Z' o L bar"""
    _check_event(Z_prime)
    return mul(mul(lb.bar_star, Z_prime), lb.bar)


def event_coordinates(Z: Biquaternion) -> Tuple[float, np.ndarray]:
    """(tau, x) of an event Z = tau + i x"""
    arr = Z.as_array()
    return float(arr[0].real), arr[1:].imag.copy()


def transform_biq(lb: LorentzBiq, K: Biquaternion) -> Biquaternion:
    """K' = L o K o L*"""
    return mul(mul(lb.L, K), lb.star)


def transform_arrays(lb: LorentzBiq, data: np.ndarray) -> np.ndarray:
    """Pointwise L o K o L* over component arrays of shape (4, ...)"""
    shape = (4,) + (1,) * (np.ndim(data) - 1)
    L = lb.L.as_array().reshape(shape)
    L_star = lb.star.as_array().reshape(shape)
    return qmul(qmul(L, data), L_star)


def relativistic_closed_forms(kind: Union[str, ClosedForm], value: Biquaternion, v: float,
                              e: Sequence[float]) -> Biquaternion:
    """
    Relativistic closed forms for a pure boost

    Args:
        kind: event (tau + i x), tension (vector part transformed, scalar
            part dropped), charge_current (Theta = -i rho - J) or
            power_force (M - i F)
        value: input biquaternion of that family
        v: boost speed
        e: unit direction

    Returns:
        transformed biquaternion of the same family
    """
    kind = ClosedForm(kind)
    _check_speed(v)
    e = np.asarray(_unit_vector(e))
    gamma = 1.0 / math.sqrt(1.0 - v * v)
    arr = value.as_array()

    def longitudinal(vec, scalar_shift):
        along = complex(np.dot(e, vec))
        return (vec - e * along) + e * gamma * (along + scalar_shift)

    if kind is ClosedForm.EVENT:
        tau, x = arr[0].real, arr[1:].imag
        along = float(np.dot(e, x))
        tau_p = gamma * (tau + v * along)
        x_p = (x - e * along) + e * gamma * (along + v * tau)
        return event(tau_p, x_p)

    if kind is ClosedForm.TENSION:
        return Biquaternion(0, Vec3C(*longitudinal(arr[1:], 0.0)))

    if kind is ClosedForm.CHARGE_CURRENT:
        rho, J = 1j * arr[0], -arr[1:]
        rho_p = gamma * (rho - v * complex(np.dot(e, J)))
        J_p = longitudinal(J, -v * rho)
        return Biquaternion(-1j * rho_p, Vec3C(*(-J_p)))

    # power-force: raw = M - i F. M' = gamma (M - v (e, F)) is the sign L o K o L* gives;
    # a unit force along a 0.6 boost yields M' = -0.75 (DESIGN.md, power-force closed form)
    M, F = arr[0], 1j * arr[1:]
    M_p = gamma * (M - v * complex(np.dot(e, F)))
    F_p = longitudinal(F, -v * M)
    return Biquaternion(M_p, Vec3C(*(-1j * F_p)))


def transform_field(lb: LorentzBiq, sampler: Evaluator, grid: Grid, tau0: float, dtau: float,
                    count: int = 3) -> SampleStack:
    """
    Resample a field into the primed frame

    K'(Z') = L o K(Z) o L* with Z = L bar* o Z' o L bar, evaluated at the
    primed grid points for tau'_j = tau0 + j dtau.

    Args:
        sampler: callable (tau array (m,), points (3, m)) -> (4, m)
    """
    points = grid.points()
    arrays = []
    for j in range(count):
        tau_prime = tau0 + j * dtau
        taus, xs = _inverse_event_arrays(lb, np.full(points.shape[1], tau_prime), points)
        values = transform_arrays(lb, sampler(taus, xs))
        arrays.append(values.reshape((4,) + grid.shape))
    return SampleStack.from_arrays(grid, arrays, tau0, dtau)


def _inverse_event_arrays(lb: LorentzBiq, tau_p: np.ndarray, x_p: np.ndarray):
    """Vectorized Z = L bar* o Z' o L bar for many events"""
    Z = np.empty((4,) + np.shape(tau_p), dtype=complex)
    Z[0] = tau_p
    Z[1:] = 1j * x_p
    shape = (4,) + (1,) * np.ndim(tau_p)
    left = lb.bar_star.as_array().reshape(shape)
    right = lb.bar.as_array().reshape(shape)
    out = qmul(qmul(left, Z), right)
    return out[0].real, out[1:].imag


def covariance_residual(lb: LorentzBiq, K: Evaluator, points: np.ndarray, tau: float,
                        step: float) -> float:
    """
    Bigradient covariance check in the primed frame

    Compares nabla'+(K') at primed events with L bar o (nabla+ K)(Z) o L*,
    both by central differences with the given step. The difference
    vanishes as step -> 0.

    Args:
        K: callable (tau array, points (3, m)) -> (4, m), unprimed frame
        points: primed target points (3, m)
        tau: primed time
    """
    points = np.asarray(points, dtype=float)
    m = points.shape[1]

    def primed(tau_prime, x_prime):
        taus, xs = _inverse_event_arrays(lb, np.full(m, tau_prime), x_prime)
        return transform_arrays(lb, K(taus, xs))

    lhs = pointwise_bigradient(primed, tau, points, '+', step)

    taus, xs = _inverse_event_arrays(lb, np.full(m, tau), points)
    grads = np.empty((4, m), dtype=complex)
    # unprimed events differ per point, so difference each one at its own time
    for i in range(m):
        def at(t, x):
            return K(np.full(x.shape[1], t), x)
        grads[:, i] = pointwise_bigradient(at, taus[i], xs[:, i:i + 1], '+', step)[:, 0]
    L_bar = lb.bar.as_array().reshape(4, 1)
    L_star = lb.star.as_array().reshape(4, 1)
    rhs = qmul(qmul(L_bar, grads), L_star)
    return float(np.max(np.abs(lhs - rhs)))

