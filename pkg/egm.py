"""
Electro-Gravimagnetic Model
Tension biquaternion A = i a + sqrt(eps) E + i sqrt(mu) H, charge-current
Theta = -i rho - J, energy-pulse Xi, the biquaternionic and modified Maxwell
equations and the potential-to-tension map.
"""
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Tuple

import numpy as np

from algebra import cross3, dot3, qconj_quat, qmul
from config import Config
from errors import SimulationError
from fields import (BiqField, Grid, SampleStack, bigradient, center_derivative, check_aligned,
                    check_same_grid, divergence, field_derivative, stack_time_derivative, wave_operator)


@dataclass(frozen=True)
class Medium:
    """Constant medium: eps, mu and the derived wave speed c = 1/sqrt(eps mu)"""
    eps: float = 1.0
    mu: float = 1.0
    c: float = field(init=False)

    def __post_init__(self):
        for name in ('eps', 'mu'):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be positive and finite, got {value}")
            object.__setattr__(self, name, float(value))
        object.__setattr__(self, 'c', 1.0 / math.sqrt(self.eps * self.mu))

    @property
    def sqrt_eps(self) -> float:
        return math.sqrt(self.eps)

    @property
    def sqrt_mu(self) -> float:
        return math.sqrt(self.mu)


def _real_array(grid: Grid, value, components: int = 0, name: str = 'field') -> np.ndarray:
    shape = ((components,) if components else ()) + grid.shape
    arr = np.asarray(value, dtype=float)
    if components and arr.ndim == 1:
        arr = arr.reshape(components, 1, 1, 1)
    arr = np.array(np.broadcast_to(arr, shape))
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    return arr


@dataclass(frozen=True, eq=False)
class EgmState:
    """Physical tensions E, H and resistance a on a grid"""
    grid: Grid
    E: np.ndarray
    H: np.ndarray
    a: np.ndarray = 0.0
    medium: Medium = Medium()

    def __post_init__(self):
        object.__setattr__(self, 'E', _real_array(self.grid, self.E, 3, 'E'))
        object.__setattr__(self, 'H', _real_array(self.grid, self.H, 3, 'H'))
        object.__setattr__(self, 'a', _real_array(self.grid, self.a, 0, 'a'))


@dataclass(frozen=True, eq=False)
class ChargeCurrent:
    """Electric and magnetic (mass) charge and current densities"""
    grid: Grid
    rhoE: np.ndarray = 0.0
    rhoH: np.ndarray = 0.0
    jE: np.ndarray = 0.0
    jH: np.ndarray = 0.0

    def __post_init__(self):
        object.__setattr__(self, 'rhoE', _real_array(self.grid, self.rhoE, 0, 'rhoE'))
        object.__setattr__(self, 'rhoH', _real_array(self.grid, self.rhoH, 0, 'rhoH'))
        object.__setattr__(self, 'jE', _real_array(self.grid, self.jE, 3, 'jE'))
        object.__setattr__(self, 'jH', _real_array(self.grid, self.jH, 3, 'jH'))


@dataclass(frozen=True, eq=False)
class Potential:
    """Complex potentials phi, Psi; the biquaternion is Phi = i phi - Psi"""
    grid: Grid
    phi: np.ndarray
    Psi: np.ndarray

    def as_field(self) -> BiqField:
        return BiqField.from_parts(self.grid, 1j * np.asarray(self.phi), -np.asarray(self.Psi))

    @classmethod
    def from_field(cls, f: BiqField) -> 'Potential':
        return cls(f.grid, -1j * f.scalar, -f.vector)


class Assembly(NamedTuple):
    A: BiqField
    Theta: BiqField


class ChargeCurrentDensity(NamedTuple):
    rho: np.ndarray  # complex scalar field
    J: np.ndarray    # complex vector field


class EnergyPulse(NamedTuple):
    W: np.ndarray
    P: np.ndarray
    Xi: BiqField


class TensionFromPotential(NamedTuple):
    A: BiqField
    gauge_residual: np.ndarray


class ConservationResiduals(NamedTuple):
    charge_res: np.ndarray
    energy_res: np.ndarray


class WaveResiduals(NamedTuple):
    tension: BiqField
    potential: Optional[BiqField]


# ---------------------------------------------------------------------------
# Assembly and splits
# ---------------------------------------------------------------------------

def rho_and_current(theta: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Complex rho and J from Theta = -i rho - J"""
    return 1j * theta[0], -theta[1:]


def theta_from(rho: np.ndarray, J: np.ndarray) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    out = np.empty((4,) + rho.shape, dtype=complex)
    out[0] = -1j * rho
    out[1:] = -np.asarray(J)
    return out


def assemble(state: EgmState, cc: ChargeCurrent) -> Assembly:
    """
    Build the tension and charge-current biquaternions

    Args:
        state: tensions E, H, resistance a and medium
        cc: real densities on the same grid

    Returns:
        A = i a + (sqrt(eps) E + i sqrt(mu) H), Theta = -i rho - J
    """
    check_same_grid(state.grid, cc.grid)
    m = state.medium
    A = BiqField.from_parts(state.grid, 1j * state.a, m.sqrt_eps * state.E + 1j * m.sqrt_mu * state.H)
    rho = cc.rhoE / m.sqrt_eps - 1j * cc.rhoH / m.sqrt_mu
    J = m.sqrt_mu * cc.jE - 1j * m.sqrt_eps * cc.jH
    return Assembly(A, BiqField(cc.grid, theta_from(rho, J)))


def split_tension(A: BiqField, medium: Medium) -> EgmState:
    """Inverse of the tension assembly"""
    return EgmState(
        grid=A.grid,
        E=A.vector.real / medium.sqrt_eps,
        H=A.vector.imag / medium.sqrt_mu,
        a=A.scalar.imag,
        medium=medium,
    )


def split_charge_current(Theta: BiqField, medium: Medium) -> ChargeCurrent:
    """Inverse of the charge-current assembly"""
    rho, J = rho_and_current(Theta.data)
    return ChargeCurrent(
        grid=Theta.grid,
        rhoE=medium.sqrt_eps * rho.real,
        rhoH=-medium.sqrt_mu * rho.imag,
        jE=J.real / medium.sqrt_mu,
        jH=-J.imag / medium.sqrt_eps,
    )


def charges_from_fields(state: EgmState) -> Tuple[np.ndarray, np.ndarray]:
    """rhoE = eps div E, rhoH = -mu div H"""
    m = state.medium
    return m.eps * divergence(state.E, state.grid), -m.mu * divergence(state.H, state.grid)


# ---------------------------------------------------------------------------
# Maxwell system
# ---------------------------------------------------------------------------

def extract_charge_current(A_stack: SampleStack) -> ChargeCurrentDensity:
    """
    Modified Maxwell extraction at the center slice

    J = grad a - d_tau A - i rot A, rho = div A - d_tau a, read off as
    rho = i scalar(nabla+ A), J = -vector(nabla+ A).
    """
    rho, J = rho_and_current(bigradient(A_stack, '+').data)
    return ChargeCurrentDensity(rho, J)


def maxwell_residual(A_stack: SampleStack, Theta: BiqField) -> BiqField:
    """nabla+ A - Theta at the center slice"""
    check_same_grid(A_stack.grid, Theta.grid)
    return bigradient(A_stack, '+') - Theta


def _drop_imaginary(values: np.ndarray, name: str, scale: float) -> np.ndarray:
    residue = float(np.max(np.abs(values.imag))) if values.size else 0.0
    if residue > Config.REALNESS_TOL * (1.0 + scale):
        raise SimulationError(f"{name} should be real, imaginary residue {residue:.3e}")
    return values.real.copy()


def energy_density_arrays(A: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """W = 0.5 (A, conj A) and P = 0.5 i [A, conj A] for raw component arrays"""
    Av = A[1:]
    scale = float(np.max(np.abs(A))) ** 2 if A.size else 0.0
    W = _drop_imaginary(0.5 * dot3(Av, np.conj(Av)), 'W', scale)
    P = _drop_imaginary(0.5j * cross3(Av, np.conj(Av)), 'P', scale)
    return W, P


def field_energy_density(f: BiqField) -> Tuple[np.ndarray, np.ndarray]:
    """(W, P) of one slice, computed once per slice"""
    return f.derived('energy_density', lambda: energy_density_arrays(f.data))


def energy_pulse_arrays(A: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """W, P and Xi = 0.5 A o A* for raw component arrays"""
    W, P = energy_density_arrays(A)
    return W, P, 0.5 * qmul(A, qconj_quat(A))


def energy_pulse(A: BiqField) -> EnergyPulse:
    """
    Energy density, Poynting vector and energy-pulse biquaternion

    W = 0.5 (A, conj A), P = 0.5 i [A, conj A], Xi = 0.5 A o A* = W + i P
    when the resistance vanishes.
    """
    W, P, Xi = energy_pulse_arrays(A.data)
    return EnergyPulse(W, P, BiqField(A.grid, Xi))


def tension_from_potential(pot_stack: SampleStack) -> TensionFromPotential:
    """
    A = nabla- Phi with the Lorentz calibration residual d_tau phi - div Psi

    The stack holds Phi = i phi - Psi slices (see Potential.as_field).
    """
    A = bigradient(pot_stack, '-')
    d_scalar = stack_time_derivative(pot_stack)[0]
    center = pot_stack.center_field
    # phi = -i s, Psi = -v
    gauge = -1j * d_scalar + divergence(center.vector, pot_stack.grid)
    return TensionFromPotential(A, gauge)


def current_divergence(Theta: BiqField) -> np.ndarray:
    """div J for J = -vector(Theta); equals the scalar part of D o Theta"""
    return field_derivative(Theta)[0]


def conservation_residuals(theta_stack: SampleStack, tension_stack: SampleStack) -> ConservationResiduals:
    """
    Charge and energy conservation residuals at the center slice

    charge_res = d_tau rho + div J
    energy_res = d_tau W + div P + Re(J, conj A)

    rho, J come from the Theta slices and W, P from the tension slices,
    so the stacks must be aligned.
    """
    check_aligned(theta_stack, tension_stack)
    grid = theta_stack.grid
    dtau = theta_stack.dtau
    rhos = [1j * s.scalar for s in theta_stack.slices]
    densities = [field_energy_density(s) for s in tension_stack.slices]
    c = theta_stack.center

    charge = center_derivative(rhos, dtau) + current_divergence(theta_stack.center_field)
    _, J = rho_and_current(theta_stack.center_field.data)
    A_center = tension_stack.center_field.data
    work = dot3(J, np.conj(A_center[1:])).real
    energy = (center_derivative([d[0] for d in densities], dtau)
              + divergence(densities[c][1], grid) + work)
    return ConservationResiduals(charge, energy)


def wave_residuals(A_stack: SampleStack, Theta_stack: SampleStack,
                   potential_stack: Optional[SampleStack] = None) -> WaveResiduals:
    """Residuals of box A = nabla- Theta and, when given, box Phi = Theta"""
    check_aligned(A_stack, Theta_stack)
    tension = wave_operator(A_stack) - bigradient(Theta_stack, '-')
    potential = None
    if potential_stack is not None:
        check_aligned(potential_stack, Theta_stack)
        potential = wave_operator(potential_stack) - Theta_stack.center_field
    return WaveResiduals(tension, potential)
