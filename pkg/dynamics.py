"""
Field Dynamics
Newton-law analogs for interacting charge-current fields: the power-force
biquaternion Theta o A', action-reaction, the free-field law, the coupled
RK4 evolution of N fields

    kappa nabla- Theta^k = Theta^k o (sum_{m != k} A^m + A_bg)
    nabla+ A^k = Theta^k

and the stress, energy and thermodynamic diagnostics built on them.
"""
import math
from dataclasses import dataclass, replace
from enum import Enum
from itertools import combinations
from typing import Callable, Dict, Iterator, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from algebra import dot3, qconj_quat, qmul
from config import Config
from egm import (ChargeCurrent, EgmState, Medium, current_divergence, energy_pulse_arrays,
                 field_energy_density, rho_and_current, split_charge_current)
from errors import NonFiniteError, StabilityError
from fields import (BiqField, Grid, SampleStack, bigradient, center_derivative, check_aligned,
                    check_same_grid, curl, divergence, field_derivative, first_nonfinite, gradient,
                    partial, quaternion_derivative, wave_operator)
from utils.logger import logger

# Levi-Civita symbol e_ikl
LEVI_CIVITA = np.zeros((3, 3, 3))
for _i, _k, _l in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
    LEVI_CIVITA[_i, _k, _l] = 1.0
    LEVI_CIVITA[_i, _l, _k] = -1.0

Background = Callable[[float], np.ndarray]


class PowerForce(NamedTuple):
    """Power density M and force densities F = FH + i FE; raw = M - i F"""
    M: np.ndarray
    FH: np.ndarray
    FE: np.ndarray
    raw: BiqField

    @property
    def F(self) -> np.ndarray:
        return self.FH + 1j * self.FE


class ForceTerms(NamedTuple):
    """Named contributions of the force densities (shared medium)"""
    coulomb: np.ndarray          # rhoE E'
    gravitational: np.ndarray    # rhoH H'
    lorentz: np.ndarray          # jE x B' - jH x D'
    resistance_H: np.ndarray     # Re(a' J)
    gravielectric_charge: np.ndarray   # sqrt(mu/eps) rhoE H' - sqrt(eps/mu) rhoH E'
    gravielectric_current: np.ndarray  # -sqrt(eps mu) (jE x E' + jH x H')
    resistance_E: np.ndarray     # Im(a' J)

    @property
    def FH(self) -> np.ndarray:
        return self.coulomb + self.gravitational + self.lorentz + self.resistance_H

    @property
    def FE(self) -> np.ndarray:
        return self.gravielectric_charge + self.gravielectric_current + self.resistance_E


class StressTensors(NamedTuple):
    sigmaH: np.ndarray  # (3, 3, n, n, n)
    sigmaE: np.ndarray


class StressBalance(NamedTuple):
    resH: np.ndarray
    resE: np.ndarray


class CurrentEnergy(NamedTuple):
    Q: np.ndarray
    PJ: np.ndarray
    Xi: BiqField


class EnergyExchange(Enum):
    """Sign of the cross energy between interacting fields"""
    SEPARATION = 1
    ABSORPTION = -1
    CONSERVATION = 0


class InteractionEnergy(NamedTuple):
    total: BiqField
    delta: BiqField
    pairwise: Dict[Tuple[int, int], BiqField]
    classification: np.ndarray  # EnergyExchange values per grid point

    def counts(self) -> Dict[str, int]:
        return exchange_counts(self.classification)


class GlobalBalances(NamedTuple):
    W: float
    Q: float
    dW: float
    counts: Dict[str, int]


class TotalFieldResidual(NamedTuple):
    residual: BiqField   # kappa nabla- (sum Theta) - sum of pair action-reaction terms
    total: BiqField      # kappa nabla- (sum Theta)
    pairwise: BiqField   # sum over pairs of action-reaction residuals


@dataclass(frozen=True)
class FieldState:
    """One interacting field: tension A (scalar part i a), charge-current Theta, medium"""
    A: BiqField
    Theta: BiqField
    medium: Medium = Medium()

    def __post_init__(self):
        check_same_grid(self.A.grid, self.Theta.grid)


@dataclass(frozen=True)
class InteractionSystem:
    """
    Snapshot of N coupled fields at time tau

    background, when given, is a prescribed tension tau -> (4, n, n, n)
    acting on every field (strong-field mode); it is not evolved.
    """
    fields: Tuple[FieldState, ...]
    kappa: float = 1.0
    tau: float = 0.0
    step: int = 0
    background: Optional[Background] = None

    def __post_init__(self):
        fields = tuple(self.fields)
        if not fields:
            raise ValueError("interaction system needs at least one field")
        check_same_grid(*(f.A.grid for f in fields))
        if not (math.isfinite(self.kappa) and self.kappa > 0):
            raise ValueError(f"kappa must be positive and finite, got {self.kappa}")
        object.__setattr__(self, 'fields', fields)

    @property
    def grid(self) -> Grid:
        return self.fields[0].A.grid

    def __len__(self) -> int:
        return len(self.fields)

    def tensions(self) -> np.ndarray:
        return np.stack([f.A.data for f in self.fields])

    def thetas(self) -> np.ndarray:
        return np.stack([f.Theta.data for f in self.fields])

    def partner_tension(self, k: int) -> BiqField:
        """Sum of the other tensions plus the background, as felt by field k"""
        return BiqField(self.grid, _partner(self.tensions(), k, self.background, self.tau))

    def with_arrays(self, tensions: np.ndarray, thetas: np.ndarray, tau: float, step: int) -> 'InteractionSystem':
        grid = self.grid
        fields = tuple(FieldState(BiqField(grid, tensions[k]), BiqField(grid, thetas[k]), f.medium)
                       for k, f in enumerate(self.fields))
        return replace(self, fields=fields, tau=tau, step=step)


# ---------------------------------------------------------------------------
# Newton-law analogs
# ---------------------------------------------------------------------------

def power_force(Theta: BiqField, A_other: BiqField) -> PowerForce:
    """
    Power-force density Theta o A' = M - i (FH + i FE)

    Resistance a' of the partner enters through the scalar part of A'.
    """
    check_same_grid(Theta.grid, A_other.grid)
    raw = qmul(Theta.data, A_other.data)
    F = 1j * raw[1:]
    return PowerForce(raw[0].copy(), F.real.copy(), F.imag.copy(), BiqField(Theta.grid, raw))


def force_terms(cc: ChargeCurrent, other: EgmState) -> ForceTerms:
    """
    Split the force densities into their physical contributions

    Both fields share other.medium; the sums FH, FE equal those of
    power_force on the assembled biquaternions.
    """
    check_same_grid(cc.grid, other.grid)
    m = other.medium
    E, H, a = other.E, other.H, other.a
    J = m.sqrt_mu * cc.jE - 1j * m.sqrt_eps * cc.jH
    aJ = a * J
    cross = np.cross(cc.jE, E, axis=0) + np.cross(cc.jH, H, axis=0)
    return ForceTerms(
        coulomb=cc.rhoE * E,
        gravitational=cc.rhoH * H,
        lorentz=np.cross(cc.jE, m.mu * H, axis=0) - np.cross(cc.jH, m.eps * E, axis=0),
        resistance_H=aJ.real,
        gravielectric_charge=math.sqrt(m.mu / m.eps) * cc.rhoE * H - math.sqrt(m.eps / m.mu) * cc.rhoH * E,
        gravielectric_current=-math.sqrt(m.eps * m.mu) * cross,
        resistance_E=aJ.imag,
    )


def action_reaction_residual(Theta1: BiqField, A2: BiqField, Theta2: BiqField, A1: BiqField) -> BiqField:
    """Theta1 o A2 + Theta2 o A1; zero when action equals reaction"""
    check_same_grid(Theta1.grid, A2.grid, Theta2.grid, A1.grid)
    return BiqField(Theta1.grid, qmul(Theta1.data, A2.data) + qmul(Theta2.data, A1.data))


def free_field_rhs(Theta: BiqField) -> BiqField:
    """d_tau Theta = i D o Theta, from nabla- Theta = 0"""
    return BiqField(Theta.grid, 1j * field_derivative(Theta))


# ---------------------------------------------------------------------------
# Coupled evolution
# ---------------------------------------------------------------------------

def _partner(tensions: np.ndarray, k: int, background: Optional[Background], tau: float) -> np.ndarray:
    partner = np.zeros_like(tensions[0])
    for m in range(len(tensions)):
        if m != k:
            partner = partner + tensions[m]
    if background is not None:
        partner = partner + background(tau)
    return partner


Derivatives = Tuple[Sequence[np.ndarray], Sequence[np.ndarray]]


def interaction_rhs(system: InteractionSystem, tensions: np.ndarray, thetas: np.ndarray,
                    tau: float, derivatives: Optional[Derivatives] = None) -> Tuple[np.ndarray, np.ndarray]:
    """
    Time derivatives (dA, dTheta) of all fields for the method of lines

    derivatives, when given, holds D o A^k and D o Theta^k already known
    for these arrays.
    """
    grid = system.grid
    if derivatives is None:
        derivatives = ([quaternion_derivative(a, grid) for a in tensions],
                       [quaternion_derivative(t, grid) for t in thetas])
    D_tensions, D_thetas = derivatives
    # a lone field without background feels no partner
    coupled = len(thetas) > 1 or system.background is not None
    d_tensions = np.empty_like(tensions)
    d_thetas = np.empty_like(thetas)
    for k in range(len(thetas)):
        d_thetas[k] = 1j * D_thetas[k]
        if coupled:
            d_thetas[k] += qmul(thetas[k], _partner(tensions, k, system.background, tau)) / system.kappa
        d_tensions[k] = thetas[k] - 1j * D_tensions[k]
    return d_tensions, d_thetas


def _check_finite(system: InteractionSystem, stages, result):
    """Scan the step result; on failure report the first bad stage entry"""
    if all(np.isfinite(arr).all() for arr in result):
        return
    for tensions, thetas in (*stages, result):
        for name, arrays in (('A', tensions), ('Theta', thetas)):
            for k, arr in enumerate(arrays):
                index = first_nonfinite(arr)
                if index is not None:
                    logger.error(f"Non-finite {name}[{k}] at {index}, step {system.step + 1}, tau {system.tau:.6g}")
                    raise NonFiniteError(f"{name}[{k}]", index, system.step + 1)


def step_interaction(system: InteractionSystem, dt: float) -> InteractionSystem:
    """
    One classical RK4 step of the coupled system

    Args:
        system: current snapshot
        dt: time step, |dt| <= h/2 (negative steps integrate backwards)

    Returns:
        new InteractionSystem at tau + dt

    Raises:
        StabilityError: |dt| above h/2
        NonFiniteError: NaN/Inf in any stage
    """
    h = system.grid.h
    if not math.isfinite(dt) or abs(dt) > 0.5 * h * (1.0 + 1e-12):
        raise StabilityError(f"dt = {dt} violates |dt| <= h/2 = {0.5 * h}")
    tau = system.tau
    A0, T0 = system.tensions(), system.thetas()

    # first stage reuses the slice derivatives kept on the snapshot
    known = ([field_derivative(f.A) for f in system.fields], [field_derivative(f.Theta) for f in system.fields])
    k1 = interaction_rhs(system, A0, T0, tau, known)
    k2 = interaction_rhs(system, A0 + 0.5 * dt * k1[0], T0 + 0.5 * dt * k1[1], tau + 0.5 * dt)
    k3 = interaction_rhs(system, A0 + 0.5 * dt * k2[0], T0 + 0.5 * dt * k2[1], tau + 0.5 * dt)
    k4 = interaction_rhs(system, A0 + dt * k3[0], T0 + dt * k3[1], tau + dt)

    A1 = A0 + dt / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
    T1 = T0 + dt / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])
    _check_finite(system, (k1, k2, k3, k4), (A1, T1))
    return system.with_arrays(A1, T1, tau + dt, system.step + 1)


def evolve(system: InteractionSystem, dt: float, steps: int) -> Iterator[InteractionSystem]:
    """Yield the snapshots after each of `steps` RK4 steps"""
    for _ in range(steps):
        system = step_interaction(system, dt)
        yield system


# ---------------------------------------------------------------------------
# Stress and balance laws
# ---------------------------------------------------------------------------

def stress_tensors(cc: ChargeCurrent, medium: Medium, kappa: float = 1.0) -> StressTensors:
    """
    Non-symmetric stress pseudotensors

    sigmaH_ik = -kappa (rhoH / sqrt(mu) delta_ik + sqrt(mu) jE_l e_ikl)
    sigmaE_ik = -kappa (rhoE / sqrt(eps) delta_ik - sqrt(eps) jH_l e_ikl)
    """
    eye = np.eye(3).reshape((3, 3) + (1,) * cc.rhoE.ndim)
    sigmaH = -kappa * (eye * (cc.rhoH / medium.sqrt_mu)
                       + medium.sqrt_mu * np.einsum('ikl,l...->ik...', LEVI_CIVITA, cc.jE))
    sigmaE = -kappa * (eye * (cc.rhoE / medium.sqrt_eps)
                       - medium.sqrt_eps * np.einsum('ikl,l...->ik...', LEVI_CIVITA, cc.jH))
    return StressTensors(sigmaH, sigmaE)


def _tensor_divergence(sigma: np.ndarray, grid: Grid) -> np.ndarray:
    """d sigma_ik / d x_k"""
    return np.stack([sum(partial(sigma[i, k], k, grid) for k in range(3)) for i in range(3)])


def stress_balance_residual(theta_stack: SampleStack, force: PowerForce, medium: Medium,
                            kappa: float = 1.0) -> StressBalance:
    """
    Balance laws in stress form at the center slice

    resH = kappa sqrt(eps) d_tau jH - d_k sigmaH_ik + FH
    resE = kappa sqrt(mu) d_tau jE - d_k sigmaE_ik + FE

    Both vanish on solutions of the coupled system.
    """
    grid = theta_stack.grid
    currents = [split_charge_current(s, medium) for s in theta_stack.slices]
    d_jH = center_derivative([c.jH for c in currents], theta_stack.dtau)
    d_jE = center_derivative([c.jE for c in currents], theta_stack.dtau)
    sigma = stress_tensors(currents[theta_stack.center], medium, kappa)
    resH = kappa * medium.sqrt_eps * d_jH - _tensor_divergence(sigma.sigmaH, grid) + force.FH
    resE = kappa * medium.sqrt_mu * d_jE - _tensor_divergence(sigma.sigmaE, grid) + force.FE
    return StressBalance(resH, resE)


def newton_law_residual(theta_stack: SampleStack, force: PowerForce, kappa: float = 1.0) -> np.ndarray:
    """kappa (d_tau J - i rot J + grad rho) - i F at the center slice"""
    grid = theta_stack.grid
    rhos, currents = zip(*(rho_and_current(s.data) for s in theta_stack.slices))
    c = theta_stack.center
    law = (center_derivative(currents, theta_stack.dtau) - 1j * curl(currents[c], grid)
           + gradient(rhos[c], grid))
    return kappa * law - 1j * force.F


def charge_law_residual(theta_stack: SampleStack, M: np.ndarray, kappa: float = 1.0) -> np.ndarray:
    """kappa (d_tau rho + div J) - i M; charge is conserved only where M = 0"""
    rhos = [1j * s.scalar for s in theta_stack.slices]
    law = center_derivative(rhos, theta_stack.dtau) + current_divergence(theta_stack.center_field)
    return kappa * law - 1j * M


def resistance_wave_residual(tension_stack: SampleStack, M: np.ndarray, kappa: float = 1.0) -> np.ndarray:
    """kappa box a + i M for the resistance a = -i scalar(A)"""
    box_a = -1j * wave_operator(tension_stack).scalar
    return kappa * box_a + 1j * M


# ---------------------------------------------------------------------------
# Energy of the charge-current field
# ---------------------------------------------------------------------------

def charge_current_energy(Theta: BiqField) -> CurrentEnergy:
    """
    Q = 0.5 |J|^2, P_J = 0.5 i J x conj J, Xi = 0.5 Theta o Theta*

    Q and P_J are the scalar and vector parts of Xi when rho vanishes.
    """
    Q, PJ, Xi = energy_pulse_arrays(Theta.data)
    return CurrentEnergy(Q, PJ, BiqField(Theta.grid, Xi))


def current_energy_rate(Theta: BiqField) -> np.ndarray:
    """U = div P_J - Re(grad rho, conj J); a free field has d_tau Q = U"""
    grid = Theta.grid
    rho, J = rho_and_current(Theta.data)
    _, PJ = field_energy_density(Theta)
    return divergence(PJ, grid) - dot3(gradient(rho, grid), np.conj(J)).real


def thermo_residual(theta_stack: SampleStack, force: PowerForce, kappa: float = 1.0) -> np.ndarray:
    """kappa (d_tau Q - div P_J + Re(grad rho, conj J)) + Im(F, conj J)"""
    Qs = [field_energy_density(s)[0] for s in theta_stack.slices]
    d_Q = center_derivative(Qs, theta_stack.dtau)
    center = theta_stack.center_field
    _, J = rho_and_current(center.data)
    return kappa * (d_Q - current_energy_rate(center)) + dot3(force.F, np.conj(J)).imag


# ---------------------------------------------------------------------------
# Interaction energy
# ---------------------------------------------------------------------------

def exchange_counts(classification: np.ndarray) -> Dict[str, int]:
    return {kind.name.lower(): int(np.count_nonzero(classification == kind.value)) for kind in EnergyExchange}


def _classify(delta_scalar: np.ndarray, scale: np.ndarray) -> np.ndarray:
    tol = Config.CLASSIFY_TOL * scale
    value = delta_scalar.real
    out = np.full(value.shape, EnergyExchange.CONSERVATION.value, dtype=np.int8)
    out[value > tol] = EnergyExchange.SEPARATION.value
    out[value < -tol] = EnergyExchange.ABSORPTION.value
    return out


def _cross_energy(thetas: Sequence[BiqField]):
    """delta = sum_{k<l} Xi^{kl}, the pairwise terms and the per-point classification"""
    grid = thetas[0].grid
    pairwise = {}
    delta = np.zeros((4,) + grid.shape, dtype=complex)
    for k, l in combinations(range(len(thetas)), 2):
        a, b = thetas[k].data, thetas[l].data
        xi = 0.5 * (qmul(a, qconj_quat(b)) + qmul(b, qconj_quat(a)))
        pairwise[(k, l)] = BiqField(grid, xi)
        delta = delta + xi

    scale = sum(np.sum(np.abs(t.data) ** 2, axis=0) for t in thetas)
    return delta, pairwise, _classify(delta[0], scale)


def interaction_energy(thetas: Sequence[BiqField]) -> InteractionEnergy:
    """
    Energy-pulse of the total charge-current and its cross terms

    total = 0.5 (sum Theta) o (sum Theta)*, pairwise Xi^{kl} =
    0.5 (Theta^k o Theta^l* + Theta^l o Theta^k*) for k < l, and
    delta = sum_{k<l} Xi^{kl}, so that total = sum_k Xi^{kk} + delta.
    Points are classified by the sign of Re(scalar(delta)).
    """
    thetas = list(thetas)
    if not thetas:
        raise ValueError("interaction_energy needs at least one field")
    grid = thetas[0].grid
    check_same_grid(*(t.grid for t in thetas))

    summed = sum(t.data for t in thetas)
    total = 0.5 * qmul(summed, qconj_quat(summed))
    delta, pairwise, classification = _cross_energy(thetas)
    return InteractionEnergy(BiqField(grid, total), BiqField(grid, delta), pairwise, classification)


def global_balances(system: InteractionSystem) -> GlobalBalances:
    """Domain integrals of W, Q and delta W over the periodic box"""
    dv = system.grid.cell_volume
    W = sum(float(np.sum(field_energy_density(f.A)[0])) for f in system.fields) * dv
    Q = sum(float(np.sum(field_energy_density(f.Theta)[0])) for f in system.fields) * dv
    delta, _, classification = _cross_energy([f.Theta for f in system.fields])
    dW = float(np.sum(delta[0].real)) * dv
    return GlobalBalances(W, Q, dW, exchange_counts(classification))


def total_field_residual(theta_stacks: Sequence[SampleStack], tension_stacks: Sequence[SampleStack],
                         kappa: float = 1.0) -> TotalFieldResidual:
    """
    kappa nabla- (sum Theta^k) against the summed pair action-reaction terms

    With all forces internal the total field is driven only by the pairs;
    it is free when every pair satisfies action = reaction.
    """
    if len(theta_stacks) != len(tension_stacks) or not theta_stacks:
        raise ValueError("need one tension stack per charge-current stack")
    check_aligned(*theta_stacks, *tension_stacks)
    first = theta_stacks[0]
    grid = first.grid
    summed = SampleStack.from_arrays(grid, [sum(st.slices[j].data for st in theta_stacks)
                                            for j in range(len(first))], first.tau0, first.dtau)
    total = bigradient(summed, '-').scaled(kappa)

    pairwise = np.zeros((4,) + grid.shape, dtype=complex)
    for k, l in combinations(range(len(theta_stacks)), 2):
        pairwise = pairwise + action_reaction_residual(
            theta_stacks[k].center_field, tension_stacks[l].center_field,
            theta_stacks[l].center_field, tension_stacks[k].center_field).data
    pairwise = BiqField(grid, pairwise)
    return TotalFieldResidual(total - pairwise, total, pairwise)
