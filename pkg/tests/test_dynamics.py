"""
Power-force, action-reaction, coupled RK4 evolution, stress and energy laws
"""
import math

import numpy as np
import pytest

from dynamics import (EnergyExchange, FieldState, InteractionSystem, PowerForce, action_reaction_residual,
                      charge_current_energy, charge_law_residual, current_energy_rate, evolve, force_terms,
                      free_field_rhs, global_balances, interaction_energy, newton_law_residual, power_force,
                      resistance_wave_residual, step_interaction, stress_balance_residual, stress_tensors,
                      thermo_residual, total_field_residual)
from egm import ChargeCurrent, EgmState, Medium, assemble
from errors import NonFiniteError, StabilityError
from fields import BiqField, SampleStack
from scenario import parse_scenario
from tests.helpers import components, max_abs, periodic_grid, stack_from


def travelling_charge(tau, x1, x2, x3):
    g = np.sin(x1 - tau)
    return components(1j * g, g, 0 * g, 0 * g)


def const(grid, s=0, v=(0, 0, 0)):
    return BiqField.from_parts(grid, s, np.asarray(v, dtype=complex))


def static_stack(field):
    return SampleStack((field,) * 3, 0.0, 0.1)


def random_field(grid, rng, scale=1.0):
    shape = (4,) + grid.shape
    return BiqField(grid, scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)))


class TestPowerForce:
    def test_static_charge_in_a_tension(self, grid16):
        # rho = 1 in E' = e1 feels F = e1 and no power
        pf = power_force(const(grid16, -1j), const(grid16, 0, (1, 0, 0)))
        assert max_abs(pf.M) == 0.0
        np.testing.assert_allclose(pf.FH[0], 1.0)
        assert max_abs(pf.FH[1:]) == 0.0
        assert max_abs(pf.FE) == 0.0
        np.testing.assert_allclose(pf.F[0], 1.0)

    def test_current_along_a_tension_gives_power(self, grid16):
        # J = e1 in E' = e1: raw = (-e1) o e1 = 1
        pf = power_force(const(grid16, 0, (-1, 0, 0)), const(grid16, 0, (1, 0, 0)))
        np.testing.assert_allclose(pf.M, 1.0)
        assert max_abs(pf.F) == 0.0

    @pytest.mark.parametrize("eps, mu", [(1.0, 1.0), (4.0, 0.25), (0.3, 2.0)])
    def test_named_terms_sum_to_the_force(self, grid16, rng, eps, mu):
        medium = Medium(eps, mu)
        shape = grid16.shape
        cc = ChargeCurrent(grid16, rng.standard_normal(shape), rng.standard_normal(shape),
                           rng.standard_normal((3,) + shape), rng.standard_normal((3,) + shape))
        other = EgmState(grid16, rng.standard_normal((3,) + shape), rng.standard_normal((3,) + shape),
                         rng.standard_normal(shape), medium)
        _, Theta = assemble(EgmState(grid16, 0, 0, medium=medium), cc)
        A_other, _ = assemble(other, ChargeCurrent(grid16))
        pf = power_force(Theta, A_other)
        terms = force_terms(cc, other)
        np.testing.assert_allclose(terms.FH, pf.FH, atol=1e-12)
        np.testing.assert_allclose(terms.FE, pf.FE, atol=1e-12)

    def test_action_reaction_of_equal_charges(self, grid16):
        theta = const(grid16, -1j)
        A = const(grid16, 0, (1, 0, 0))
        res = action_reaction_residual(theta, A, theta, A)
        assert max_abs(res.scalar) == 0.0
        np.testing.assert_allclose(res.vector[0], -2j)
        assert max_abs(res.vector[1:]) == 0.0

    def test_action_reaction_balances_opposite_charges(self, grid16):
        A = const(grid16, 0, (1, 0, 0))
        res = action_reaction_residual(const(grid16, -1j), A, const(grid16, 1j), A)
        assert res.max_abs() == 0.0


class TestFreeField:
    def test_rhs_of_a_static_charge_wave(self, grid16):
        x1 = grid16.coordinates()[0]
        Theta = BiqField.from_parts(grid16, -1j * np.sin(x1))
        rhs = free_field_rhs(Theta)
        assert max_abs(rhs.scalar) < 1e-12
        assert max_abs(rhs.vector[0] - np.cos(x1)) < 0.03
        assert max_abs(rhs.vector[1:]) == 0.0

    def test_free_laws_hold_for_a_travelling_charge(self, grid16):
        stack = stack_from(grid16, travelling_charge, tau0=0.3, dtau=0.01)
        zero = power_force(stack.center_field, BiqField.zeros(grid16))
        assert max_abs(newton_law_residual(stack, zero)) < 0.03
        assert max_abs(charge_law_residual(stack, zero.M)) < 0.03
        assert max_abs(thermo_residual(stack, zero)) < 0.04


class TestEvolution:
    @staticmethod
    def _system(grid, background=None, kappa=1.0):
        x1, x2, _ = grid.coordinates()
        Theta = BiqField.from_parts(grid, -1j * (1 + 0.3 * np.sin(x1)), np.stack([0 * x1, 0.2 * np.cos(x2), 0 * x1]))
        A = BiqField.from_parts(grid, 0, np.stack([0.1 * np.sin(x2), 0 * x1, 0 * x1]))
        return InteractionSystem((FieldState(A, Theta),), kappa=kappa, background=background)

    def test_rk4_self_convergence(self):
        grid = periodic_grid(8)
        field = components(0, 0.2, 0, 0).reshape(4, 1, 1, 1) * np.ones((4,) + grid.shape)
        system = self._system(grid, background=lambda tau: field)
        dt = grid.h / 4
        finals = []
        for refine in (1, 2, 4):
            state = system
            for state in evolve(system, dt / refine, 4 * refine):
                pass
            finals.append(state.thetas())
        ratio = max_abs(finals[0] - finals[1]) / max_abs(finals[1] - finals[2])
        assert ratio > 10.0

    def test_rejects_unstable_steps(self):
        grid = periodic_grid(8)
        system = self._system(grid)
        with pytest.raises(StabilityError):
            step_interaction(system, 0.6 * grid.h)
        with pytest.raises(StabilityError):
            step_interaction(system, float('nan'))

    def test_backward_steps(self):
        grid = periodic_grid(8)
        system = self._system(grid)
        back = step_interaction(system, -grid.h / 4)
        assert back.tau == pytest.approx(-grid.h / 4)
        assert back.step == 1

    def test_round_trip_in_time(self):
        grid = periodic_grid(8)
        system = self._system(grid)
        dt = grid.h / 8
        there = step_interaction(system, dt)
        back = step_interaction(there, -dt)
        assert max_abs(back.thetas() - system.thetas()) < 1e-5

    def test_non_finite_background(self):
        grid = periodic_grid(8)
        bad = np.full((4,) + grid.shape, np.nan, dtype=complex)
        system = self._system(grid, background=lambda tau: bad)
        with pytest.raises(NonFiniteError) as info:
            step_interaction(system, grid.h / 4)
        assert info.value.field.startswith('Theta')
        assert info.value.step == 1

    def test_evolve_yields_each_step(self):
        grid = periodic_grid(8)
        snaps = list(evolve(self._system(grid), grid.h / 4, 3))
        assert [s.step for s in snaps] == [1, 2, 3]
        assert snaps[-1].tau == pytest.approx(0.75 * grid.h)

    def test_partner_tension_includes_background(self):
        grid = periodic_grid(8)
        field = np.ones((4,) + grid.shape, dtype=complex)
        system = self._system(grid, background=lambda tau: field)
        np.testing.assert_allclose(system.partner_tension(0).data, field)

    def test_system_validation(self):
        grid = periodic_grid(8)
        with pytest.raises(ValueError):
            InteractionSystem(())
        with pytest.raises(ValueError):
            self._system(grid, kappa=0.0)


class TestStress:
    def test_stress_tensor_example(self, grid16):
        cc = ChargeCurrent(grid16, rhoH=2.0, jE=np.array([0.0, 0.0, 1.0]).reshape(3, 1, 1, 1))
        sigma = stress_tensors(cc, Medium(1.0, 4.0))
        np.testing.assert_allclose(sigma.sigmaH[0, 0], -1.0)
        np.testing.assert_allclose(sigma.sigmaH[2, 2], -1.0)
        np.testing.assert_allclose(sigma.sigmaH[0, 1], -2.0)
        np.testing.assert_allclose(sigma.sigmaH[1, 0], 2.0)
        assert max_abs(sigma.sigmaE) == 0.0

    @pytest.mark.parametrize("eps, mu", [(1.0, 1.0), (2.5, 0.4)])
    def test_stress_form_matches_newton_law(self, grid16, rng, eps, mu):
        medium = Medium(eps, mu)
        stack = SampleStack(tuple(random_field(grid16, rng) for _ in range(3)), 0.0, 0.05)
        force = power_force(stack.center_field, random_field(grid16, rng))
        kappa = 0.7
        balance = stress_balance_residual(stack, force, medium, kappa)
        newton = newton_law_residual(stack, force, kappa)
        np.testing.assert_allclose(balance.resH, -newton.imag, atol=1e-10)
        np.testing.assert_allclose(balance.resE, newton.real, atol=1e-10)


class TestBalanceLaws:
    def test_charge_law_reports_power(self, grid16):
        stack = static_stack(const(grid16, -1j))
        M = np.full(grid16.shape, 0.5)
        np.testing.assert_allclose(charge_law_residual(stack, M, 2.0), -0.5j)

    def test_resistance_wave(self, grid16):
        # a = tau^2 / 2 so box a = 1
        stack = stack_from(grid16, lambda t, x1, x2, x3: components(0.5j * t ** 2 + 0 * x1, 0, 0, 0), tau0=0.4)
        zero = np.zeros(grid16.shape)
        np.testing.assert_allclose(resistance_wave_residual(stack, zero, 2.0), 2.0, rtol=1e-9)
        np.testing.assert_allclose(resistance_wave_residual(stack, zero + 2j, 2.0), 0.0, atol=1e-9)

    def test_charge_current_energy(self, grid16):
        energy = charge_current_energy(const(grid16, 0, (1, 0, 0)))
        np.testing.assert_allclose(energy.Q, 0.5)
        assert max_abs(energy.PJ) == 0.0
        np.testing.assert_allclose(energy.Xi.scalar, 0.5)

    def test_rate_of_a_travelling_charge(self, grid16):
        x1 = grid16.coordinates()[0]
        Theta = BiqField.from_function(grid16, travelling_charge, 0.0)
        # dQ/dtau = -sin cos for Q = 0.5 sin^2 (x1 - tau)
        assert max_abs(current_energy_rate(Theta) + np.sin(x1) * np.cos(x1)) < 0.03

    def test_thermo_law_with_an_external_force(self, grid16):
        stack = static_stack(const(grid16, 0, (1, 0, 0)))
        shape = grid16.shape
        FE = np.zeros((3,) + shape)
        FE[0] = 1.0
        force = PowerForce(np.zeros(shape), np.zeros((3,) + shape), FE, BiqField.zeros(grid16))
        np.testing.assert_allclose(thermo_residual(stack, force), -1.0)


class TestInteractionEnergy:
    def test_like_charges_separate(self, grid16):
        theta = const(grid16, -1j)
        energy = interaction_energy([theta, theta])
        np.testing.assert_allclose(energy.delta.scalar, 1.0)
        np.testing.assert_allclose(energy.total.scalar, 2.0)
        assert np.all(energy.classification == EnergyExchange.SEPARATION.value)
        assert energy.counts()['separation'] == grid16.n ** 3

    def test_opposite_charges_are_absorbed(self, grid16):
        energy = interaction_energy([const(grid16, -1j), const(grid16, 1j)])
        np.testing.assert_allclose(energy.delta.scalar, -1.0)
        assert energy.counts() == {'separation': 0, 'absorption': grid16.n ** 3, 'conservation': 0}

    def test_decomposition(self, grid16, rng):
        thetas = [random_field(grid16, rng) for _ in range(3)]
        energy = interaction_energy(thetas)
        own = sum(charge_current_energy(t).Xi.data for t in thetas)
        np.testing.assert_allclose(energy.total.data, own + energy.delta.data, atol=1e-12)
        assert sorted(energy.pairwise) == [(0, 1), (0, 2), (1, 2)]

    def test_single_field_conserves(self, grid16, rng):
        energy = interaction_energy([random_field(grid16, rng)])
        assert energy.delta.max_abs() == 0.0
        assert energy.counts()['conservation'] == grid16.n ** 3

    def test_needs_a_field(self):
        with pytest.raises(ValueError):
            interaction_energy([])

    def test_global_balances(self):
        grid = periodic_grid(8)
        field = FieldState(const(grid, 0, (1, 0, 0)), const(grid, 0, (1, 0, 0)))
        balances = global_balances(InteractionSystem((field,)))
        volume = grid.extent ** 3
        assert balances.W == pytest.approx(0.5 * volume)
        assert balances.Q == pytest.approx(0.5 * volume)
        assert balances.dW == 0.0
        assert balances.counts['conservation'] == grid.n ** 3


class TestTotalField:
    def test_pairs_drive_the_total_field(self, grid16):
        theta = static_stack(const(grid16, -1j))
        tension = static_stack(const(grid16, 0, (1, 0, 0)))
        res = total_field_residual([theta, theta], [tension, tension])
        assert res.total.max_abs() == 0.0
        np.testing.assert_allclose(res.pairwise.vector[0], -2j)
        np.testing.assert_allclose(res.residual.data, -res.pairwise.data)

    def test_balanced_pairs_leave_a_free_total_field(self, grid16):
        tension = static_stack(const(grid16, 0, (1, 0, 0)))
        res = total_field_residual([static_stack(const(grid16, -1j)), static_stack(const(grid16, 1j))],
                                   [tension, tension])
        assert res.residual.max_abs() == 0.0

    def test_needs_matching_stacks(self, grid16):
        theta = static_stack(const(grid16, -1j))
        with pytest.raises(ValueError):
            total_field_residual([theta, theta], [theta])


def scenario_at(n, kind, fields, **extra):
    """Smooth periodic run on the 2 pi cube, order 4, dt = h / 4"""
    return parse_scenario({'kind': kind, 'grid': {'n': n, 'h': 2.0 * math.pi / n}, 'order': 4,
                           'fields': fields, **extra})


def five_states(sc):
    states = [sc.initial_system()]
    for _ in range(4):
        states.append(step_interaction(states[-1], sc.time_step))
    return states


def theta_window(states, k, dt):
    return SampleStack(tuple(s.fields[k].Theta for s in states), states[0].tau, dt)


def tension_window(states, k, dt):
    return SampleStack(tuple(s.fields[k].A for s in states), states[0].tau, dt)


CHARGED_WAVE = {
    'tension': {'kind': 'plane_wave', 'amplitude': 0.5, 'polarization': [0, 0, 1, [0, 1]], 'mode': [1, 0, 0]},
    'charge_current': {'kind': 'plane_wave', 'amplitude': 1.0, 'polarization': [[0, -1], 1, 0.5, 0],
                       'mode': [0, 1, 1]},
}
BACKGROUND = {'kind': 'uniform', 'amplitude': 0.3, 'polarization': [[0, 0.2], 1, 0, [0, 1]]}


def background_residuals(n):
    sc = scenario_at(n, 'background', [CHARGED_WAVE], background=BACKGROUND)
    states = five_states(sc)
    center = states[2]
    state = center.fields[0]
    thetas = theta_window(states, 0, sc.time_step)
    force = power_force(state.Theta, center.partner_tension(0))
    balance = stress_balance_residual(thetas, force, state.medium, sc.kappa)
    return {
        'charge_law': max_abs(charge_law_residual(thetas, force.M, sc.kappa)),
        'thermo': max_abs(thermo_residual(thetas, force, sc.kappa)),
        'stress': max(max_abs(balance.resH), max_abs(balance.resE)),
    }


def total_field_residual_at(n):
    second = {
        'tension': {'kind': 'plane_wave', 'amplitude': 0.4, 'polarization': [[0, 0.1], 1, 0, 0], 'mode': [0, 0, 1]},
        'charge_current': {'kind': 'plane_wave', 'amplitude': 0.8, 'polarization': [0, 0, 1, [0, -1]],
                           'mode': [1, 1, 0]},
    }
    sc = scenario_at(n, 'interact', [CHARGED_WAVE, second])
    states = five_states(sc)
    thetas = [theta_window(states, k, sc.time_step) for k in range(2)]
    tensions = [tension_window(states, k, sc.time_step) for k in range(2)]
    return total_field_residual(thetas, tensions, sc.kappa).residual.max_abs()


@pytest.fixture(scope='module')
def background_runs():
    return background_residuals(16), background_residuals(32)


class TestConvergenceOrder:
    """Balance-law residuals on evolved states shrink at least at second order in h"""

    @pytest.mark.parametrize("law", ['charge_law', 'thermo', 'stress'])
    def test_background_run(self, background_runs, law):
        coarse, fine = background_runs
        assert fine[law] < 1e-3
        assert math.log2(coarse[law] / fine[law]) >= 2.0

    def test_summed_field_stays_free_along_the_trajectory(self):
        coarse, fine = total_field_residual_at(16), total_field_residual_at(32)
        assert fine < 1e-3
        assert math.log2(coarse / fine) >= 2.0
