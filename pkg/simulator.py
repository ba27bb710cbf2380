"""
Scenario Runner
Evolves a scenario with the coupled RK4 stepper and journals the
per-step diagnostics; also runs the Cauchy-solver and Lorentz-frame
cross-checks.
"""
import math
from collections import deque
from dataclasses import dataclass, field, replace
from itertools import combinations
from pathlib import Path
from typing import Deque, List, Optional, Union

import numpy as np

from diagnostics_journal import DiagnosticsJournal, DiagnosticsRecord, write_report
from dynamics import (InteractionSystem, action_reaction_residual, charge_law_residual, global_balances,
                      power_force, step_interaction, stress_balance_residual, thermo_residual)
from egm import conservation_residuals, maxwell_residual
from fields import SampleStack, write_dump
from identities import lorentz_battery
from lorentz import covariance_residual, transform_field
from propagator import AnalyticSampler, free_field_cauchy, picard_transform
from scenario import Scenario
from utils.logger import logger

WINDOW = 5  # states per diagnostics record (fourth-order d/dtau)
KIRCHHOFF_TOL = 0.02
CAUSALITY_TOL = 1e-4
PICARD_TOL = 0.05
COVARIANCE_TOL = 1e-4


@dataclass
class RunResult:
    """Outputs of one scenario run"""
    records: int = 0
    ndjson: Optional[Path] = None
    summary: Optional[Path] = None
    dumps: List[Path] = field(default_factory=list)
    report: Optional[Path] = None
    passed: bool = True


def _max_abs(arr) -> float:
    return float(np.max(np.abs(arr))) if np.size(arr) else 0.0


def _stacks(window: List[InteractionSystem], k: int, dt: float):
    # snapshot slices as they are; derivatives cached by the stepper carry over
    tau0 = window[0].tau
    thetas = SampleStack(tuple(s.fields[k].Theta for s in window), tau0, dt)
    tensions = SampleStack(tuple(s.fields[k].A for s in window), tau0, dt)
    return thetas, tensions


def diagnostics_record(window: List[InteractionSystem], dt: float) -> DiagnosticsRecord:
    """Diagnostics at the center state of a five-state window"""
    center = window[len(window) // 2]
    kappa = center.kappa
    maxwell = charge = charge_law = energy = thermo = stress = 0.0
    for k, state in enumerate(center.fields):
        thetas, tensions = _stacks(window, k, dt)
        force = power_force(state.Theta, center.partner_tension(k))
        conservation = conservation_residuals(thetas, tensions)
        balance = stress_balance_residual(thetas, force, state.medium, kappa)

        maxwell = max(maxwell, maxwell_residual(tensions, state.Theta).max_abs())
        charge = max(charge, _max_abs(conservation.charge_res))
        energy = max(energy, _max_abs(conservation.energy_res))
        charge_law = max(charge_law, _max_abs(charge_law_residual(thetas, force.M, kappa)))
        thermo = max(thermo, _max_abs(thermo_residual(thetas, force, kappa)))
        stress = max(stress, _max_abs(balance.resH), _max_abs(balance.resE))

    action_reaction = 0.0
    for k, l in combinations(range(len(center)), 2):
        a, b = center.fields[k], center.fields[l]
        action_reaction = max(action_reaction, action_reaction_residual(a.Theta, b.A, b.Theta, a.A).max_abs())

    balances = global_balances(center)
    return DiagnosticsRecord(
        step=center.step,
        tau=center.tau,
        maxwell=maxwell,
        charge=charge,
        charge_law=charge_law,
        energy=energy,
        action_reaction=action_reaction,
        thermo=thermo,
        stress=stress,
        W=balances.W,
        Q=balances.Q,
        dW=balances.dW,
        **balances.counts,
    )


class ScenarioRunner:
    """Runs one scenario and writes its outputs"""

    def __init__(self, scenario: Scenario, out_dir: Union[str, Path, None] = None,
                 dump_every: Optional[int] = None, log_every: int = 10):
        self.scenario = scenario
        self.out_dir = Path(out_dir if out_dir is not None else scenario.outputs.dir)
        self.dump_every = scenario.outputs.dump_every if dump_every is None else dump_every
        self.log_every = max(1, log_every)
        self.dumps: List[Path] = []

    def run(self) -> RunResult:
        sc = self.scenario
        dt = sc.time_step
        logger.info("=" * 60)
        logger.info(f"🚀 Scenario '{sc.kind}': n={sc.grid.n}, h={sc.grid.h}, order={sc.order}, "
                    f"fields={len(sc.fields)}, dt={dt:.6g}, steps={sc.steps}")
        logger.info("=" * 60)

        system = sc.initial_system()
        # one step back so the first record has a centered five-state window
        back = replace(step_interaction(system, -dt), step=-1)
        window: Deque[InteractionSystem] = deque([back, system], maxlen=WINDOW)
        with DiagnosticsJournal(self.out_dir) as journal:
            self._maybe_dump(system)
            for _ in range(sc.steps + 2):
                system = step_interaction(system, dt)
                window.append(system)
                if system.step <= sc.steps:
                    self._maybe_dump(system)
                if len(window) < WINDOW:
                    continue
                record = diagnostics_record(list(window), dt)
                journal.log_record(record)
                if record.step % self.log_every == 0 or record.step == sc.steps:
                    logger.info(f"step {record.step}/{sc.steps} tau={record.tau:.4f} "
                                f"maxwell={record.maxwell:.2e} charge={record.charge:.2e} "
                                f"W={record.W:.6g} Q={record.Q:.6g} dW={record.dW:.3g}")
            journal.flush()
            result = RunResult(len(journal.records), journal.ndjson_path, journal.summary_path, self.dumps)

        logger.info("=" * 60)
        logger.info(f"✅ Scenario complete: {result.records} records in {result.ndjson}")
        logger.info("=" * 60)
        return result

    def _maybe_dump(self, system: InteractionSystem):
        if not self.dump_every or system.step % self.dump_every:
            return
        for k, state in enumerate(system.fields):
            for name, f in (('A', state.A), ('Theta', state.Theta)):
                path = self.out_dir / 'dumps' / f"step{system.step:06d}_field{k}_{name}.bqf"
                self.dumps.append(write_dump(path, f, system.tau))


def run_scenario(scenario: Scenario, out_dir: Union[str, Path, None] = None,
                 dump_every: Optional[int] = None, log_every: int = 10) -> RunResult:
    """Evolve a free, interact or background scenario"""
    return ScenarioRunner(scenario, out_dir, dump_every, log_every).run()


def _evolve_to(system: InteractionSystem, horizon: float, dt: float) -> InteractionSystem:
    steps = max(1, int(math.ceil(horizon / dt - 1e-9)))
    dt_eff = horizon / steps
    for _ in range(steps):
        system = step_interaction(system, dt_eff)
    return system


def _line_indices(n: int, center: np.ndarray):
    """Grid indices on the three axis lines through center and the main diagonal"""
    line = np.arange(n)
    i = np.concatenate([line, np.full(n, center[0]), np.full(n, center[0]), line])
    j = np.concatenate([np.full(n, center[1]), line, np.full(n, center[1]), line])
    k = np.concatenate([np.full(n, center[2]), np.full(n, center[2]), line, line])
    return i, j, k


def cauchy_check(scenario: Scenario, out_dir: Union[str, Path, None] = None) -> RunResult:
    """
    Kirchhoff solution of the free charge-current field against the stepper

    Also measures the light-cone leak beyond 5 widths plus the horizon for
    gaussian profiles and, with a background and picard_iters > 0, compares
    the Picard iterate with the stepper at tau = 2 dt.
    """
    sc = scenario
    out_dir = Path(out_dir if out_dir is not None else sc.outputs.dir)
    q = sc.quadrature_spec()
    system = sc.initial_system()
    grid = system.grid
    Theta0 = system.fields[0].Theta
    logger.info("=" * 60)
    logger.info(f"🔎 Cauchy check: horizon {sc.horizon}, quadrature {q}")

    pairs, _ = sc.profile_functions()
    profile = sc.fields[0].charge_current
    L = grid.extent
    center = np.array(profile.center if profile.center is not None else (L / 2,) * 3)
    index = _line_indices(grid.n, np.round(center / grid.h).astype(int) % grid.n)
    targets = grid.coordinates()[(slice(None),) + index]

    free = InteractionSystem((system.fields[0],), sc.kappa)
    stepped = _evolve_to(free, sc.horizon, sc.time_step).fields[0].Theta.data[(slice(None),) + index]
    kirchhoff = free_field_cauchy(AnalyticSampler(pairs[0][1]), targets, sc.horizon, q)
    peak = max(_max_abs(stepped), 1e-300)
    discrepancy = _max_abs(kirchhoff - stepped) / peak

    leak = 0.0
    if profile.kind == "gaussian_bump":
        d = np.mod(targets - center.reshape(3, 1) + L / 2, L) - L / 2
        outside = np.sqrt(np.sum(d ** 2, axis=0)) > 5.0 * profile.width + sc.horizon
        if outside.any():
            leak = _max_abs(kirchhoff[:, outside]) / peak

    payload = {
        'horizon': sc.horizon,
        'kirchhoff_vs_stepper': discrepancy,
        'causality_leak': leak,
    }
    passed = discrepancy <= KIRCHHOFF_TOL and leak <= CAUSALITY_TOL

    if sc.background is not None and sc.picard_iters > 0:
        _, background_fn = sc.profile_functions()
        dtau = sc.time_step
        picard = picard_transform(Theta0, AnalyticSampler(background_fn), sc.kappa, sc.picard_iters, q,
                                  dtau=dtau, slices=3)
        driven = InteractionSystem((system.fields[0],), sc.kappa, background=system.background)
        for _ in range(2):
            driven = step_interaction(driven, dtau)
        reference = driven.fields[0].Theta.data
        picard_error = _max_abs(picard.iterates[-1][-1] - reference) / max(_max_abs(reference), 1e-300)
        payload.update({
            'picard_residuals': picard.residuals,
            'picard_diverged': picard.diverged,
            'picard_vs_stepper': picard_error,
        })
        passed = passed and not picard.diverged and picard_error <= PICARD_TOL

    payload['passed'] = passed
    report = write_report(out_dir, "cauchy_check", payload)
    log = logger.info if passed else logger.warning
    log(f"{'✅' if passed else '❌'} Cauchy check: discrepancy {discrepancy:.3e}, leak {leak:.3e}")
    logger.info("=" * 60)
    return RunResult(report=report, passed=passed)


def lorentz_check(scenario: Scenario, out_dir: Union[str, Path, None] = None) -> RunResult:
    """
    Frame checks for the scenario boost

    Runs the randomized Lorentz battery, the bigradient covariance check on
    the first tension profile at sampled grid points, and resamples that
    profile into the primed frame.
    """
    sc = scenario
    out_dir = Path(out_dir if out_dir is not None else sc.outputs.dir)
    lb = sc.boost.build()
    grid = sc.make_grid()
    rng = np.random.default_rng(sc.seed)
    logger.info("=" * 60)
    logger.info(f"🔎 Lorentz check: v={sc.boost.v}, e={sc.boost.e}, phi={sc.boost.phi}")

    results = lorentz_battery(rng, min(sc.count, 1000))
    pairs, _ = sc.profile_functions()
    sampler = AnalyticSampler(pairs[0][0])
    points = grid.points()
    targets = points[:, rng.choice(points.shape[1], size=min(32, points.shape[1]), replace=False)]
    covariance = covariance_residual(lb, sampler, targets, sc.horizon, step=1e-3)
    primed = transform_field(lb, sampler, grid, 0.0, sc.time_step, 3)

    scale = 1.0 + _max_abs(sampler(sc.horizon, targets))
    passed = all(r.passed for r in results) and covariance <= COVARIANCE_TOL * scale
    payload = {
        'identities': {r.name: {'max_residual': r.max_residual, 'passed': r.passed} for r in results},
        'covariance_residual': covariance,
        'primed_max_abs': max(s.max_abs() for s in primed.slices),
        'passed': passed,
    }
    report = write_report(out_dir, "lorentz_check", payload)
    log = logger.info if passed else logger.warning
    log(f"{'✅' if passed else '❌'} Lorentz check: covariance residual {covariance:.3e}")
    logger.info("=" * 60)
    return RunResult(report=report, passed=passed)
