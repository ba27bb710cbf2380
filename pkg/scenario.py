"""
Scenario Configuration
YAML scenario files validated with pydantic; unknown keys are rejected.
Every validation failure is re-raised as ScenarioError naming the dotted
key that failed (e.g. `dt`, `boost.v`, `fields.0.tension.width`).
"""
import math
from pathlib import Path
from typing import Callable, List, Literal, Optional, Tuple, Union

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from config import Config
from dynamics import FieldState, InteractionSystem
from egm import Medium
from errors import ScenarioError
from fields import BiqField, FieldFunction, Grid
from lorentz import LorentzBiq, make_lorentz
from propagator import QuadratureSpec

Component = Union[float, Tuple[float, float]]


def _to_complex(value: Component) -> complex:
    if isinstance(value, (tuple, list)):
        return complex(value[0], value[1])
    return complex(value)


class _Strict(BaseModel):
    model_config = ConfigDict(extra='forbid', frozen=True)


class GridModel(_Strict):
    n: int = Field(ge=Config.MIN_GRID_POINTS)
    h: float = Field(gt=0)


class MediumModel(_Strict):
    eps: float = Field(1.0, gt=0)
    mu: float = Field(1.0, gt=0)

    def build(self) -> Medium:
        return Medium(self.eps, self.mu)


class ProfileModel(_Strict):
    """
    Named initial profile

    uniform: amplitude * polarization everywhere
    gaussian_bump: amplitude * exp(-|x - center|^2 / (2 width^2)) * polarization
    plane_wave: amplitude * exp(i (k.x - |k| tau + phase)) * polarization
    circular_wave: amplitude * exp(i (k.x - |k| tau + phase)) (u + i w), u x w = k/|k|
    with k = 2 pi mode / extent. phase may be 'random' (drawn from the seed).
    """
    kind: Literal['uniform', 'gaussian_bump', 'plane_wave', 'circular_wave'] = 'uniform'
    amplitude: float = 0.0
    polarization: Tuple[Component, Component, Component, Component] = (1.0, 0.0, 0.0, 0.0)
    center: Optional[Tuple[float, float, float]] = None
    width: float = Field(1.0, gt=0)
    mode: Tuple[int, int, int] = (1, 0, 0)
    phase: Union[float, Literal['random']] = 0.0

    @field_validator('amplitude', 'width')
    @classmethod
    def _finite(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError("must be finite")
        return value

    def polarization_array(self) -> np.ndarray:
        return np.array([_to_complex(c) for c in self.polarization])

    def build(self, grid: Grid, rng: np.random.Generator) -> FieldFunction:
        """Function (tau, x1, x2, x3) -> (4, ...) for this profile"""
        amp = self.amplitude
        pol = self.polarization_array().reshape(4, 1, 1, 1)
        phase = float(rng.uniform(0.0, 2.0 * math.pi)) if self.phase == 'random' else float(self.phase)

        if self.kind == 'uniform':
            value = amp * pol

            def fn(tau, x1, x2, x3):
                return value.reshape((4,) + (1,) * np.ndim(x1))
            return fn

        if self.kind == 'gaussian_bump':
            L = grid.extent
            center = np.array(self.center if self.center is not None else (L / 2,) * 3)
            width = self.width

            def fn(tau, x1, x2, x3):
                r2 = 0.0
                for x, c in zip((x1, x2, x3), center):
                    d = np.mod(x - c + L / 2, L) - L / 2
                    r2 = r2 + d * d
                bump = amp * np.exp(-r2 / (2.0 * width ** 2))
                return pol.reshape((4,) + (1,) * np.ndim(x1)) * bump
            return fn

        k = 2.0 * math.pi * np.array(self.mode, dtype=float) / grid.extent
        omega = float(np.linalg.norm(k))
        if self.kind == 'plane_wave':
            shape_pol = pol
        else:
            u, w = circular_basis(k)
            shape_pol = np.concatenate([[0.0], u + 1j * w]).reshape(4, 1, 1, 1)

        def fn(tau, x1, x2, x3):
            wave = amp * np.exp(1j * (k[0] * x1 + k[1] * x2 + k[2] * x3 - omega * tau + phase))
            return shape_pol.reshape((4,) + (1,) * np.ndim(x1)) * wave
        return fn


def circular_basis(k: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Orthonormal u, w transverse to k with u x w = k / |k|"""
    norm = float(np.linalg.norm(k))
    if norm == 0:
        raise ValueError("circular wave needs a nonzero mode")
    k_hat = k / norm
    a = np.array([1.0, 0.0, 0.0]) if abs(k_hat[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    u = a - np.dot(a, k_hat) * k_hat
    u /= np.linalg.norm(u)
    return u, np.cross(k_hat, u)


class FieldModel(_Strict):
    tension: ProfileModel = ProfileModel()
    charge_current: ProfileModel = ProfileModel()


class BoostModel(_Strict):
    v: float
    e: Tuple[float, float, float] = (1.0, 0.0, 0.0)
    phi: float = 0.0

    @field_validator('v')
    @classmethod
    def _subluminal(cls, value: float) -> float:
        if not (math.isfinite(value) and abs(value) < 1.0):
            raise ValueError("boost speed must satisfy |v| < 1")
        return value

    @field_validator('e')
    @classmethod
    def _unit(cls, value):
        if abs(math.sqrt(sum(c * c for c in value)) - 1.0) > 1e-9:
            raise ValueError("boost direction must be a unit vector")
        return value

    def build(self) -> LorentzBiq:
        return make_lorentz(self.v, self.e, self.phi)


class QuadratureModel(_Strict):
    n_polar: int = Field(16, ge=8)
    n_azimuth: int = Field(32, ge=16)
    radial_steps: int = Field(16, ge=16)


class OutputsModel(_Strict):
    dir: str = Config.DEFAULT_OUT_DIR
    dump_every: int = Field(0, ge=0)


class Scenario(_Strict):
    """Validated scenario file"""
    kind: Literal['free', 'interact', 'background', 'cauchy_check', 'lorentz_check', 'identities']
    grid: GridModel
    order: Literal[2, 4] = Config.DEFAULT_ORDER
    media: List[MediumModel] = [MediumModel()]
    kappa: float = Field(1.0, gt=0)
    dt: Optional[float] = None
    steps: int = Field(10, ge=1)
    seed: int = 0
    fields: List[FieldModel] = [FieldModel()]
    background: Optional[ProfileModel] = None
    boost: Optional[BoostModel] = None
    quadrature: QuadratureModel = QuadratureModel()
    horizon: float = Field(0.5, gt=0)
    picard_iters: int = Field(0, ge=0)
    count: int = Field(1000, ge=1)
    outputs: OutputsModel = OutputsModel()

    @property
    def time_step(self) -> float:
        return self.dt if self.dt is not None else self.grid.h / 4.0

    def make_grid(self) -> Grid:
        return Grid(self.grid.n, self.grid.h, self.order)

    def medium(self, k: int) -> Medium:
        return (self.media[k] if len(self.media) > 1 else self.media[0]).build()

    def quadrature_spec(self) -> QuadratureSpec:
        q = self.quadrature
        step = min(self.grid.h, self.time_step) / 2.0
        return QuadratureSpec(q.n_polar, q.n_azimuth, q.radial_steps, step)

    def profile_functions(self) -> Tuple[List[Tuple[FieldFunction, FieldFunction]], Optional[FieldFunction]]:
        """Initial-data functions per field and the background, random phases drawn in file order"""
        grid = self.make_grid()
        rng = np.random.default_rng(self.seed)
        pairs = [(f.tension.build(grid, rng), f.charge_current.build(grid, rng)) for f in self.fields]
        background = self.background.build(grid, rng) if self.background is not None else None
        return pairs, background

    def initial_system(self, tau: float = 0.0) -> InteractionSystem:
        grid = self.make_grid()
        pairs, background_fn = self.profile_functions()
        states = tuple(
            FieldState(BiqField.from_function(grid, A_fn, tau), BiqField.from_function(grid, T_fn, tau),
                       self.medium(k))
            for k, (A_fn, T_fn) in enumerate(pairs)
        )
        background = None
        if background_fn is not None:
            background = background_sampler(grid, background_fn)
        return InteractionSystem(states, self.kappa, tau, 0, background)


def background_sampler(grid: Grid, fn: FieldFunction) -> Callable[[float], np.ndarray]:
    coords = grid.coordinates()

    def at(tau: float) -> np.ndarray:
        return np.array(np.broadcast_to(fn(tau, *coords), (4,) + grid.shape), dtype=complex)
    return at


def _check_scenario(sc: Scenario):
    """Cross-field rules pydantic field validators cannot see"""
    h, extent = sc.grid.h, sc.grid.n * sc.grid.h
    if not (math.isfinite(sc.time_step) and 0 < sc.time_step <= h / 2):
        raise ScenarioError('dt', f"must satisfy 0 < dt <= h/2 = {h / 2}, got {sc.time_step}")
    if len(sc.media) not in (1, len(sc.fields)):
        raise ScenarioError('media', f"need 1 or {len(sc.fields)} entries, got {len(sc.media)}")
    if not sc.fields:
        raise ScenarioError('fields', "at least one field is required")
    if sc.kind == 'interact' and len(sc.fields) < 2:
        raise ScenarioError('fields', "interact needs at least two fields")
    if sc.kind == 'background' and sc.background is None:
        raise ScenarioError('background', "background scenarios need a background profile")
    if sc.kind == 'lorentz_check' and sc.boost is None:
        raise ScenarioError('boost', "lorentz_check needs a boost")
    if sc.order == 4 and sc.grid.n < 5:
        raise ScenarioError('order', "fourth order needs n >= 5")

    profiles = [(f"fields.{k}.{name}", getattr(f, name)) for k, f in enumerate(sc.fields)
                for name in ('tension', 'charge_current')]
    if sc.background is not None:
        profiles.append(('background', sc.background))
    for key, p in profiles:
        if p.kind == 'gaussian_bump' and 4.0 * p.width > extent / 2.0:
            raise ScenarioError(f"{key}.width", f"4 * width must fit in half the domain ({extent / 2})")
        if p.kind == 'circular_wave' and not any(p.mode):
            raise ScenarioError(f"{key}.mode", "circular wave needs a nonzero mode")


def parse_scenario(data: dict) -> Scenario:
    """Validate a decoded scenario mapping"""
    if not isinstance(data, dict):
        raise ScenarioError('<root>', "scenario must be a mapping")
    try:
        sc = Scenario.model_validate(data)
    except ValidationError as e:
        err = e.errors()[0]
        key = '.'.join(str(part) for part in err['loc']) or '<root>'
        raise ScenarioError(key, err['msg']) from e
    _check_scenario(sc)
    return sc


def load_scenario(path: Union[str, Path]) -> Scenario:
    """Read and validate a YAML scenario file"""
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text(encoding='utf-8'))
    except OSError as e:
        raise ScenarioError('<file>', f"cannot read {path}: {e}") from e
    except yaml.YAMLError as e:
        raise ScenarioError('<file>', f"invalid YAML in {path}: {e}") from e
    return parse_scenario(data)
