"""
Light-Cone Propagator
Generalized Kirchhoff solver for biwave equations nabla(+/-) K = G:

    4 pi K(tau, x) = nabla(-/+) { V_G(tau, x) + S_K0(tau, x) }

with the retarded volume potential V_G = int_{r <= tau} G(tau - r, y) / r dV
and the surface term S_K0 = tau^-1 int_{r = tau} K0(y) dS. The outer
bigradient is applied by central differences of the assembled integrals.
Also holds the free-field and Maxwell Cauchy formulas and the Picard
iteration for a charge-current field in a prescribed background.
"""
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, List, Optional, Tuple, Union

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import ndimage

from algebra import Biquaternion, qmul
from config import Config
from fields import BiqField, Grid, SampleStack, pointwise_bigradient, sign_factor
from utils.logger import logger

FOUR_PI = 4.0 * math.pi
HORIZON_SLACK = 1e-12


@dataclass(frozen=True)
class QuadratureSpec:
    """
    Quadrature resolution of the Kirchhoff integrals

    n_polar Gauss-Legendre nodes in cos(polar angle), n_azimuth trapezoid
    nodes in azimuth, radial_steps Gauss-Legendre nodes in r, and the
    central-difference step of the outer bigradient.
    """
    n_polar: int = 16
    n_azimuth: int = 32
    radial_steps: int = 16
    step: float = 0.02

    def __post_init__(self):
        if self.n_polar < 8:
            raise ValueError(f"n_polar must be >= 8, got {self.n_polar}")
        if self.n_azimuth < 16 or self.n_azimuth % 2:
            raise ValueError(f"n_azimuth must be even and >= 16, got {self.n_azimuth}")
        if self.radial_steps < 16:
            raise ValueError(f"radial_steps must be >= 16, got {self.radial_steps}")
        if not (math.isfinite(self.step) and self.step > 0):
            raise ValueError(f"step must be positive, got {self.step}")

    def sphere_rule(self) -> Tuple[np.ndarray, np.ndarray]:
        return _sphere_rule(self.n_polar, self.n_azimuth)

    def radial_rule(self) -> Tuple[np.ndarray, np.ndarray]:
        return _radial_rule(self.radial_steps)


@lru_cache(maxsize=16)
def _sphere_rule(n_polar: int, n_azimuth: int) -> Tuple[np.ndarray, np.ndarray]:
    """Unit directions (3, P) and weights (P,) summing to 4 pi"""
    mu, w_mu = leggauss(n_polar)
    azimuth = 2.0 * math.pi * np.arange(n_azimuth) / n_azimuth
    sin_polar = np.sqrt(1.0 - mu ** 2)
    dirs = np.stack([
        np.outer(sin_polar, np.cos(azimuth)),
        np.outer(sin_polar, np.sin(azimuth)),
        np.outer(mu, np.ones(n_azimuth)),
    ]).reshape(3, -1)
    weights = np.outer(w_mu, np.full(n_azimuth, 2.0 * math.pi / n_azimuth)).ravel()
    dirs.setflags(write=False)
    weights.setflags(write=False)
    return dirs, weights


@lru_cache(maxsize=16)
def _radial_rule(radial_steps: int) -> Tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on [0, 1]"""
    xi, w = leggauss(radial_steps)
    nodes, weights = 0.5 * (xi + 1.0), 0.5 * w
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


# ---------------------------------------------------------------------------
# Source samplers
# ---------------------------------------------------------------------------

class SourceSampler:
    """
    Evaluator (tau, points) -> biquaternion values

    tau is a scalar or an array broadcastable to points.shape[1:]; points
    has shape (3, ...); the result has shape (4, ...).
    """
    horizon: Optional[float] = None

    def __call__(self, tau, points: np.ndarray) -> np.ndarray:
        raise NotImplementedError


class AnalyticSampler(SourceSampler):
    """Sampler backed by fn(tau, x1, x2, x3) -> array broadcastable to (4, ...)"""

    def __init__(self, fn: Callable[..., np.ndarray], horizon: Optional[float] = None):
        self.fn = fn
        self.horizon = horizon

    def __call__(self, tau, points):
        points = np.asarray(points, dtype=float)
        tau = np.broadcast_to(np.asarray(tau, dtype=float), points.shape[1:])
        values = self.fn(tau, points[0], points[1], points[2])
        return np.array(np.broadcast_to(np.asarray(values, dtype=complex), (4,) + points.shape[1:]))


def constant_sampler(value: Union[Biquaternion, np.ndarray]) -> AnalyticSampler:
    arr = value.as_array() if isinstance(value, Biquaternion) else np.asarray(value, dtype=complex)
    arr = arr.reshape(4, 1)

    def fn(tau, x1, x2, x3):
        return arr.reshape((4,) + (1,) * np.ndim(x1))

    return AnalyticSampler(fn)


def trilinear(data: np.ndarray, grid: Grid, points: np.ndarray) -> np.ndarray:
    """Periodic trilinear interpolation of (C, n, n, n) data at points (3, ...)"""
    coords = np.asarray(points, dtype=float) / grid.h
    out = np.empty((data.shape[0],) + coords.shape[1:], dtype=complex)
    for c in range(data.shape[0]):
        re = ndimage.map_coordinates(data[c].real, coords, order=1, mode='grid-wrap')
        im = ndimage.map_coordinates(data[c].imag, coords, order=1, mode='grid-wrap')
        out[c] = re + 1j * im
    return out


def lagrange_weights(t, tau0: float, dtau: float, count: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Node indices and weights of the 4-point Lagrange stencil in time

    Stencils are clamped to the available slices, so queries outside the
    table extrapolate from its ends.

    Returns:
        (nodes, weights), each of shape (width,) + np.shape(t)
    """
    t = np.asarray(t, dtype=float)
    width = min(4, count)
    u = (t - tau0) / dtau
    start = np.clip(np.floor(u).astype(int) - (width // 2 - 1), 0, count - width)
    offsets = np.arange(width).reshape((width,) + (1,) * t.ndim)
    nodes = start[np.newaxis] + offsets
    weights = np.ones((width,) + t.shape)
    for j in range(width):
        for k in range(width):
            if k != j:
                weights[j] *= (u - (start + k)) / (j - k)
    return nodes, weights


class FieldSampler(SourceSampler):
    """Time-independent sampler over one gridded slice"""

    def __init__(self, f: BiqField):
        self.field = f
        self.horizon = None

    def __call__(self, tau, points):
        return trilinear(self.field.data, self.field.grid, points)


class StackSampler(SourceSampler):
    """Trilinear in space, 4-point Lagrange in time over a stored stack"""

    def __init__(self, stack: SampleStack):
        self.stack = stack
        self.horizon = float(stack.taus[-1])

    def __call__(self, tau, points):
        points = np.asarray(points, dtype=float)
        st = self.stack
        tau = np.broadcast_to(np.asarray(tau, dtype=float), points.shape[1:])
        nodes, weights = lagrange_weights(tau, st.tau0, st.dtau, len(st))
        out = np.zeros((4,) + points.shape[1:], dtype=complex)
        for j in np.unique(nodes):
            values = trilinear(st.slices[j].data, st.grid, points)
            w = np.where(nodes == j, weights, 0.0).sum(axis=0)
            out += w * values
        return out


# ---------------------------------------------------------------------------
# Pointwise Kirchhoff terms
# ---------------------------------------------------------------------------

def _as_points(x) -> Tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=float)
    if x.shape == (3,):
        return x.reshape(3, 1), True
    if x.ndim != 2 or x.shape[0] != 3:
        raise ValueError(f"points must have shape (3,) or (3, m), got {x.shape}")
    return x, False


def _single_or_batch(values: np.ndarray, single: bool):
    return Biquaternion.from_array(values[:, 0]) if single else values


def _check_tau(tau: float):
    if not (math.isfinite(tau) and tau > 0):
        raise ValueError(f"tau must be positive, got {tau}")


def _surface_term(K0: SourceSampler, x: np.ndarray, tau: float, q: QuadratureSpec) -> np.ndarray:
    """tau^-1 int_{|y - x| = tau} K0 dS = tau sum_p w_p K0(x + tau w_p)"""
    dirs, weights = q.sphere_rule()
    pts = x[:, :, np.newaxis] + tau * dirs[:, np.newaxis, :]
    values = K0(0.0, pts)
    return tau * np.einsum('cmp,p->cm', values, weights)


def _volume_term(G: SourceSampler, x: np.ndarray, tau: float, q: QuadratureSpec) -> np.ndarray:
    """int_{r <= tau} G(tau - r, y) / r dV in spherical shells about x"""
    dirs, weights = q.sphere_rule()
    nodes, w_r = q.radial_rule()
    r = tau * nodes
    radial = tau * w_r * r  # dr weight times r (r^2 / r)
    pts = x[:, :, np.newaxis, np.newaxis] + r[np.newaxis, np.newaxis, :, np.newaxis] * dirs[:, np.newaxis, np.newaxis, :]
    times = np.broadcast_to((tau - r)[np.newaxis, :, np.newaxis], pts.shape[1:])
    values = G(times, pts)
    return np.einsum('cmrp,r,p->cm', values, radial, weights)


def sphere_mean(K0: SourceSampler, x, tau: float, q: QuadratureSpec = QuadratureSpec()):
    """
    Surface term tau^-1 int_{r = tau} K0(y) dS(y)

    A constant c0 gives 4 pi tau c0. Returns a Biquaternion for a single
    point x of shape (3,), else an array (4, m).
    """
    _check_tau(tau)
    pts, single = _as_points(x)
    return _single_or_batch(_surface_term(K0, pts, tau, q), single)


def retarded_volume(G: SourceSampler, x, tau: float, q: QuadratureSpec = QuadratureSpec()):
    """
    Retarded volume potential int_{r <= tau} G(tau - r, y) / r dV(y)

    G = 1 gives 2 pi tau^2.
    """
    _check_tau(tau)
    pts, single = _as_points(x)
    return _single_or_batch(_volume_term(G, pts, tau, q), single)


def _check_horizon(tau: float, *samplers: Optional[SourceSampler]):
    for s in samplers:
        if s is not None and s.horizon is not None and tau > s.horizon + HORIZON_SLACK:
            raise ValueError(f"tau = {tau} outside sampler horizon {s.horizon}")


def solve_cauchy(G: Optional[SourceSampler], K0: SourceSampler, sign: str, x, tau: float,
                 q: QuadratureSpec = QuadratureSpec(), step: Optional[float] = None):
    """
    Solve nabla(sign) K = G with K(0, .) = K0 at the point(s) x

    Args:
        G: source sampler, None for the homogeneous equation
        K0: Cauchy data sampler
        sign: '+' or '-' of the equation; the outer operator has the other sign
        x: point (3,) or points (3, m)
        tau: evaluation time, 0 < tau <= horizon
        q: quadrature resolution
        step: outer difference step (defaults to q.step)

    Returns:
        Biquaternion for one point, (4, m) array otherwise. For tau below
        two difference steps the Cauchy datum is returned.
    """
    outer = '-' if sign_factor(sign) > 0 else '+'
    _check_tau(tau)
    _check_horizon(tau, G, K0)
    step = q.step if step is None else step
    pts, single = _as_points(x)

    if tau < 2.0 * step:
        return _single_or_batch(K0(0.0, pts), single)

    def assembled(t, p):
        total = _surface_term(K0, p, t, q)
        if G is not None:
            total = total + _volume_term(G, p, t, q)
        return total

    values = pointwise_bigradient(assembled, tau, pts, outer, step) / FOUR_PI
    return _single_or_batch(values, single)


def free_field_cauchy(Theta0: SourceSampler, x, tau: float, q: QuadratureSpec = QuadratureSpec(),
                      step: Optional[float] = None):
    """Free charge-current field: nabla- Theta = 0, Theta(0) = Theta0"""
    return solve_cauchy(None, Theta0, '-', x, tau, q, step)


def maxwell_cauchy(Theta: SourceSampler, A0: SourceSampler, x, tau: float,
                   q: QuadratureSpec = QuadratureSpec(), step: Optional[float] = None):
    """Tension from its sources: nabla+ A = Theta, A(0) = A0"""
    return solve_cauchy(Theta, A0, '+', x, tau, q, step)


# ---------------------------------------------------------------------------
# Gridded Kirchhoff terms
# ---------------------------------------------------------------------------

def _scatter_kernel(offsets: np.ndarray, weights: np.ndarray, grid: Grid,
                    slots: Optional[np.ndarray] = None, n_slots: int = 1) -> np.ndarray:
    """
    Correlation kernels reproducing trilinear sampling at fixed offsets

    Args:
        offsets: displacements in grid units, shape (3, N)
        weights: node weights (N,)
        slots: optional kernel index per node (for one kernel per time slice)
        n_slots: number of kernels

    Returns:
        (n_slots, k, k, k) kernels with odd k, center at displacement 0
    """
    base = np.floor(offsets).astype(int)
    frac = offsets - base
    radius = int(max(np.max(np.abs(base)), np.max(np.abs(base + 1)))) if offsets.size else 0
    if 2 * radius + 1 > grid.n:
        raise ValueError("light cone wider than the periodic box; shorten the horizon")
    size = 2 * radius + 1
    kernels = np.zeros((n_slots, size, size, size))
    slots = np.zeros(offsets.shape[1], dtype=int) if slots is None else slots
    for c1 in (0, 1):
        for c2 in (0, 1):
            for c3 in (0, 1):
                corner = np.array([c1, c2, c3]).reshape(3, 1)
                w = weights * np.prod(np.where(corner == 1, frac, 1.0 - frac), axis=0)
                idx = base + corner + radius
                np.add.at(kernels, (slots, idx[0], idx[1], idx[2]), w)
    return kernels


def _correlate(data: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    out = np.empty_like(data, dtype=complex)
    for c in range(data.shape[0]):
        out[c] = (ndimage.correlate(data[c].real, kernel, mode='wrap')
                  + 1j * ndimage.correlate(data[c].imag, kernel, mode='wrap'))
    return out


def _grid_assembled(G: Optional[SampleStack], K0: BiqField, t: float, shift: np.ndarray,
                    q: QuadratureSpec) -> np.ndarray:
    """V_G + S_K0 at every grid point displaced by shift (physical units)"""
    grid = K0.grid
    h = grid.h
    dirs, weights = q.sphere_rule()
    shift = shift.reshape(3, 1)

    surface = _scatter_kernel((t * dirs + shift) / h, t * weights, grid)[0]
    total = _correlate(K0.data, surface)
    if G is None:
        return total

    nodes, w_r = q.radial_rule()
    r = t * nodes
    radial = t * w_r * r
    lag_nodes, lag_weights = lagrange_weights(t - r, G.tau0, G.dtau, len(G))  # (width, R)
    width, R, P = lag_nodes.shape[0], r.size, weights.size
    offsets = (r[np.newaxis, :, np.newaxis] * dirs[:, np.newaxis, :] + shift[:, :, np.newaxis]) / h
    offsets = np.broadcast_to(offsets[:, np.newaxis], (3, width, R, P)).reshape(3, -1)
    node_weights = (lag_weights[:, :, np.newaxis] * radial[np.newaxis, :, np.newaxis]
                    * weights[np.newaxis, np.newaxis, :]).ravel()
    slots = np.broadcast_to(lag_nodes[:, :, np.newaxis], (width, R, P)).ravel()
    kernels = _scatter_kernel(offsets, node_weights, grid, slots, len(G))
    for j in np.unique(slots):
        total = total + _correlate(G.slices[j].data, kernels[j])
    return total


def solve_cauchy_on_grid(G: Optional[SampleStack], K0: BiqField, sign: str, tau: float,
                         q: QuadratureSpec = QuadratureSpec(), step: Optional[float] = None) -> BiqField:
    """
    Kirchhoff solution at every grid point by direct periodic correlation

    Same arithmetic as solve_cauchy with StackSampler(G) and FieldSampler(K0).
    """
    outer = '-' if sign_factor(sign) > 0 else '+'
    _check_tau(tau)
    if G is not None:
        _check_horizon(tau, StackSampler(G))
    step = q.step if step is None else step
    grid = K0.grid
    if tau < 2.0 * step:
        return BiqField(grid, K0.data.copy())

    def assembled(t, shift):
        return _grid_assembled(G, K0, t, shift, q).reshape(4, -1)

    values = pointwise_bigradient(assembled, tau, np.zeros((3, 1)), outer, step) / FOUR_PI
    return BiqField(grid, values.reshape((4,) + grid.shape))


# ---------------------------------------------------------------------------
# Picard iteration
# ---------------------------------------------------------------------------

@dataclass
class PicardResult:
    """Iterates tabulated on tau_j = j dtau and their successive differences"""
    grid: Grid
    dtau: float
    iterates: List[np.ndarray] = field(default_factory=list)  # each (T, 4, n, n, n)
    residuals: List[float] = field(default_factory=list)
    diverged: bool = False

    @property
    def final(self) -> SampleStack:
        return SampleStack.from_arrays(self.grid, list(self.iterates[-1]), 0.0, self.dtau)


def picard_transform(Theta0: BiqField, A_ext: SourceSampler, kappa: float, iters: int,
                     q: QuadratureSpec = QuadratureSpec(), dtau: Optional[float] = None,
                     slices: int = 3, step: Optional[float] = None) -> PicardResult:
    """
    Fixed-point iteration for kappa nabla- Theta = Theta o A_ext

    Theta^(0) is Theta0 at every tabulated time; each sweep solves
    nabla- Theta^(m+1) = kappa^-1 Theta^(m) o A_ext with Theta^(m+1)(0) = Theta0
    on the grid. Divergence (residual growing DIVERGENCE_WINDOW times in a
    row) stops the iteration and is reported, not raised.

    Args:
        Theta0: initial charge-current on the grid
        A_ext: prescribed background tension
        kappa: coupling constant
        iters: number of sweeps (>= 1)
        q: quadrature resolution
        dtau: table spacing (defaults to the grid spacing)
        slices: number of tabulated times (odd, >= 3)
        step: outer difference step (defaults to min(h, dtau) / 2)

    Returns:
        PicardResult
    """
    if iters < 1:
        raise ValueError(f"iters must be >= 1, got {iters}")
    if not (math.isfinite(kappa) and kappa != 0):
        raise ValueError(f"kappa must be finite and nonzero, got {kappa}")
    grid = Theta0.grid
    dtau = grid.h if dtau is None else dtau
    step = min(grid.h, dtau) / 2.0 if step is None else step
    taus = dtau * np.arange(slices)
    _check_horizon(float(taus[-1]), A_ext)

    points = grid.points()
    background = [A_ext(np.full(points.shape[1], t), points).reshape((4,) + grid.shape) for t in taus]

    current = np.stack([Theta0.data] * slices)
    result = PicardResult(grid, dtau, [current])
    growth = 0
    for m in range(iters):
        G = SampleStack.from_arrays(grid, [qmul(current[j], background[j]) / kappa for j in range(slices)],
                                    0.0, dtau)
        nxt = np.stack([Theta0.data] + [
            solve_cauchy_on_grid(G, Theta0, '-', float(t), q, step).data for t in taus[1:]
        ])
        residual = float(np.max(np.abs(nxt - current)))
        result.iterates.append(nxt)
        result.residuals.append(residual)
        logger.info(f"Picard sweep {m + 1}/{iters}: residual {residual:.3e}")

        growth = growth + 1 if len(result.residuals) > 1 and residual > result.residuals[-2] else 0
        if growth >= Config.DIVERGENCE_WINDOW:
            result.diverged = True
            logger.warning(f"Picard iteration diverging after {m + 1} sweeps "
                           f"(residual grew {growth} times in a row)")
            break
        current = nxt
    return result
