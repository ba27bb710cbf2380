"""
Biquaternion Fields
Periodic Cartesian grids of biquaternion fields and the discrete operators
acting on them: grad, div, rot, d/dtau, the mutual bigradients and the wave
operator. Also owns the BQF1 binary dump format.

Array layout: a field is a complex array of shape (4, n, n, n); index 0 is
the scalar part, 1..3 the vector part, spatial axes are (x1, x2, x3) with
x_i = i * h. Stacks add a leading time axis.
"""
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Any, Callable, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import ndimage

from config import Config
from errors import GridMismatchError, StackError

# (shift, coefficient) pairs of the antisymmetric first-derivative stencils
_FIRST = {
    2: ((1, 0.5),),
    4: ((1, 2.0 / 3.0), (2, -1.0 / 12.0)),
}
# center coefficient and symmetric (shift, coefficient) pairs
_SECOND = {
    2: (-2.0, ((1, 1.0),)),
    4: (-2.5, ((1, 4.0 / 3.0), (2, -1.0 / 12.0))),
}

FieldFunction = Callable[..., np.ndarray]


def stencil_reach(order: int) -> int:
    """Points on each side used by the central stencil of this order"""
    if order not in _FIRST:
        raise ValueError(f"stencil order must be 2 or 4, got {order}")
    return order // 2


def sign_factor(sign: str) -> int:
    """Map a bigradient sign '+' / '-' to +1 / -1"""
    if sign == '+':
        return 1
    if sign in ('-', '−'):
        return -1
    raise ValueError(f"bigradient sign must be '+' or '-', got {sign!r}")


@dataclass(frozen=True)
class Grid:
    """Uniform periodic cube with n points per axis and spacing h"""
    n: int
    h: float
    order: int = Config.DEFAULT_ORDER

    def __post_init__(self):
        if int(self.n) != self.n or self.n < Config.MIN_GRID_POINTS:
            raise ValueError(f"grid needs n >= {Config.MIN_GRID_POINTS}, got {self.n}")
        if not (np.isfinite(self.h) and self.h > 0):
            raise ValueError(f"grid spacing must be positive, got {self.h}")
        if self.n < 2 * stencil_reach(self.order) + 1:
            raise ValueError(f"grid too small for stencil order {self.order}")
        object.__setattr__(self, 'n', int(self.n))
        object.__setattr__(self, 'h', float(self.h))

    @property
    def extent(self) -> float:
        return self.n * self.h

    @property
    def shape(self) -> Tuple[int, int, int]:
        return (self.n, self.n, self.n)

    @property
    def cell_volume(self) -> float:
        return self.h ** 3

    def coordinates(self) -> np.ndarray:
        """Coordinate array of shape (3, n, n, n)"""
        axis = np.arange(self.n) * self.h
        return np.stack(np.meshgrid(axis, axis, axis, indexing='ij'))

    def points(self) -> np.ndarray:
        """Flattened coordinates, shape (3, n**3), x1 slowest"""
        return self.coordinates().reshape(3, -1)


def check_same_grid(*grids: Grid):
    first = grids[0]
    for other in grids[1:]:
        if other != first:
            raise GridMismatchError(f"grid mismatch: {first} vs {other}")


def first_nonfinite(data: np.ndarray) -> Optional[Tuple[int, ...]]:
    """Index of the first NaN/Inf entry, or None"""
    bad = ~np.isfinite(data)
    if not bad.any():
        return None
    return tuple(int(i) for i in np.argwhere(bad)[0])


@dataclass(frozen=True, eq=False)
class BiqField:
    """Spatial slice of a biquaternion field on a grid"""
    grid: Grid
    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=complex)
        if data.shape != (4,) + self.grid.shape:
            raise ValueError(f"field data must have shape {(4,) + self.grid.shape}, got {data.shape}")
        index = first_nonfinite(data)
        if index is not None:
            raise ValueError(f"field has non-finite entry at {index}")
        object.__setattr__(self, 'data', data)

    @classmethod
    def zeros(cls, grid: Grid) -> 'BiqField':
        return cls(grid, np.zeros((4,) + grid.shape, dtype=complex))

    @classmethod
    def from_parts(cls, grid: Grid, scalar=0.0, vector=None) -> 'BiqField':
        """Build from a scalar field and a (3, n, n, n) vector field (either may be constant)"""
        data = np.zeros((4,) + grid.shape, dtype=complex)
        data[0] = scalar
        if vector is not None:
            vector = np.asarray(vector, dtype=complex)
            if vector.ndim == 1:
                vector = vector.reshape(3, 1, 1, 1)
            data[1:] = vector
        return cls(grid, data)

    @classmethod
    def from_function(cls, grid: Grid, fn: FieldFunction, tau: float = 0.0) -> 'BiqField':
        """Sample fn(tau, x1, x2, x3) -> array broadcastable to (4, n, n, n)"""
        x1, x2, x3 = grid.coordinates()
        values = np.broadcast_to(np.asarray(fn(tau, x1, x2, x3), dtype=complex), (4,) + grid.shape)
        return cls(grid, np.array(values))

    @property
    def scalar(self) -> np.ndarray:
        return self.data[0]

    @property
    def vector(self) -> np.ndarray:
        return self.data[1:]

    def __add__(self, other: 'BiqField') -> 'BiqField':
        check_same_grid(self.grid, other.grid)
        return BiqField(self.grid, self.data + other.data)

    def __sub__(self, other: 'BiqField') -> 'BiqField':
        check_same_grid(self.grid, other.grid)
        return BiqField(self.grid, self.data - other.data)

    def scaled(self, factor: complex) -> 'BiqField':
        return BiqField(self.grid, self.data * factor)

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.data)))

    def derived(self, key: str, compute: Callable[[], Any]) -> Any:
        """
        Quantity derived from this slice, computed on first use

        Slices are never written after construction, so the result is kept
        on the instance and handed out read-only.
        """
        store = self.__dict__.setdefault('_derived', {})
        if key not in store:
            value = compute()
            for arr in (value if isinstance(value, tuple) else (value,)):
                if isinstance(arr, np.ndarray):
                    arr.flags.writeable = False
            store[key] = value
        return store[key]


@dataclass(frozen=True, eq=False)
class SampleStack:
    """
    Odd-length window of field slices at tau_j = tau0 + j * dtau

    Three slices give the 3-point central d/dtau; five or more use the
    fourth-order 5-point stencil at the center slice.
    """
    slices: Tuple[BiqField, ...]
    tau0: float = 0.0
    dtau: float = 1.0

    def __post_init__(self):
        slices = tuple(self.slices)
        if len(slices) < 3:
            raise StackError(f"sample stack needs at least 3 slices, got {len(slices)}")
        if len(slices) % 2 == 0:
            raise StackError(f"sample stack needs an odd number of slices, got {len(slices)}")
        if not (np.isfinite(self.dtau) and self.dtau > 0):
            raise StackError(f"dtau must be positive, got {self.dtau}")
        check_same_grid(*(s.grid for s in slices))
        object.__setattr__(self, 'slices', slices)

    @classmethod
    def from_function(cls, grid: Grid, fn: FieldFunction, tau0: float, dtau: float,
                      count: int = 3) -> 'SampleStack':
        slices = [BiqField.from_function(grid, fn, tau0 + j * dtau) for j in range(count)]
        return cls(tuple(slices), tau0, dtau)

    @classmethod
    def from_arrays(cls, grid: Grid, arrays: Sequence[np.ndarray], tau0: float,
                    dtau: float) -> 'SampleStack':
        return cls(tuple(BiqField(grid, a) for a in arrays), tau0, dtau)

    @property
    def grid(self) -> Grid:
        return self.slices[0].grid

    def __len__(self) -> int:
        return len(self.slices)

    @property
    def center(self) -> int:
        return len(self.slices) // 2

    @property
    def center_tau(self) -> float:
        return self.tau0 + self.center * self.dtau

    @property
    def center_field(self) -> BiqField:
        return self.slices[self.center]

    @property
    def taus(self) -> np.ndarray:
        return self.tau0 + self.dtau * np.arange(len(self.slices))

    def data(self) -> np.ndarray:
        """All slices as one array of shape (T, 4, n, n, n)"""
        return np.stack([s.data for s in self.slices])

    def window(self, start: int, count: int) -> 'SampleStack':
        if start < 0 or start + count > len(self.slices):
            raise StackError(f"window [{start}, {start + count}) outside stack of {len(self.slices)}")
        return SampleStack(self.slices[start:start + count], self.tau0 + start * self.dtau, self.dtau)


def check_aligned(*stacks: SampleStack):
    """Stacks must share grid, length and time axis"""
    first = stacks[0]
    for other in stacks[1:]:
        check_same_grid(first.grid, other.grid)
        if len(other) != len(first) or other.tau0 != first.tau0 or other.dtau != first.dtau:
            raise StackError("sample stacks are not aligned in time")


# ---------------------------------------------------------------------------
# Stencils
# ---------------------------------------------------------------------------

def _spatial_axis(arr: np.ndarray, k: int) -> int:
    return arr.ndim - 3 + k


@lru_cache(maxsize=32)
def _first_weights(order: int, h: float) -> np.ndarray:
    """Antisymmetric correlation kernel of d/dx on spacing h"""
    reach = stencil_reach(order)
    weights = np.zeros(2 * reach + 1)
    for shift, coef in _FIRST[order]:
        weights[reach + shift] = coef / h
        weights[reach - shift] = -coef / h
    weights.flags.writeable = False
    return weights


@lru_cache(maxsize=32)
def _second_weights(order: int, h: float) -> np.ndarray:
    reach = stencil_reach(order)
    center, pairs = _SECOND[order]
    weights = np.zeros(2 * reach + 1)
    weights[reach] = center / h ** 2
    for shift, coef in pairs:
        weights[reach + shift] = weights[reach - shift] = coef / h ** 2
    weights.flags.writeable = False
    return weights


def _correlate(arr: np.ndarray, weights: np.ndarray, axis: int) -> np.ndarray:
    """Periodic 1-D correlation, real and imaginary parts filtered separately"""
    arr = np.asarray(arr)
    if not np.iscomplexobj(arr):
        return ndimage.correlate1d(arr.astype(float, copy=False), weights, axis=axis, mode='wrap')
    out = np.empty(arr.shape, dtype=complex)
    ndimage.correlate1d(arr.real, weights, axis=axis, output=out.real, mode='wrap')
    ndimage.correlate1d(arr.imag, weights, axis=axis, output=out.imag, mode='wrap')
    return out


def partial(arr: np.ndarray, k: int, grid: Grid) -> np.ndarray:
    """Central first derivative along x_{k+1} (k in 0..2) over the last three axes"""
    return _correlate(arr, _first_weights(grid.order, grid.h), _spatial_axis(np.asarray(arr), k))


def second_partial(arr: np.ndarray, k: int, grid: Grid) -> np.ndarray:
    return _correlate(arr, _second_weights(grid.order, grid.h), _spatial_axis(np.asarray(arr), k))


def gradient(s: np.ndarray, grid: Grid) -> np.ndarray:
    return np.stack([partial(s, k, grid) for k in range(3)])


def divergence(v: np.ndarray, grid: Grid) -> np.ndarray:
    return partial(v[0], 0, grid) + partial(v[1], 1, grid) + partial(v[2], 2, grid)


def curl(v: np.ndarray, grid: Grid) -> np.ndarray:
    return np.stack([
        partial(v[2], 1, grid) - partial(v[1], 2, grid),
        partial(v[0], 2, grid) - partial(v[2], 0, grid),
        partial(v[1], 0, grid) - partial(v[0], 1, grid),
    ])


def laplacian(arr: np.ndarray, grid: Grid) -> np.ndarray:
    return second_partial(arr, 0, grid) + second_partial(arr, 1, grid) + second_partial(arr, 2, grid)


def quaternion_derivative(data: np.ndarray, grid: Grid) -> np.ndarray:
    """
    Spatial quaternionic derivative D o F = (-div F) + (grad f + rot F)

    The bigradients are d/dtau +/- i D.
    """
    # d[k][c]: d/dx_{k+1} of component c, one pass per axis
    d = [partial(data, k, grid) for k in range(3)]
    out = np.empty(d[0].shape, dtype=complex)
    out[0] = -(d[0][1] + d[1][2] + d[2][3])
    out[1] = d[0][0] + (d[1][3] - d[2][2])
    out[2] = d[1][0] + (d[2][1] - d[0][3])
    out[3] = d[2][0] + (d[0][2] - d[1][1])
    return out


def field_derivative(f: BiqField) -> np.ndarray:
    """D o F of one slice, computed once per slice"""
    return f.derived('quaternion_derivative', lambda: quaternion_derivative(f.data, f.grid))


def time_derivative(values: Sequence[np.ndarray], dtau: float) -> np.ndarray:
    """Central d/dtau at the center of 3 or 5 equally spaced values"""
    if len(values) == 3:
        return (values[2] - values[0]) / (2.0 * dtau)
    if len(values) == 5:
        return (2.0 / 3.0 * (values[3] - values[1]) - (values[4] - values[0]) / 12.0) / dtau
    raise StackError(f"time stencil needs 3 or 5 values, got {len(values)}")


def second_time_derivative(values: Sequence[np.ndarray], dtau: float) -> np.ndarray:
    if len(values) == 3:
        return (values[2] - 2.0 * values[1] + values[0]) / dtau ** 2
    if len(values) == 5:
        return (-2.5 * values[2] + 4.0 / 3.0 * (values[3] + values[1])
                - (values[4] + values[0]) / 12.0) / dtau ** 2
    raise StackError(f"time stencil needs 3 or 5 values, got {len(values)}")


def centered_window(values: Sequence[np.ndarray]) -> List[np.ndarray]:
    """Center-aligned 5 values when available, else 3"""
    if len(values) < 3 or len(values) % 2 == 0:
        raise StackError(f"time window needs an odd count >= 3, got {len(values)}")
    width = 5 if len(values) >= 5 else 3
    start = len(values) // 2 - width // 2
    return list(values[start:start + width])


def center_derivative(values: Sequence[np.ndarray], dtau: float) -> np.ndarray:
    """d/dtau at the center of an odd-length sequence of equally spaced values"""
    return time_derivative(centered_window(values), dtau)


def stack_time_derivative(st: SampleStack) -> np.ndarray:
    """d/dtau of the stack at its center slice"""
    return center_derivative([s.data for s in st.slices], st.dtau)


# ---------------------------------------------------------------------------
# Operators
# ---------------------------------------------------------------------------

class SpatialDerivatives(NamedTuple):
    grad_s: np.ndarray
    div_v: np.ndarray
    curl_v: np.ndarray


def spatial_derivatives(f: BiqField) -> SpatialDerivatives:
    """
    Component operators of the bigradient

    Args:
        f: field on a periodic grid

    Returns:
        grad of the scalar part, div and rot of the vector part
    """
    grid = f.grid
    return SpatialDerivatives(gradient(f.scalar, grid), divergence(f.vector, grid), curl(f.vector, grid))


def bigradient(st: SampleStack, sign: str) -> BiqField:
    """
    Discrete mutual complex gradient at the center slice

    nabla(+/-) F = (d_tau f -/+ i div F) + (d_tau F +/- i grad f +/- i rot F)
    """
    s = sign_factor(sign)
    grid = st.grid
    out = stack_time_derivative(st) + s * 1j * field_derivative(st.center_field)
    return BiqField(grid, out)


def bigradient_stack(st: SampleStack, sign: str) -> SampleStack:
    """Bigradient on every interior 3-slice window; result is shorter by two slices"""
    if len(st) < 5:
        raise StackError(f"composing bigradients needs at least 5 slices, got {len(st)}")
    out = [bigradient(st.window(j - 1, 3), sign) for j in range(1, len(st) - 1)]
    return SampleStack(tuple(out), st.tau0 + st.dtau, st.dtau)


def wave_operator(st: SampleStack) -> BiqField:
    """Discrete d2/dtau2 - Laplacian at the center slice"""
    grid = st.grid
    values = centered_window([s.data for s in st.slices])
    out = second_time_derivative(values, st.dtau) - laplacian(st.center_field.data, grid)
    return BiqField(grid, out)


def composed_wave_operator(st: SampleStack, first: str = '+') -> BiqField:
    """Wave operator as the composition of the two bigradients over a 5-slice window"""
    second = '-' if sign_factor(first) > 0 else '+'
    inner = bigradient_stack(st.window(st.center - 2, 5), first)
    return bigradient(inner, second)


def pointwise_bigradient(evaluate: Callable[[float, np.ndarray], np.ndarray], tau: float,
                         points: np.ndarray, sign: str, step: float) -> np.ndarray:
    """
    Bigradient of a pointwise evaluator by central differences

    Args:
        evaluate: callable (tau, points (3, m)) -> values (4, m)
        tau: evaluation time
        points: target points, shape (3, m)
        sign: '+' or '-'
        step: difference step used in tau and every spatial direction

    Returns:
        complex array (4, m)
    """
    s = sign_factor(sign)
    points = np.asarray(points, dtype=float)
    d_tau = (evaluate(tau + step, points) - evaluate(tau - step, points)) / (2.0 * step)
    partials = []
    for k in range(3):
        offset = np.zeros((3, 1))
        offset[k] = step
        partials.append((evaluate(tau, points + offset) - evaluate(tau, points - offset)) / (2.0 * step))
    # partials[k][c] = d/dx_k of component c
    grad_s = np.stack([partials[k][0] for k in range(3)])
    div_v = partials[0][1] + partials[1][2] + partials[2][3]
    rot_v = np.stack([
        partials[1][3] - partials[2][2],
        partials[2][1] - partials[0][3],
        partials[0][2] - partials[1][1],
    ])
    out = np.array(d_tau, dtype=complex)
    out[0] += -s * 1j * div_v
    out[1:] += s * 1j * (grad_s + rot_v)
    return out


# ---------------------------------------------------------------------------
# BQF1 dumps
# ---------------------------------------------------------------------------

DUMP_MAGIC = b'BQF1'
DUMP_HEADER = np.dtype([
    ('magic', 'S4'),
    ('n', '<u4'),
    ('h', '<f8'),
    ('tau', '<f8'),
    ('order', '<u4'),
])


class FieldDump(NamedTuple):
    field: BiqField
    tau: float


def write_dump(path: Union[str, Path], field: BiqField, tau: float) -> Path:
    """
    Write one slice as a BQF1 dump

    Layout: packed header, then n**3 points x-fastest, each point as 8
    little-endian doubles (s.re, s.im, v.x.re, v.x.im, v.y.re, v.y.im,
    v.z.re, v.z.im).
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = np.array([(DUMP_MAGIC, field.grid.n, field.grid.h, tau, field.grid.order)], dtype=DUMP_HEADER)
    body = np.ascontiguousarray(field.data.transpose(3, 2, 1, 0), dtype='<c16')
    with open(path, 'wb') as f:
        f.write(header.tobytes())
        f.write(body.tobytes())
    return path


def read_dump(path: Union[str, Path]) -> FieldDump:
    raw = Path(path).read_bytes()
    if len(raw) < DUMP_HEADER.itemsize:
        raise ValueError(f"{path}: truncated BQF1 header")
    header = np.frombuffer(raw[:DUMP_HEADER.itemsize], dtype=DUMP_HEADER)[0]
    if bytes(header['magic']) != DUMP_MAGIC:
        raise ValueError(f"{path}: not a BQF1 dump")
    n = int(header['n'])
    body = np.frombuffer(raw[DUMP_HEADER.itemsize:], dtype='<c16')
    if body.size != 4 * n ** 3:
        raise ValueError(f"{path}: expected {4 * n ** 3} values, found {body.size}")
    grid = Grid(n, float(header['h']), int(header['order']))
    data = body.reshape(n, n, n, 4).transpose(3, 2, 1, 0).astype(complex)
    return FieldDump(BiqField(grid, data), float(header['tau']))
