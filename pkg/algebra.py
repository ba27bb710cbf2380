"""
Biquaternion Algebra
Complex scalar + complex 3-vector values with the noncommutative product
(f + F) o (g + G) = (fg - (F,G)) + (fG + gF + [F,G]),
complex and quaternion conjugations, scalar product, norm and pseudonorm.

Two layers share one arithmetic:
- array kernels (`qmul`, `qconj_complex`, `qconj_quat`) work on complex
  arrays of shape (4, ...) where index 0 is the scalar part and 1..3 the
  vector part; fields and batteries use them directly
- `Biquaternion` is the immutable single value built on the same kernels
"""
import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence, Union

import numpy as np

Number = Union[int, float, complex]


# ---------------------------------------------------------------------------
# Array kernels
# ---------------------------------------------------------------------------

def dot3(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Bilinear (non-conjugating) dot product over the leading axis of 3"""
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


def cross3(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Cross product over the leading axis of 3"""
    return np.stack([
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ])


def qmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """
    Biquaternion product of component arrays

    Args:
        a: complex array, shape (4, ...)
        b: complex array broadcastable against a

    Returns:
        a o b with shape (4, ...)
    """
    a = np.asarray(a)
    b = np.asarray(b)
    f, F = a[0], a[1:]
    g, G = b[0], b[1:]
    scalar = f * g - dot3(F, G)
    vec = f * G + g * F + cross3(F, G)
    return np.concatenate([scalar[np.newaxis], vec])


def qconj_complex(a: np.ndarray) -> np.ndarray:
    """Componentwise complex conjugate"""
    return np.conj(a)


def qconj_quat(a: np.ndarray) -> np.ndarray:
    """Quaternion conjugate f̄ - F̄"""
    out = np.conj(a)
    out[1:] *= -1
    return out


def qscalar_product(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """f1 f2 + (F1, F2) without conjugation"""
    return a[0] * b[0] + dot3(a[1:], b[1:])


def qnorm_sq(a: np.ndarray) -> np.ndarray:
    """|f|^2 + ||F||^2 with conjugating vector norm"""
    return np.sum(np.abs(a) ** 2, axis=0)


def qpseudonorm_sq(a: np.ndarray) -> np.ndarray:
    """|f|^2 - ||F||^2 (real, may be negative)"""
    return np.abs(a[0]) ** 2 - np.sum(np.abs(a[1:]) ** 2, axis=0)


# ---------------------------------------------------------------------------
# Value types
# ---------------------------------------------------------------------------

def _finite_complex(value: Number, name: str) -> complex:
    z = complex(value)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise ValueError(f"{name} must be finite, got {z}")
    return z


@dataclass(frozen=True)
class Vec3C:
    """Complex 3-vector"""
    x: complex = 0j
    y: complex = 0j
    z: complex = 0j

    def __post_init__(self):
        for name in ('x', 'y', 'z'):
            object.__setattr__(self, name, _finite_complex(getattr(self, name), name))

    @classmethod
    def from_iterable(cls, values: Iterable[Number]) -> 'Vec3C':
        x, y, z = values
        return cls(x, y, z)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=complex)


@dataclass(frozen=True)
class Biquaternion:
    """Value f + F with complex scalar f and complex vector F"""
    s: complex = 0j
    v: Vec3C = Vec3C()

    def __post_init__(self):
        object.__setattr__(self, 's', _finite_complex(self.s, 's'))
        if not isinstance(self.v, Vec3C):
            object.__setattr__(self, 'v', Vec3C.from_iterable(self.v))

    # construction -----------------------------------------------------
    @classmethod
    def from_array(cls, arr: Sequence[Number]) -> 'Biquaternion':
        arr = np.asarray(arr, dtype=complex)
        if arr.shape != (4,):
            raise ValueError(f"expected 4 components, got shape {arr.shape}")
        return cls(complex(arr[0]), Vec3C(complex(arr[1]), complex(arr[2]), complex(arr[3])))

    def as_array(self) -> np.ndarray:
        return np.array([self.s, self.v.x, self.v.y, self.v.z], dtype=complex)

    @property
    def vector(self) -> np.ndarray:
        return self.v.as_array()

    # arithmetic -------------------------------------------------------
    def __add__(self, other: 'Biquaternion') -> 'Biquaternion':
        if not isinstance(other, Biquaternion):
            return NotImplemented
        return Biquaternion.from_array(self.as_array() + other.as_array())

    def __sub__(self, other: 'Biquaternion') -> 'Biquaternion':
        if not isinstance(other, Biquaternion):
            return NotImplemented
        return Biquaternion.from_array(self.as_array() - other.as_array())

    def __neg__(self) -> 'Biquaternion':
        return Biquaternion.from_array(-self.as_array())

    def __mul__(self, other):
        if isinstance(other, Biquaternion):
            return mul(self, other)
        if isinstance(other, (int, float, complex)):
            return Biquaternion.from_array(self.as_array() * other)
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, (int, float, complex)):
            return Biquaternion.from_array(self.as_array() * other)
        return NotImplemented


class Norms(NamedTuple):
    """Norm and squared pseudonorm of a biquaternion"""
    norm: float
    pseudonorm_sq: float


ZERO = Biquaternion()
ONE = Biquaternion(1)


def scalar(value: Number) -> Biquaternion:
    return Biquaternion(value)


def vector(x: Number = 0, y: Number = 0, z: Number = 0) -> Biquaternion:
    return Biquaternion(0, Vec3C(x, y, z))


def unit(k: int) -> Biquaternion:
    """Pure real unit vector e_k, k in {1, 2, 3}"""
    comps = [0, 0, 0]
    comps[k - 1] = 1
    return vector(*comps)


def event(tau: float, x: Sequence[float]) -> Biquaternion:
    """Spacetime point Z = tau + i x"""
    x = np.asarray(x, dtype=float)
    return Biquaternion(tau, Vec3C(1j * x[0], 1j * x[1], 1j * x[2]))


def hyperbolic_factor(theta: float, e: Sequence[float]) -> Biquaternion:
    """U = cosh(theta) + i e sinh(theta)"""
    e = np.asarray(e, dtype=float)
    sh = math.sinh(theta)
    return Biquaternion(math.cosh(theta), Vec3C(*(1j * sh * e)))


def rotation_factor(phi: float, e: Sequence[float]) -> Biquaternion:
    """W = cos(phi) + e sin(phi)"""
    e = np.asarray(e, dtype=float)
    return Biquaternion(math.cos(phi), Vec3C(*(math.sin(phi) * e)))


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------

def mul(a: Biquaternion, b: Biquaternion) -> Biquaternion:
    """Noncommutative biquaternion product a o b"""
    return Biquaternion.from_array(qmul(a.as_array(), b.as_array()))


def conj_complex(a: Biquaternion) -> Biquaternion:
    """Complex conjugate: every component conjugated"""
    return Biquaternion.from_array(qconj_complex(a.as_array()))


def conj_quat(a: Biquaternion) -> Biquaternion:
    """Quaternion conjugate F* = f̄ - F̄"""
    return Biquaternion.from_array(qconj_quat(a.as_array()))


def is_selfconjugate(a: Biquaternion, tol: float = 0.0) -> bool:
    """True when F* = F (to the given absolute tolerance)"""
    diff = qconj_quat(a.as_array()) - a.as_array()
    return bool(np.max(np.abs(diff)) <= tol)


def scalar_product(a: Biquaternion, b: Biquaternion) -> complex:
    """Bilinear scalar product f1 f2 + (F1, F2)"""
    return complex(qscalar_product(a.as_array(), b.as_array()))


def norms(a: Biquaternion) -> Norms:
    """
    Norm and squared pseudonorm

    The pseudonorm is reported as its square so that light-cone and
    space-like values stay real.
    """
    arr = a.as_array()
    return Norms(float(math.sqrt(qnorm_sq(arr))), float(qpseudonorm_sq(arr)))


def magnitude(*values: Biquaternion) -> float:
    """Largest component modulus, used to scale relative tolerances"""
    return max((float(np.max(np.abs(v.as_array()))) for v in values), default=0.0)


def isclose(a: Biquaternion, b: Biquaternion, rel_tol: float = 1e-12, scale: float = None) -> bool:
    """Componentwise |a - b| <= rel_tol * (1 + scale)"""
    if scale is None:
        scale = magnitude(a, b)
    return bool(np.max(np.abs(a.as_array() - b.as_array())) <= rel_tol * (1.0 + scale))
