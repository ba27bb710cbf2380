"""
Test helpers: periodic grids and analytic profiles
"""
import math

import numpy as np

from fields import Grid, SampleStack


def periodic_grid(n: int = 16, order: int = 2) -> Grid:
    """Cube of side 2 pi so sin/cos profiles are periodic"""
    return Grid(n, 2.0 * math.pi / n, order)


def stack_from(grid: Grid, fn, tau0: float = 0.0, dtau: float = 0.05, count: int = 3) -> SampleStack:
    return SampleStack.from_function(grid, fn, tau0, dtau, count)


def components(*parts):
    """Build a (4, ...) array from four broadcastable component arrays"""
    arrays = np.broadcast_arrays(*[np.asarray(p, dtype=complex) for p in parts])
    return np.stack(arrays)


def max_abs(arr) -> float:
    return float(np.max(np.abs(arr)))
