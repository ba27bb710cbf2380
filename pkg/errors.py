"""
Exception hierarchy for the EGM field simulator
Validation problems are ValueErrors, runtime failures are SimulationErrors
"""
from typing import Optional, Tuple


class ScenarioError(ValueError):
    """Invalid scenario configuration (names the failing key)"""

    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"{key}: {message}")


class GridMismatchError(ValueError):
    """Operands live on different grids"""


class StackError(ValueError):
    """Sample stack too short or inconsistent for the requested operator"""


class SimulationError(RuntimeError):
    """Runtime failure while evolving or evaluating fields"""


class StabilityError(SimulationError):
    """Time step violates the dt <= h/2 bound"""


class NonFiniteError(SimulationError):
    """NaN or Inf detected in a field"""

    def __init__(self, field: str, index: Optional[Tuple[int, ...]] = None,
                 step: Optional[int] = None):
        self.field = field
        self.index = index
        self.step = step
        where = f" at grid index {index}" if index is not None else ""
        when = f" (step {step})" if step is not None else ""
        super().__init__(f"non-finite value in {field}{where}{when}")
