import enum
from typing import Optional

from pydantic import Field as PydanticField

from .base import ArrayModel, FrozenModel
from .grid import Field, PressureField
from .report import ResidualReport

class SolveStatus(enum.Enum):

    CONVERGED = "converged"
    MAX_ITERATIONS = "max_iterations"
    SINGULAR_JACOBIAN = "singular_jacobian"

    def __str__(self) -> str:
        return self.value

class SolveOptions(FrozenModel):

    newton_tol: float = PydanticField(default=1e-10, gt=0.0)
    max_newton: int = PydanticField(default=50, ge=1)
    # None resolves to 0.1 * (R2 - R1)**2 / nu
    ptc_initial_dt: Optional[float] = PydanticField(default=None, gt=0.0)
    ptc_switch_ratio: float = PydanticField(default=1e-3, gt=0.0, lt=1.0)
    stokes_mode: bool = False
    imposed_axial_gradient: float = 0.0

class IterationRecord(FrozenModel):

    iteration: int
    residual_linf: float
    divergence_linf: float
    pseudo_time_step: Optional[float] = None

class SolveOutcome(ArrayModel):

    field: Field
    pressure: PressureField
    status: SolveStatus
    final_residual: ResidualReport
    newton_iterations: int
    history: list[IterationRecord] = []

    @property
    def converged(self) -> bool:
        return self.status is SolveStatus.CONVERGED
