from pathlib import Path
from typing import Any, Optional

from pydantic import Field, field_validator

from .annulus import Annulus, FlowConfig
from .base import FrozenModel
from .solver import SolveOptions

class GridSettings(FrozenModel):

    n_r: int = Field(default=32, ge=4)
    n_z: int = Field(default=32, ge=4)
    # None resolves to 2 * (R2 - R1)
    z_period: Optional[float] = Field(default=None, gt=0.0)
    n_theta: Optional[int] = Field(default=None, ge=4)

class SweepSettings(FrozenModel):

    omega_pairs: list[tuple[float, float]] = Field(default_factory=lambda: [(0.3, 0.1)])
    amplitudes: list[float] = Field(default_factory=lambda: [0.1])
    seeds: list[int] = Field(default_factory=lambda: [0])
    fit_axial: bool = True
    # used when grid.z_period is unset; must leave room for the cutoff ladder
    z_period: float = Field(default=4.0, ge=2.5)

    @field_validator("omega_pairs", "amplitudes", "seeds")
    @classmethod
    def validate_nonempty(cls, v: list[Any]) -> list[Any]:

        if not v:
            raise ValueError("Sweep lists must be nonempty")
        return v

    @field_validator("amplitudes")
    @classmethod
    def validate_amplitudes(cls, v: list[float]) -> list[float]:

        if any(a < 0.0 for a in v):
            raise ValueError("Perturbation amplitudes must be nonnegative")
        return v

class RunConfig(FrozenModel):

    annulus: Annulus
    flow: FlowConfig
    grid: GridSettings = Field(default_factory=GridSettings)
    solver: SolveOptions = Field(default_factory=SolveOptions)
    sweep: SweepSettings = Field(default_factory=SweepSettings)
    output_dir: Optional[Path] = None
    seed: int = 0

    def resolved_z_period(self, for_sweep: bool = False) -> float:

        if self.grid.z_period is not None:
            return self.grid.z_period
        if for_sweep:
            return self.sweep.z_period
        return 2.0 * self.annulus.gap
