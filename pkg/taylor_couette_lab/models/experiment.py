from typing import Literal

from pydantic import Field

from .annulus import Thresholds
from .base import FrozenModel
from .flow import GeneralizedTC

EnergyVariant = Literal["axial", "azimuthal"]

class CutoffSpec(FrozenModel):

    l_cut: float = Field(gt=1.0, description="Cutoff half-width L of phi_L")

class EnergyReport(FrozenModel):

    l_cut: float
    variant: EnergyVariant
    y_value: float = Field(ge=0.0)
    y_prime: float = Field(ge=0.0)
    terms: dict[str, float]
    prime_terms: dict[str, float]

class ManifoldFit(FrozenModel):

    fitted: GeneralizedTC
    distance_linf: float = Field(ge=0.0)
    distance_l2: float = Field(ge=0.0)
    canonical: bool

class ExperimentRecord(FrozenModel):

    omega_inner: float
    omega_outer: float
    amplitude: float
    seed: int
    reynolds_inner: float
    reynolds_outer: float
    wall_speed: float
    velocity_linf: float
    thresholds: Thresholds
    converged: bool
    newton_iterations: int
    manifold_distance: float
    distance_tolerance: float
    fitted_a: float
    y_max: float
    z_period: float
    in_hypothesis: bool
    on_manifold: bool

    @property
    def counterexample(self) -> bool:
        return self.converged and self.in_hypothesis and not self.on_manifold

class SweepSummary(FrozenModel):

    total: int
    converged: int
    on_manifold: int
    out_of_hypothesis: int
    counterexamples: int
