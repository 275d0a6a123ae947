from typing import Optional

from pydantic import Field, model_validator

from .base import FrozenModel

class Annulus(FrozenModel):

    r_inner: float = Field(gt=0.0, description="Inner cylinder radius R1")
    r_outer: float = Field(gt=0.0, description="Outer cylinder radius R2")

    @model_validator(mode="after")
    def validate_ordering(self) -> "Annulus":

        if not self.r_inner < self.r_outer:
            raise ValueError(
                f"Annulus requires 0 < r_inner < r_outer, got {self.r_inner} and {self.r_outer}"
            )
        return self

    @property
    def gap(self) -> float:
        return self.r_outer - self.r_inner

    def __repr__(self) -> str:
        return f"<Annulus(R1={self.r_inner}, R2={self.r_outer})>"

class FlowConfig(FrozenModel):

    viscosity: float = Field(gt=0.0, description="Kinematic viscosity nu")
    omega_inner: float = Field(default=0.0, description="Inner wall angular velocity")
    omega_outer: float = Field(default=0.0, description="Outer wall angular velocity")

    def wall_speeds(self, annulus: Annulus) -> tuple[float, float]:

        return annulus.r_inner * self.omega_inner, annulus.r_outer * self.omega_outer

    def negated(self) -> "FlowConfig":

        return self.model_copy(
            update={"omega_inner": -self.omega_inner, "omega_outer": -self.omega_outer}
        )

class NonDimensional(FrozenModel):

    eta: float = Field(gt=0.0, lt=1.0)
    # absent when the inner wall is at rest
    mu: Optional[float] = None

class Thresholds(FrozenModel):

    c_p: float = Field(gt=0.0)
    c1: float = Field(gt=0.0)
    c2: float = Field(gt=0.0)
    c_star: float = Field(gt=0.0)
    re_bound: float = Field(gt=0.0)

    @model_validator(mode="after")
    def validate_c_star(self) -> "Thresholds":

        if self.c_star != min(self.c1, self.c2):
            raise ValueError("c_star must equal min(c1, c2)")
        return self
