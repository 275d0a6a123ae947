from pydantic import Field, model_validator

from .annulus import Annulus
from .base import FrozenModel

class TCCoefficients(FrozenModel):

    a_coef: float = Field(description="A, angular-velocity coefficient of r")
    b_coef: float = Field(description="B, circulation-like coefficient of 1/r")
    annulus: Annulus

    def wall_speeds(self) -> tuple[float, float]:

        r1, r2 = self.annulus.r_inner, self.annulus.r_outer
        return self.a_coef * r1 + self.b_coef / r1, self.a_coef * r2 + self.b_coef / r2

    def scaled(self, factor: float) -> "TCCoefficients":

        return self.model_copy(
            update={"a_coef": factor * self.a_coef, "b_coef": factor * self.b_coef}
        )

class GeneralizedTC(FrozenModel):

    coeffs: TCCoefficients
    axial_gradient: float = Field(default=0.0, description="a, imposed dp/dz")
    pressure_offset: float = Field(default=0.0, description="b, additive pressure constant")
    annulus: Annulus
    viscosity: float = Field(gt=0.0)

    @model_validator(mode="after")
    def validate_annulus(self) -> "GeneralizedTC":

        if self.coeffs.annulus != self.annulus:
            raise ValueError("Coefficients were determined on a different annulus")
        return self

    @property
    def is_canonical(self) -> bool:
        return self.axial_gradient == 0.0

    def __repr__(self) -> str:
        return (
            f"<GeneralizedTC(A={self.coeffs.a_coef}, B={self.coeffs.b_coef}, "
            f"a={self.axial_gradient}, b={self.pressure_offset})>"
        )
