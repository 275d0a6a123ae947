import math
from typing import Literal

from loguru import logger

from ..models import Annulus, FlowConfig, NonDimensional, Thresholds

Wall = Literal["inner", "outer"]

class ThresholdService:

    def non_dimensional(self, annulus: Annulus, config: FlowConfig) -> NonDimensional:

        eta = annulus.r_inner / annulus.r_outer
        mu = None if config.omega_inner == 0.0 else config.omega_outer / config.omega_inner
        return NonDimensional(eta=eta, mu=mu)

    def poincare_constant(self, annulus: Annulus) -> float:

        r1, r2 = annulus.r_inner, annulus.r_outer
        return r2 * (r2 - r1) ** 2 / (r1 * math.pi**2)

    def threshold_c1(self, nu: float, annulus: Annulus) -> float:

        self.check_viscosity(nu)
        return nu / (2.0 * math.sqrt(self.poincare_constant(annulus)))

    def threshold_c2(self, nu: float, annulus: Annulus) -> float:

        self.check_viscosity(nu)
        c_p = self.poincare_constant(annulus)
        r1 = annulus.r_inner
        return nu / (math.sqrt(c_p) * (2.0 + c_p / r1**2) + 3.0 * c_p / (2.0 * r1))

    def reynolds(self, nu: float, annulus: Annulus, omega: float, which: Wall) -> float:

        self.check_viscosity(nu)
        if which == "inner":
            radius = annulus.r_inner
        elif which == "outer":
            radius = annulus.r_outer
        else:
            raise ValueError(f"Unknown wall: {which}")
        return radius * omega * annulus.gap / nu

    def reynolds_bound(self, annulus: Annulus) -> float:

        return math.pi * math.sqrt(annulus.r_inner) / (2.0 * math.sqrt(annulus.r_outer))

    def thresholds(self, nu: float, annulus: Annulus) -> Thresholds:

        c1 = self.threshold_c1(nu, annulus)
        c2 = self.threshold_c2(nu, annulus)
        result = Thresholds(
            c_p=self.poincare_constant(annulus),
            c1=c1,
            c2=c2,
            c_star=min(c1, c2),
            re_bound=self.reynolds_bound(annulus),
        )
        logger.debug(
            f"Thresholds for nu={nu}, {annulus!r}: C_P={result.c_p:.6g}, "
            f"C1={result.c1:.6g}, C2={result.c2:.6g}, C*={result.c_star:.6g}"
        )
        return result

    def wall_speed(self, annulus: Annulus, config: FlowConfig) -> float:

        return max(
            annulus.r_inner * abs(config.omega_inner),
            annulus.r_outer * abs(config.omega_outer),
        )

    def max_reynolds(self, annulus: Annulus, config: FlowConfig) -> float:

        nu = config.viscosity
        return max(
            abs(self.reynolds(nu, annulus, config.omega_inner, "inner")),
            abs(self.reynolds(nu, annulus, config.omega_outer, "outer")),
        )

    def satisfies_rotation_hypothesis(
        self,
        annulus: Annulus,
        config: FlowConfig,
        bound: float
    ) -> bool:

        return self.wall_speed(annulus, config) < bound

    def satisfies_velocity_hypothesis(self, velocity_linf: float, bound: float) -> bool:

        return velocity_linf < bound

    def check_viscosity(self, nu: float) -> None:

        if not nu > 0.0:
            raise ValueError(f"Viscosity must be positive, got {nu}")
