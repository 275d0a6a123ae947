import math
from typing import Union

import numpy as np
from loguru import logger

from ..models import (
    Annulus,
    Field,
    FlowConfig,
    GeneralizedTC,
    Grid,
    PressureField,
    TCCoefficients,
)
from .threshold_service import ThresholdService

Radius = Union[float, np.ndarray]

class ExactFlowService:
    """Closed forms of the canonical and generalized Taylor-Couette flows."""

    def __init__(self, threshold_service: ThresholdService):
        self.threshold_service = threshold_service

    def tc_coefficients(self, annulus: Annulus, config: FlowConfig) -> TCCoefficients:

        r1sq, r2sq = annulus.r_inner**2, annulus.r_outer**2
        w1, w2 = config.omega_inner, config.omega_outer
        denom = r2sq - r1sq
        return TCCoefficients(
            a_coef=(r2sq * w2 - r1sq * w1) / denom,
            b_coef=r1sq * r2sq * (w1 - w2) / denom,
            annulus=annulus,
        )

    def tc_coefficients_nondimensional(
        self,
        annulus: Annulus,
        config: FlowConfig
    ) -> TCCoefficients:

        nd = self.threshold_service.non_dimensional(annulus, config)
        eta2 = nd.eta**2
        r1sq = annulus.r_inner**2
        if nd.mu is None:
            w2 = config.omega_outer
            a_coef = w2 / (1.0 - eta2)
            b_coef = -w2 * r1sq / (1.0 - eta2)
        else:
            w1 = config.omega_inner
            a_coef = (nd.mu - eta2) / (1.0 - eta2) * w1
            b_coef = (1.0 - nd.mu) / (1.0 - eta2) * w1 * r1sq
        return TCCoefficients(a_coef=a_coef, b_coef=b_coef, annulus=annulus)

    def generalized(
        self,
        annulus: Annulus,
        config: FlowConfig,
        axial_gradient: float = 0.0,
        pressure_offset: float = 0.0
    ) -> GeneralizedTC:

        return GeneralizedTC(
            coeffs=self.tc_coefficients(annulus, config),
            axial_gradient=axial_gradient,
            pressure_offset=pressure_offset,
            annulus=annulus,
            viscosity=config.viscosity,
        )

    def eval_vtheta(self, coeffs: TCCoefficients, r: Radius) -> Radius:

        self._check_radius(coeffs.annulus, r)
        return coeffs.a_coef * r + coeffs.b_coef / r

    def eval_vz(self, gtc: GeneralizedTC, r: Radius) -> Radius:

        self._check_radius(gtc.annulus, r)
        r1, r2 = gtc.annulus.r_inner, gtc.annulus.r_outer
        slope = (r2**2 - r1**2) / math.log(r2 / r1)
        return gtc.axial_gradient / (4.0 * gtc.viscosity) * (
            (r * r - r1**2) - slope * np.log(r / r1)
        )

    def eval_vz_nondimensional(self, gtc: GeneralizedTC, r: Radius) -> Radius:

        self._check_radius(gtc.annulus, r)
        r1 = gtc.annulus.r_inner
        eta = r1 / gtc.annulus.r_outer
        ratio = r / r1
        return gtc.axial_gradient / (4.0 * gtc.viscosity) * r1**2 * (
            ratio * ratio - 1.0 + (1.0 - eta**2) / (eta**2 * math.log(eta)) * np.log(ratio)
        )

    def vz_basis(self, annulus: Annulus, nu: float, r: Radius) -> Radius:
        """Annular Poiseuille profile per unit axial gradient."""

        unit = GeneralizedTC(
            coeffs=TCCoefficients(a_coef=0.0, b_coef=0.0, annulus=annulus),
            axial_gradient=1.0,
            annulus=annulus,
            viscosity=nu,
        )
        return self.eval_vz(unit, r)

    def eval_pressure(self, gtc: GeneralizedTC, r: Radius, z: Radius) -> Radius:

        return gtc.axial_gradient * z + self.eval_radial_pressure(gtc, r)

    def eval_radial_pressure(self, gtc: GeneralizedTC, r: Radius) -> Radius:
        """Pressure without the a*z part: b + h(r)."""

        self._check_radius(gtc.annulus, r)
        a_coef, b_coef = gtc.coeffs.a_coef, gtc.coeffs.b_coef
        return (
            gtc.pressure_offset
            + 0.5 * a_coef**2 * r * r
            + 2.0 * a_coef * b_coef * np.log(r)
            - 0.5 * b_coef**2 / (r * r)
        )

    def sample_on_grid(self, gtc: GeneralizedTC, grid: Grid) -> tuple[Field, PressureField]:

        if grid.annulus != gtc.annulus:
            raise ValueError(
                f"Grid annulus {grid.annulus!r} does not match flow annulus {gtc.annulus!r}"
            )

        r_c = grid.r_centers
        v_theta = np.broadcast_to(
            grid.radial(self.eval_vtheta(gtc.coeffs, r_c)), grid.cell_shape
        ).copy()
        v_z = np.broadcast_to(grid.radial(self.eval_vz(gtc, r_c)), grid.cell_shape).copy()
        p = np.broadcast_to(
            grid.radial(self.eval_radial_pressure(gtc, r_c)), grid.cell_shape
        ).copy()

        field = Field(
            v_r=np.zeros(grid.face_shape),
            v_theta=v_theta,
            v_z=v_z,
            grid=grid,
            theta_walls=gtc.coeffs.wall_speeds(),
        )
        pressure = PressureField(
            p=p,
            grid=grid,
            axial_gradient=gtc.axial_gradient,
            gauge="closed_form",
        )
        logger.debug(f"Sampled {gtc!r} on {grid!r}")
        return field, pressure

    def _check_radius(self, annulus: Annulus, r: Radius) -> None:

        values = np.atleast_1d(np.asarray(r, dtype=float))
        slack = 1e-12 * annulus.r_outer
        if np.any(values < annulus.r_inner - slack) or np.any(values > annulus.r_outer + slack):
            raise ValueError(
                f"Radius outside annulus [{annulus.r_inner}, {annulus.r_outer}]"
            )
