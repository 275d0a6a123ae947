import math
from typing import Optional

import numpy as np
from loguru import logger
from pydantic import ValidationError

from ..models import (
    Annulus,
    CutoffSpec,
    Field,
    Grid,
    PoincareReport,
    PressureField,
    ResidualArrays,
    ResidualReport,
)
from .cutoff import check_cutoff_fits, phi_l_values, strip_mask
from .threshold_service import ThresholdService

# Cubic extrapolation through the wall value and the three nearest cell
# values, evaluated half a cell beyond the wall.
GHOST_WEIGHTS = (16.0 / 5.0, -3.0, 1.0, -1.0 / 5.0)

POINCARE_SLACK = 5.0
WALL_TRACE_TOLERANCE = 1e-12

def pad_cells(values: np.ndarray, inner_wall: float, outer_wall: float) -> np.ndarray:
    """Append one ghost row on each side of a cell-centred array along r."""

    w, c0, c1, c2 = GHOST_WEIGHTS
    inner = w * inner_wall + c0 * values[0] + c1 * values[1] + c2 * values[2]
    outer = w * outer_wall + c0 * values[-1] + c1 * values[-2] + c2 * values[-3]
    return np.concatenate([inner[None], values, outer[None]], axis=0)

def z_next(values: np.ndarray) -> np.ndarray:
    return np.roll(values, -1, axis=-1)

def z_prev(values: np.ndarray) -> np.ndarray:
    return np.roll(values, 1, axis=-1)

def theta_derivative(values: np.ndarray, order: int = 1) -> np.ndarray:
    """Spectral derivative along axis 1 (the theta axis).

    Lines that are exactly constant in theta map to exactly zero.
    """

    n_theta = values.shape[1]
    wavenumbers = np.arange(n_theta // 2 + 1, dtype=float)
    if order == 1:
        factor = 1j * wavenumbers
        if n_theta % 2 == 0:
            factor[-1] = 0.0
    elif order == 2:
        factor = -(wavenumbers**2) + 0j
    else:
        raise ValueError(f"Unsupported theta derivative order: {order}")

    shape = [1] * values.ndim
    shape[1] = -1
    spectrum = np.fft.rfft(values, axis=1) * factor.reshape(shape)
    derivative = np.fft.irfft(spectrum, n=n_theta, axis=1)
    flat = np.all(values == values[:, :1], axis=1, keepdims=True)
    return np.where(flat, 0.0, derivative)

class CylindricalOperatorService:
    """Discrete cylindrical operators on the staggered annulus grid."""

    def __init__(self, threshold_service: ThresholdService):
        self.threshold_service = threshold_service

    def build_grid(
        self,
        annulus: Annulus,
        n_r: int,
        n_z: int,
        z_period: Optional[float] = None,
        n_theta: Optional[int] = None
    ) -> Grid:

        period = 2.0 * annulus.gap if z_period is None else z_period
        try:
            grid = Grid(annulus=annulus, n_r=n_r, n_z=n_z, z_period=period, n_theta=n_theta)
        except ValidationError as e:
            logger.error(f"Rejected grid n_r={n_r}, n_z={n_z}, L_z={period}: {e}")
            raise ValueError(f"Invalid grid: n_r={n_r}, n_z={n_z}, L_z={period}, n_theta={n_theta}")
        logger.debug(f"Built {grid!r}")
        return grid

    def divergence(self, field: Field) -> np.ndarray:

        grid = field.grid
        r_f = grid.radial(grid.r_faces)
        r_c = grid.radial(grid.r_centers)
        flux = r_f * field.v_r
        div = (flux[1:] - flux[:-1]) / (r_c * grid.h_r) + (z_next(field.v_z) - field.v_z) / grid.h_z
        if not grid.axisymmetric:
            div = div + theta_derivative(field.v_theta) / r_c
        return div

    def scalar_laplacian(self, values: np.ndarray, grid: Grid) -> np.ndarray:
        """Cylindrical Laplacian of a cell-centred scalar at interior cells (rows 1..n_r-2)."""

        r_f = grid.radial(grid.r_faces)[1:-1]
        r_c = grid.radial(grid.r_centers)
        h = grid.h_r
        flux = r_f * (values[1:] - values[:-1]) / h
        inner = values[1:-1]
        lap = (flux[1:] - flux[:-1]) / (r_c[1:-1] * h)
        lap = lap + (z_next(inner) - 2.0 * inner + z_prev(inner)) / grid.h_z**2
        if not grid.axisymmetric:
            lap = lap + theta_derivative(inner, order=2) / r_c[1:-1] ** 2
        return lap

    def residual_arrays(
        self,
        field: Field,
        pressure: Optional[PressureField],
        nu: float,
        axial_gradient: Optional[float] = None,
        advective: bool = True
    ) -> ResidualArrays:
        """Pointwise residuals of the steady equations on the staggered lattice.

        Radial rows live on interior radial faces, the other three on their
        own staggered locations. The general system reuses the axisymmetric
        kernel and adds the theta terms.
        """

        if pressure is None:
            logger.error("Residual evaluation requested without a pressure field")
            raise ValueError("Pressure field is required for residual evaluation")
        self.threshold_service.check_viscosity(nu)
        if pressure.grid != field.grid:
            raise ValueError("Field and pressure live on different grids")

        a = pressure.axial_gradient if axial_gradient is None else axial_gradient
        arrays = self._rz_residual(field, pressure.p, nu, a, advective)
        if field.grid.axisymmetric:
            return arrays

        extra = self._theta_residual(field, pressure.p, nu, advective)
        return ResidualArrays(*(base + more for base, more in zip(arrays, extra)))

    def momentum_residual_axisym(
        self,
        field: Field,
        pressure: Optional[PressureField],
        axial_gradient: float,
        nu: float,
        advective: bool = True
    ) -> ResidualReport:

        if not field.grid.axisymmetric:
            raise ValueError("Axisymmetric residual requires a grid without theta lattice")
        arrays = self.residual_arrays(field, pressure, nu, axial_gradient, advective)
        return self.report(arrays, field.grid)

    def momentum_residual_general(
        self,
        field: Field,
        pressure: Optional[PressureField],
        nu: float,
        advective: bool = True
    ) -> ResidualReport:

        if field.grid.axisymmetric:
            logger.error("General residual requested on an axisymmetric-only grid")
            raise ValueError("General residual requires a grid with n_theta")
        arrays = self.residual_arrays(field, pressure, nu, None, advective)
        return self.report(arrays, field.grid)

    def report(self, arrays: ResidualArrays, grid: Grid) -> ResidualReport:

        r_f = grid.r_faces[1:-1]
        r_c = grid.r_centers
        radii = {"radial": r_f, "azimuthal": r_c, "axial": r_c, "continuity": r_c}
        norms: dict[str, float] = {}
        for name, values in arrays._asdict().items():
            norms[f"{name}_linf"] = float(np.max(np.abs(values)))
            norms[f"{name}_l2"] = self._weighted_l2(values, radii[name], grid)
        return ResidualReport(**norms, h_r=grid.h_r, h_z=grid.h_z)

    def poincare_check(self, profile: np.ndarray, grid: Grid, l_cut: float) -> PoincareReport:

        CutoffSpec(l_cut=l_cut)
        check_cutoff_fits(l_cut, grid.z_period)

        f = np.asarray(profile, dtype=float)
        if f.ndim == 1:
            f = np.broadcast_to(f[:, None], (f.shape[0], grid.n_z))
        if f.shape != (grid.n_r + 1, grid.n_z):
            raise ValueError(
                f"Profile has shape {np.shape(profile)}, expected ({grid.n_r + 1},) "
                f"or ({grid.n_r + 1}, {grid.n_z})"
            )
        scale = max(1.0, float(np.max(np.abs(f))))
        if np.max(np.abs(f[0])) > WALL_TRACE_TOLERANCE * scale or (
            np.max(np.abs(f[-1])) > WALL_TRACE_TOLERANCE * scale
        ):
            logger.error("Poincare check rejected a profile with nonzero wall trace")
            raise ValueError("Profile must vanish on both walls")

        f_c = 0.5 * (f[1:] + f[:-1])
        df = (f[1:] - f[:-1]) / grid.h_r
        z = grid.z_centers
        cell_weight = 2.0 * math.pi * grid.h_r * grid.h_z * grid.r_centers[:, None]
        phi = cell_weight * phi_l_values(z, l_cut)[None, :]
        strip = cell_weight * strip_mask(z, l_cut)[None, :]

        norm_f = math.sqrt(float(np.sum(phi * f_c**2)))
        norm_df = math.sqrt(float(np.sum(phi * df**2)))
        norm_f_strip = math.sqrt(float(np.sum(strip * f_c**2)))
        norm_df_strip = math.sqrt(float(np.sum(strip * df**2)))

        bound = math.sqrt(self.threshold_service.poincare_constant(grid.annulus))
        factor = 1.0 + POINCARE_SLACK * grid.h_r
        ratio_domain = norm_f / norm_df if norm_df > 0.0 else None
        ratio_strip = norm_f_strip / norm_df_strip if norm_df_strip > 0.0 else None
        degenerate = ratio_domain is None
        holds = all(
            ratio is None or ratio <= bound * factor for ratio in (ratio_domain, ratio_strip)
        )
        if not holds:
            logger.warning(f"Poincare ratio {ratio_domain} exceeds {bound * factor} at L={l_cut}")

        return PoincareReport(
            norm_f_domain=norm_f,
            norm_df_domain=norm_df,
            norm_f_strip=norm_f_strip,
            norm_df_strip=norm_df_strip,
            ratio_domain=ratio_domain,
            ratio_strip=ratio_strip,
            bound=bound,
            tolerance_factor=factor,
            degenerate=degenerate,
            holds=holds,
        )

    def theta_asymmetry(self, field: Field) -> float:

        if field.grid.axisymmetric:
            raise ValueError("Theta asymmetry requires a grid with n_theta")
        return max(
            float(np.max(np.abs(theta_derivative(component))))
            for component in (field.v_r, field.v_theta, field.v_z)
        )

    def extend_in_theta(
        self,
        field: Field,
        pressure: PressureField,
        n_theta: int
    ) -> tuple[Field, PressureField]:

        if not field.grid.axisymmetric:
            raise ValueError("Field already carries a theta lattice")
        grid = field.grid.with_theta(n_theta)

        def lift(values: np.ndarray) -> np.ndarray:
            return np.repeat(values[:, None, :], n_theta, axis=1)

        extended = Field(
            v_r=lift(field.v_r),
            v_theta=lift(field.v_theta),
            v_z=lift(field.v_z),
            grid=grid,
            theta_walls=field.theta_walls,
        )
        return extended, pressure.model_copy(update={"p": lift(pressure.p), "grid": grid})

    def _rz_residual(
        self,
        field: Field,
        p: np.ndarray,
        nu: float,
        axial_gradient: float,
        advective: bool
    ) -> ResidualArrays:

        grid = field.grid
        h, hz = grid.h_r, grid.h_z
        r_f = grid.radial(grid.r_faces)
        r_c = grid.radial(grid.r_centers)
        r_in = r_f[1:-1]
        ur, ut, uz = field.v_r, field.v_theta, field.v_z
        ut_pad = pad_cells(ut, *field.theta_walls)
        uz_pad = pad_cells(uz, 0.0, 0.0)

        # radial momentum on interior faces
        ur_in = ur[1:-1]
        flux_r = r_c * (ur[1:] - ur[:-1]) / h
        lap_r = (
            (flux_r[1:] - flux_r[:-1]) / (r_in * h)
            + (z_next(ur_in) - 2.0 * ur_in + z_prev(ur_in)) / hz**2
            - ur_in / r_in**2
        )
        radial = (p[1:] - p[:-1]) / h - nu * lap_r

        # azimuthal momentum at cell centres
        flux_t = r_f * (ut_pad[1:] - ut_pad[:-1]) / h
        lap_t = (
            (flux_t[1:] - flux_t[:-1]) / (r_c * h)
            + (z_next(ut) - 2.0 * ut + z_prev(ut)) / hz**2
            - ut / r_c**2
        )
        azimuthal = -nu * lap_t

        # axial momentum on axial faces
        flux_z = r_f * (uz_pad[1:] - uz_pad[:-1]) / h
        lap_z = (flux_z[1:] - flux_z[:-1]) / (r_c * h) + (
            z_next(uz) - 2.0 * uz + z_prev(uz)
        ) / hz**2
        axial = (p - z_prev(p)) / hz + axial_gradient - nu * lap_z

        if advective:
            uz_up = z_next(uz)
            uz_at_r = 0.25 * (uz[:-1] + uz[1:] + uz_up[:-1] + uz_up[1:])
            ut_at_r = 0.5 * (ut[:-1] + ut[1:])
            radial = radial + (
                ur_in * (ur[2:] - ur[:-2]) / (2.0 * h)
                + uz_at_r * (z_next(ur_in) - z_prev(ur_in)) / (2.0 * hz)
                - ut_at_r**2 / r_in
            )

            ur_at_c = 0.5 * (ur[:-1] + ur[1:])
            uz_at_c = 0.5 * (uz + uz_up)
            azimuthal = azimuthal + (
                ur_at_c * (ut_pad[2:] - ut_pad[:-2]) / (2.0 * h)
                + uz_at_c * (z_next(ut) - z_prev(ut)) / (2.0 * hz)
                + ur_at_c * ut / r_c
            )

            ur_down = z_prev(ur)
            ur_at_z = 0.25 * (ur[:-1] + ur[1:] + ur_down[:-1] + ur_down[1:])
            axial = axial + (
                ur_at_z * (uz_pad[2:] - uz_pad[:-2]) / (2.0 * h)
                + uz * (uz_up - z_prev(uz)) / (2.0 * hz)
            )

        continuity = (r_f[1:] * ur[1:] - r_f[:-1] * ur[:-1]) / (r_c * h) + (
            z_next(uz) - uz
        ) / hz
        return ResidualArrays(radial, azimuthal, axial, continuity)

    def _theta_residual(
        self,
        field: Field,
        p: np.ndarray,
        nu: float,
        advective: bool
    ) -> ResidualArrays:

        grid = field.grid
        r_c = grid.radial(grid.r_centers)
        r_in = grid.radial(grid.r_faces)[1:-1]
        ur, ut, uz = field.v_r, field.v_theta, field.v_z

        d_ur = theta_derivative(ur)
        d_ut = theta_derivative(ut)
        d_uz = theta_derivative(uz)

        radial = (
            -nu * theta_derivative(ur[1:-1], order=2) / r_in**2
            + nu * (d_ut[:-1] + d_ut[1:]) / r_in**2
        )
        azimuthal = (
            theta_derivative(p) / r_c
            - nu * theta_derivative(ut, order=2) / r_c**2
            - nu * (d_ur[:-1] + d_ur[1:]) / r_c**2
        )
        axial = -nu * theta_derivative(uz, order=2) / r_c**2
        continuity = d_ut / r_c

        if advective:
            radial = radial + 0.5 * (ut[:-1] + ut[1:]) / r_in * d_ur[1:-1]
            azimuthal = azimuthal + ut / r_c * d_ut
            axial = axial + 0.5 * (ut + z_prev(ut)) / r_c * d_uz
        return ResidualArrays(radial, azimuthal, axial, continuity)

    def _weighted_l2(self, values: np.ndarray, radii: np.ndarray, grid: Grid) -> float:

        squares = values**2
        if not grid.axisymmetric:
            squares = squares.mean(axis=1)
        total = float(np.sum(radii[:, None] * squares))
        return math.sqrt(2.0 * math.pi * grid.h_r * grid.h_z * total)
