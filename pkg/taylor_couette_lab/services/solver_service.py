import math
from typing import Optional

import numpy as np
import scipy.sparse as sp
from loguru import logger
from scipy.sparse.linalg import splu

from ..models import (
    Field,
    FlowConfig,
    Grid,
    IterationRecord,
    PressureField,
    SolveOptions,
    SolveOutcome,
    SolveStatus,
)
from .operator_service import CylindricalOperatorService, z_next

RADIAL, AZIMUTHAL, AXIAL, PRESSURE = range(4)
RADIAL_COLOURS = 5
PERTURBATION_MODES = 3

class SteadySystem:
    """Discrete steady system in vector form.

    Unknowns are interior v^r faces, every v^theta and v^z cell, and every
    pressure cell except (0, 0), which is pinned to zero. The continuity
    row of cell (0, 0) is dropped to match.
    """

    def __init__(
        self,
        operators: CylindricalOperatorService,
        grid: Grid,
        nu: float,
        theta_walls: tuple[float, float],
        axial_gradient: float,
        advective: bool
    ):
        self.operators = operators
        self.grid = grid
        self.nu = nu
        self.theta_walls = theta_walls
        self.axial_gradient = axial_gradient
        self.advective = advective

        n_r, n_z = grid.n_r, grid.n_z
        self.sizes = ((n_r - 1) * n_z, n_r * n_z, n_r * n_z, n_r * n_z - 1)
        self.offsets = np.concatenate([[0], np.cumsum(self.sizes)])
        self.size = int(self.offsets[-1])
        self._index_unknowns()

    def pack(self, field: Field, pressure: PressureField) -> np.ndarray:

        p = pressure.p - pressure.p[0, 0]
        return np.concatenate(
            [
                field.v_r[1:-1].ravel(),
                field.v_theta.ravel(),
                field.v_z.ravel(),
                p.ravel()[1:],
            ]
        )

    def unpack(self, x: np.ndarray) -> tuple[Field, PressureField]:

        grid = self.grid
        n_r, n_z = grid.n_r, grid.n_z
        parts = [x[self.offsets[k]:self.offsets[k + 1]] for k in range(4)]

        v_r = np.zeros(grid.face_shape)
        v_r[1:-1] = parts[RADIAL].reshape(n_r - 1, n_z)
        p = np.concatenate([[0.0], parts[PRESSURE]]).reshape(n_r, n_z)
        field = Field(
            v_r=v_r,
            v_theta=parts[AZIMUTHAL].reshape(n_r, n_z).copy(),
            v_z=parts[AXIAL].reshape(n_r, n_z).copy(),
            grid=grid,
            theta_walls=self.theta_walls,
        )
        pressure = PressureField(p=p, grid=grid, axial_gradient=self.axial_gradient)
        return field, pressure

    def residual(self, x: np.ndarray) -> np.ndarray:

        field, pressure = self.unpack(x)
        arrays = self.operators.residual_arrays(
            field, pressure, self.nu, self.axial_gradient, self.advective
        )
        return np.concatenate(
            [
                arrays.radial.ravel(),
                arrays.azimuthal.ravel(),
                arrays.axial.ravel(),
                arrays.continuity.ravel()[1:],
            ]
        )

    def jacobian(self, x: np.ndarray) -> sp.csc_matrix:
        """Sparse Jacobian from grid-coloured central differences.

        The residual is at most quadratic in x, so a unit central difference
        recovers each entry up to round-off. Each colour holds unknowns of one
        component spaced RADIAL_COLOURS apart in r and z_colours apart in z;
        no residual row touches two of them.
        """

        rows_all, cols_all, values_all = [], [], []
        for component in range(4):
            for ci in range(RADIAL_COLOURS):
                for cj in range(self.z_colours):
                    mask = (
                        (self.col_component == component)
                        & (self.col_i % RADIAL_COLOURS == ci)
                        & (self.col_j % self.z_colours == cj)
                    )
                    if not np.any(mask):
                        continue
                    step = mask.astype(float)
                    delta = 0.5 * (self.residual(x + step) - self.residual(x - step))
                    rows = np.flatnonzero(delta)
                    if rows.size == 0:
                        continue
                    owner_i = self.row_i[rows] - 2 + (ci - (self.row_i[rows] - 2)) % RADIAL_COLOURS
                    owner_j = (
                        self.row_j[rows] - 1 + (cj - (self.row_j[rows] - 1)) % self.z_colours
                    ) % self.grid.n_z
                    valid = (owner_i >= 0) & (owner_i <= self.grid.n_r)
                    cols = np.full(rows.shape, -1)
                    cols[valid] = self.lookup[component][owner_i[valid], owner_j[valid]]
                    keep = cols >= 0
                    rows_all.append(rows[keep])
                    cols_all.append(cols[keep])
                    values_all.append(delta[rows[keep]])

        if rows_all:
            rows = np.concatenate(rows_all)
            cols = np.concatenate(cols_all)
            values = np.concatenate(values_all)
        else:
            rows = cols = np.zeros(0, dtype=int)
            values = np.zeros(0)
        return sp.csc_matrix((values, (rows, cols)), shape=(self.size, self.size))

    def velocity_mask(self) -> np.ndarray:

        mask = np.ones(self.size)
        mask[self.offsets[PRESSURE]:] = 0.0
        return mask

    def _index_unknowns(self) -> None:

        n_r, n_z = self.grid.n_r, self.grid.n_z
        faces_i, faces_j = np.meshgrid(np.arange(1, n_r), np.arange(n_z), indexing="ij")
        cells_i, cells_j = np.meshgrid(np.arange(n_r), np.arange(n_z), indexing="ij")
        lattices = [
            (faces_i.ravel(), faces_j.ravel()),
            (cells_i.ravel(), cells_j.ravel()),
            (cells_i.ravel(), cells_j.ravel()),
            (cells_i.ravel()[1:], cells_j.ravel()[1:]),
        ]

        # unknowns and equations share the same lattice ordering
        self.col_component = np.concatenate(
            [np.full(size, k) for k, size in enumerate(self.sizes)]
        )
        self.col_i = np.concatenate([i for i, _ in lattices])
        self.col_j = np.concatenate([j for _, j in lattices])
        self.row_i = self.col_i
        self.row_j = self.col_j

        self.lookup = []
        for k, (i, j) in enumerate(lattices):
            table = np.full((n_r + 1, n_z), -1, dtype=int)
            table[i, j] = self.offsets[k] + np.arange(self.sizes[k])
            self.lookup.append(table)

        divisors = [d for d in range(3, n_z + 1) if n_z % d == 0]
        self.z_colours = divisors[0]

class SteadySolverService:

    def __init__(self, operator_service: CylindricalOperatorService):
        self.operator_service = operator_service

    def assemble(
        self,
        grid: Grid,
        nu: float,
        bc: FlowConfig,
        opts: SolveOptions
    ) -> SteadySystem:

        if not grid.axisymmetric:
            logger.error(f"Steady solves run on axisymmetric grids only, got {grid!r}")
            raise ValueError("Steady solver requires an axisymmetric grid")
        return SteadySystem(
            self.operator_service,
            grid,
            nu,
            bc.wall_speeds(grid.annulus),
            opts.imposed_axial_gradient,
            advective=not opts.stokes_mode,
        )

    def solve_steady(
        self,
        grid: Grid,
        nu: float,
        bc: FlowConfig,
        initial: Field,
        opts: Optional[SolveOptions] = None
    ) -> SolveOutcome:

        opts = opts or SolveOptions()
        if initial.grid != grid:
            raise ValueError("Initial field lives on a different grid")
        system = self.assemble(grid, nu, bc, opts)

        start = initial.model_copy(update={"theta_walls": system.theta_walls})
        x = system.pack(start, PressureField.zeros(grid, opts.imposed_axial_gradient))
        residual = system.residual(x)
        norm = self._linf(residual)
        rest_norm = self._linf(system.residual(np.zeros(system.size)))
        reference = max(norm, rest_norm)

        dt = opts.ptc_initial_dt or 0.1 * grid.annulus.gap**2 / nu
        newton = opts.stokes_mode or norm < opts.ptc_switch_ratio * reference
        mass = sp.diags(system.velocity_mask(), format="csc")

        best_x, best_norm = x, norm
        status = SolveStatus.MAX_ITERATIONS
        history = [self._record(system, x, 0, norm, None if newton else dt)]
        iterations = 0

        while True:
            if self._converged(system, x, opts.newton_tol):
                status = SolveStatus.CONVERGED
                break
            if iterations >= opts.max_newton:
                logger.warning(
                    f"Steady solve stopped after {iterations} iterations, residual {best_norm:.3e}"
                )
                break

            jacobian = system.jacobian(x)
            matrix = jacobian if newton else jacobian + mass / dt
            try:
                delta = splu(matrix.tocsc()).solve(-residual)
            except RuntimeError as e:
                logger.error(f"Jacobian factorization failed at iteration {iterations}: {e}")
                status = SolveStatus.SINGULAR_JACOBIAN
                break
            if not np.all(np.isfinite(delta)):
                logger.error(f"Non-finite Newton update at iteration {iterations}")
                status = SolveStatus.SINGULAR_JACOBIAN
                break

            iterations += 1
            x = x + delta
            residual = system.residual(x)
            new_norm = self._linf(residual)
            step_dt = None if newton else dt
            if not newton:
                dt = dt * 2.0 if new_norm < norm else dt * 0.5
                newton = new_norm < opts.ptc_switch_ratio * reference
            norm = new_norm
            if norm < best_norm:
                best_x, best_norm = x, norm
            history.append(self._record(system, x, iterations, norm, step_dt))
            logger.debug(f"Iteration {iterations}: residual {norm:.3e}, dt {step_dt}")

        final_x = x if status is SolveStatus.CONVERGED else best_x
        field, pressure = system.unpack(final_x)
        pressure = pressure.regauged()
        report = self.operator_service.momentum_residual_axisym(
            field, pressure, opts.imposed_axial_gradient, nu, advective=system.advective
        )
        logger.info(f"Steady solve {status} after {iterations} iterations on {grid!r}")
        return SolveOutcome(
            field=field,
            pressure=pressure,
            status=status,
            final_residual=report,
            newton_iterations=iterations,
            history=history,
        )

    def perturb(self, field: Field, amplitude: float, seed: int) -> Field:
        """Add a random solenoidal disturbance with max-abs size `amplitude`."""

        if amplitude < 0.0:
            raise ValueError(f"Perturbation amplitude must be nonnegative, got {amplitude}")
        if amplitude == 0.0:
            return field
        grid = field.grid
        if not grid.axisymmetric:
            raise ValueError("Perturbations are generated on axisymmetric grids")

        rng = np.random.default_rng(seed)
        s_f = (grid.r_faces - grid.annulus.r_inner) / grid.annulus.gap
        s_c = (grid.r_centers - grid.annulus.r_inner) / grid.annulus.gap
        r_f = grid.r_faces[:, None]
        r_c = grid.r_centers[:, None]

        # stream function on (r-face, z-face) corners, vanishing with its
        # radial derivative on both walls
        psi = (s_f**2 * (1.0 - s_f) ** 2)[:, None] * self._axial_modes(rng, grid.z_faces, grid)[None, :]
        d_ur = -(z_next(psi) - psi) / (r_f * grid.h_z)
        d_uz = (psi[1:] - psi[:-1]) / (r_c * grid.h_r)
        d_ut = (s_c * (1.0 - s_c))[:, None] * self._axial_modes(rng, grid.z_centers, grid)[None, :]

        peak = max(float(np.max(np.abs(d))) for d in (d_ur, d_ut, d_uz))
        if peak == 0.0:
            return field
        scale = amplitude / peak
        v_r = field.v_r + scale * d_ur
        v_r[0] = 0.0
        v_r[-1] = 0.0
        return field.replace(
            v_r=v_r,
            v_theta=field.v_theta + scale * d_ut,
            v_z=field.v_z + scale * d_uz,
        )

    def _axial_modes(self, rng: np.random.Generator, z: np.ndarray, grid: Grid) -> np.ndarray:

        k = np.arange(1, PERTURBATION_MODES + 1)
        cos_c = rng.normal(size=PERTURBATION_MODES) / k**2
        sin_c = rng.normal(size=PERTURBATION_MODES) / k**2
        mean = rng.normal()
        phase = 2.0 * math.pi * np.outer(z, k) / grid.z_period
        return mean + np.cos(phase) @ cos_c + np.sin(phase) @ sin_c

    def _converged(self, system: SteadySystem, x: np.ndarray, tol: float) -> bool:

        field, pressure = system.unpack(x)
        report = self.operator_service.momentum_residual_axisym(
            field, pressure, system.axial_gradient, system.nu, advective=system.advective
        )
        return report.momentum_linf <= tol and report.continuity_linf <= tol

    def _record(
        self,
        system: SteadySystem,
        x: np.ndarray,
        iteration: int,
        norm: float,
        dt: Optional[float]
    ) -> IterationRecord:

        field, _ = system.unpack(x)
        divergence = float(np.max(np.abs(self.operator_service.divergence(field))))
        return IterationRecord(
            iteration=iteration,
            residual_linf=norm,
            divergence_linf=divergence,
            pseudo_time_step=dt,
        )

    def _linf(self, values: np.ndarray) -> float:
        return float(np.max(np.abs(values))) if values.size else 0.0
