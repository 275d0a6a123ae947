import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from typing import Optional, Sequence

import numpy as np
from loguru import logger

from ..models import (
    Annulus,
    CutoffSpec,
    EnergyReport,
    EnergyVariant,
    ExperimentRecord,
    Field,
    FlowConfig,
    GeneralizedTC,
    Grid,
    ManifoldFit,
    PressureField,
    SolveOptions,
    SweepSummary,
    TCCoefficients,
)
from .cutoff import check_cutoff_fits, cutoff_ladder, phi_l_values, strip_mask
from .exact_flow_service import ExactFlowService
from .operator_service import (
    CylindricalOperatorService,
    pad_cells,
    theta_derivative,
    z_next,
    z_prev,
)
from .solver_service import SteadySolverService
from .threshold_service import ThresholdService

DISTANCE_FLOOR = 1e-8
DISTANCE_SLOPE = 5.0

def build_services() -> "LiouvilleService":

    thresholds = ThresholdService()
    exact = ExactFlowService(thresholds)
    operators = CylindricalOperatorService(thresholds)
    solver = SteadySolverService(operators)
    return LiouvilleService(thresholds, exact, operators, solver)

def run_sweep_point(task: tuple) -> ExperimentRecord:
    """Process-pool entry point: one (omega pair, amplitude, seed) run."""

    return build_services().run_point(*task)

class LiouvilleService:

    def __init__(
        self,
        threshold_service: ThresholdService,
        exact_flow_service: ExactFlowService,
        operator_service: CylindricalOperatorService,
        solver_service: SteadySolverService
    ):
        self.threshold_service = threshold_service
        self.exact_flow_service = exact_flow_service
        self.operator_service = operator_service
        self.solver_service = solver_service

    def phi_l(self, z: float, spec: CutoffSpec) -> float:

        return float(phi_l_values(z, spec.l_cut))

    def cutoff_ladder(self, grid: Grid) -> list[float]:

        return cutoff_ladder(grid.z_period)

    def y_functional(
        self,
        field: Field,
        nu: float,
        spec: CutoffSpec,
        variant: EnergyVariant = "axial"
    ) -> EnergyReport:

        self.threshold_service.check_viscosity(nu)
        grid = field.grid
        check_cutoff_fits(spec.l_cut, grid.z_period)
        if variant == "axial":
            integrands = self._axial_integrands(field)
        elif variant == "azimuthal":
            if grid.axisymmetric:
                logger.error("Azimuthal energy functional requested on an axisymmetric grid")
                raise ValueError("Azimuthal variant requires theta-resolved data")
            integrands = self._azimuthal_integrands(field)
        else:
            raise ValueError(f"Unknown energy variant: {variant}")

        terms: dict[str, float] = {}
        prime_terms: dict[str, float] = {}
        for name, (values, r_weights, z) in integrands.items():
            phi = phi_l_values(z, spec.l_cut)
            strip = strip_mask(z, spec.l_cut).astype(float)
            terms[name] = nu * self._integrate(values, r_weights, phi, grid)
            prime_terms[name] = nu * self._integrate(values, r_weights, strip, grid)

        return EnergyReport(
            l_cut=spec.l_cut,
            variant=variant,
            y_value=sum(terms.values()),
            y_prime=sum(prime_terms.values()),
            terms=terms,
            prime_terms=prime_terms,
        )

    def y_ladder(self, field: Field, nu: float, variant: EnergyVariant = "axial") -> list[EnergyReport]:

        return [
            self.y_functional(field, nu, CutoffSpec(l_cut=l_cut), variant)
            for l_cut in self.cutoff_ladder(field.grid)
        ]

    def fit_tc_manifold(
        self,
        field: Field,
        pressure: PressureField,
        imposed_a: float,
        nu: float,
        fit_axial: bool = False,
        a_tolerance: float = 1e-10
    ) -> ManifoldFit:
        """Project a computed axisymmetric flow onto the generalized Taylor-Couette family."""

        grid = field.grid
        if not grid.axisymmetric:
            raise ValueError("Manifold fit requires an axisymmetric field")
        annulus = grid.annulus
        r = grid.r_centers
        sqrt_w = np.sqrt(r)

        basis = np.column_stack([r, 1.0 / r])
        profile = field.v_theta.mean(axis=-1)
        (a_coef, b_coef), *_ = np.linalg.lstsq(sqrt_w[:, None] * basis, sqrt_w * profile, rcond=None)

        if fit_axial:
            unit = self.exact_flow_service.vz_basis(annulus, nu, r)
            axial = field.v_z.mean(axis=-1)
            axial_gradient = float(np.sum(r * unit * axial) / np.sum(r * unit * unit))
        else:
            axial_gradient = imposed_a

        shape = GeneralizedTC(
            coeffs=TCCoefficients(a_coef=float(a_coef), b_coef=float(b_coef), annulus=annulus),
            axial_gradient=axial_gradient,
            annulus=annulus,
            viscosity=nu,
        )
        radial_pressure = self.exact_flow_service.eval_radial_pressure(shape, r)
        periodic = pressure.p - radial_pressure[:, None]
        offset = float(np.sum(r[:, None] * periodic) / (np.sum(r) * grid.n_z))
        fitted = shape.model_copy(update={"pressure_offset": offset})

        sampled, _ = self.exact_flow_service.sample_on_grid(fitted, grid)
        gaps = (
            field.v_r - sampled.v_r,
            field.v_theta - sampled.v_theta,
            field.v_z - sampled.v_z,
        )
        distance_linf = max(float(np.max(np.abs(g))) for g in gaps)
        weights = (self._face_weights(grid), self._cell_weights(grid), self._cell_weights(grid))
        distance_l2 = math.sqrt(
            sum(self._integrate(g**2, w, np.ones(grid.n_z), grid) for g, w in zip(gaps, weights))
        )
        logger.debug(
            f"Manifold fit A={fitted.coeffs.a_coef:.6g}, B={fitted.coeffs.b_coef:.6g}, "
            f"a={axial_gradient:.3g}, distance={distance_linf:.3e}"
        )
        return ManifoldFit(
            fitted=fitted,
            distance_linf=distance_linf,
            distance_l2=distance_l2,
            canonical=abs(axial_gradient) <= a_tolerance,
        )

    def distance_tolerance(self, grid: Grid, scale: float) -> float:

        h = max(grid.h_r, grid.h_z)
        return max(DISTANCE_FLOOR, DISTANCE_SLOPE * h * h * scale)

    def sweep_reynolds(
        self,
        annulus: Annulus,
        nu: float,
        omega_pairs: Sequence[tuple[float, float]],
        perturb_amplitudes: Sequence[float],
        seeds: Sequence[int],
        grid: Grid,
        opts: Optional[SolveOptions] = None,
        fit_axial: bool = True,
        workers: int = 1
    ) -> list[ExperimentRecord]:

        opts = opts or SolveOptions()
        for name, values in (
            ("omega_pairs", omega_pairs),
            ("perturb_amplitudes", perturb_amplitudes),
            ("seeds", seeds),
        ):
            if len(values) == 0:
                raise ValueError(f"Sweep requires a nonempty {name} list")
        if grid.annulus != annulus:
            raise ValueError("Sweep grid annulus does not match the sweep annulus")
        if not self.cutoff_ladder(grid):
            raise ValueError(
                f"Axial period {grid.z_period} leaves no cutoff L in [1.25, L_z/2]"
            )

        tasks = [
            (annulus, nu, tuple(pair), amplitude, seed, grid, opts, fit_axial)
            for pair, amplitude, seed in itertools.product(omega_pairs, perturb_amplitudes, seeds)
        ]
        logger.info(f"Running {len(tasks)} sweep points on {grid!r} with {workers} worker(s)")
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                records = list(pool.map(run_sweep_point, tasks))
        else:
            records = [self.run_point(*task) for task in tasks]

        for record in records:
            if record.counterexample:
                logger.warning(
                    f"Counterexample candidate at omega=({record.omega_inner}, {record.omega_outer}), "
                    f"seed={record.seed}: distance {record.manifold_distance:.3e}"
                )
        return records

    def run_point(
        self,
        annulus: Annulus,
        nu: float,
        omegas: tuple[float, float],
        amplitude: float,
        seed: int,
        grid: Grid,
        opts: SolveOptions,
        fit_axial: bool
    ) -> ExperimentRecord:

        config = FlowConfig(viscosity=nu, omega_inner=omegas[0], omega_outer=omegas[1])
        thresholds = self.threshold_service.thresholds(nu, annulus)
        exact = self.exact_flow_service.generalized(
            annulus, config, axial_gradient=opts.imposed_axial_gradient
        )
        start, _ = self.exact_flow_service.sample_on_grid(exact, grid)
        start = self.solver_service.perturb(start, amplitude, seed)
        outcome = self.solver_service.solve_steady(grid, nu, config, start, opts)

        wall_speed = self.threshold_service.wall_speed(annulus, config)
        velocity_linf = outcome.field.velocity_linf()
        tolerance = self.distance_tolerance(grid, max(wall_speed, velocity_linf))
        fit = self.fit_tc_manifold(
            outcome.field,
            outcome.pressure,
            opts.imposed_axial_gradient,
            nu,
            fit_axial=fit_axial,
            a_tolerance=tolerance,
        )
        y_max = max(report.y_value for report in self.y_ladder(outcome.field, nu))

        max_reynolds = self.threshold_service.max_reynolds(annulus, config)
        in_hypothesis = (
            max_reynolds < thresholds.re_bound
            and self.threshold_service.satisfies_velocity_hypothesis(velocity_linf, thresholds.c_star)
        )
        if not in_hypothesis:
            logger.warning(
                f"Run omega=({omegas[0]}, {omegas[1]}) seed={seed} is outside the uniqueness hypotheses"
            )

        return ExperimentRecord(
            omega_inner=omegas[0],
            omega_outer=omegas[1],
            amplitude=amplitude,
            seed=seed,
            reynolds_inner=self.threshold_service.reynolds(nu, annulus, omegas[0], "inner"),
            reynolds_outer=self.threshold_service.reynolds(nu, annulus, omegas[1], "outer"),
            wall_speed=wall_speed,
            velocity_linf=velocity_linf,
            thresholds=thresholds,
            converged=outcome.converged,
            newton_iterations=outcome.newton_iterations,
            manifold_distance=fit.distance_linf,
            distance_tolerance=tolerance,
            fitted_a=fit.fitted.axial_gradient,
            y_max=y_max,
            z_period=grid.z_period,
            in_hypothesis=in_hypothesis,
            on_manifold=outcome.converged and fit.distance_linf <= tolerance,
        )

    def summarize(self, records: Sequence[ExperimentRecord]) -> SweepSummary:

        return SweepSummary(
            total=len(records),
            converged=sum(record.converged for record in records),
            on_manifold=sum(record.on_manifold for record in records),
            out_of_hypothesis=sum(not record.in_hypothesis for record in records),
            counterexamples=sum(record.counterexample for record in records),
        )

    def _axial_integrands(self, field: Field) -> dict[str, tuple[np.ndarray, np.ndarray, np.ndarray]]:

        grid = field.grid
        h, hz = grid.h_r, grid.h_z
        r_f = grid.radial(grid.r_faces)
        r_c = grid.radial(grid.r_centers)
        faces, cells = self._face_weights(grid), self._cell_weights(grid)
        z_c, z_f = grid.z_centers, grid.z_faces

        def dz(u: np.ndarray) -> np.ndarray:
            return (z_next(u) - z_prev(u)) / (2.0 * hz)

        def dzz(u: np.ndarray) -> np.ndarray:
            return (z_next(u) - 2.0 * u + z_prev(u)) / hz**2

        def dr_of_cells(d: np.ndarray) -> np.ndarray:
            # d vanishes on the walls; result on radial faces
            padded = pad_cells(d, 0.0, 0.0)
            return (padded[1:] - padded[:-1]) / h

        dz_r, dz_t, dz_z = dz(field.v_r), dz(field.v_theta), dz(field.v_z)
        return {
            "dr_dz_vr": (((dz_r[1:] - dz_r[:-1]) / h) ** 2, cells, z_c),
            "dr_dz_vtheta": (dr_of_cells(dz_t) ** 2, faces, z_c),
            "dr_dz_vz": (dr_of_cells(dz_z) ** 2, faces, z_f),
            "dz2_vr": (dzz(field.v_r) ** 2, faces, z_c),
            "dz2_vtheta": (dzz(field.v_theta) ** 2, cells, z_c),
            "dz2_vz": (dzz(field.v_z) ** 2, cells, z_f),
            "dz_vr_over_r": ((dz_r / r_f) ** 2, faces, z_c),
            "dz_vtheta_over_r": ((dz_t / r_c) ** 2, cells, z_c),
        }

    def _azimuthal_integrands(self, field: Field) -> dict[str, tuple[np.ndarray, np.ndarray, np.ndarray]]:

        grid = field.grid
        h, hz = grid.h_r, grid.h_z
        r_c = grid.radial(grid.r_centers)
        faces, cells = self._face_weights(grid), self._cell_weights(grid)
        z_c, z_f = grid.z_centers, grid.z_faces

        def dz(u: np.ndarray) -> np.ndarray:
            return (z_next(u) - z_prev(u)) / (2.0 * hz)

        dt_r = theta_derivative(field.v_r)
        dt_t = theta_derivative(field.v_theta)
        dt_z = theta_derivative(field.v_z)
        dtt_t = theta_derivative(field.v_theta, order=2)
        dtt_z = theta_derivative(field.v_z, order=2)
        # v^r moved to cell centres for the combined terms
        dt_r_c = 0.5 * (dt_r[:-1] + dt_r[1:])
        dtt_r_c = theta_derivative(0.5 * (field.v_r[:-1] + field.v_r[1:]), order=2)

        def dr_of_cells(d: np.ndarray) -> np.ndarray:
            padded = pad_cells(d, 0.0, 0.0)
            return (padded[1:] - padded[:-1]) / h

        return {
            "dr_dtheta_vr": (((dt_r[1:] - dt_r[:-1]) / h) ** 2, cells, z_c),
            "dr_dtheta_vtheta": (dr_of_cells(dt_t) ** 2, faces, z_c),
            "dr_dtheta_vz": (dr_of_cells(dt_z) ** 2, faces, z_f),
            "dz_dtheta_vr": (dz(dt_r) ** 2, faces, z_c),
            "dz_dtheta_vtheta": (dz(dt_t) ** 2, cells, z_c),
            "dz_dtheta_vz": (dz(dt_z) ** 2, cells, z_f),
            "theta_vtheta_combined": (((dtt_t + dt_r_c) / r_c) ** 2, cells, z_c),
            "theta_vr_combined": (((dtt_r_c - dt_t) / r_c) ** 2, cells, z_c),
            "dtheta2_vz_over_r": ((dtt_z / r_c) ** 2, cells, z_f),
        }

    def _face_weights(self, grid: Grid) -> np.ndarray:

        weights = grid.r_faces * grid.h_r
        weights[0] *= 0.5
        weights[-1] *= 0.5
        return weights

    def _cell_weights(self, grid: Grid) -> np.ndarray:

        return grid.r_centers * grid.h_r

    def _integrate(
        self,
        values: np.ndarray,
        r_weights: np.ndarray,
        z_weights: np.ndarray,
        grid: Grid
    ) -> float:
        """r-weighted midpoint quadrature over the periodic cell."""

        if grid.axisymmetric:
            total = np.sum(r_weights[:, None] * values * z_weights[None, :])
            return float(2.0 * math.pi * grid.h_z * total)
        total = np.sum(r_weights[:, None, None] * values * z_weights[None, None, :])
        return float(grid.h_theta * grid.h_z * total)
