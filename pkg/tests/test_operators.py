import math

import numpy as np
import pytest

from taylor_couette_lab.models import Field, FlowConfig, PressureField
from taylor_couette_lab.services.operator_service import theta_derivative

def sampled_flow(exact, operators, annulus, config, n, axial_gradient=0.5, n_theta=None):

    grid = operators.build_grid(annulus, n, n, n_theta=n_theta)
    gtc = exact.generalized(annulus, config, axial_gradient=axial_gradient)
    return exact.sample_on_grid(gtc, grid)

def radial_bump(grid):

    s = (grid.r_faces - grid.annulus.r_inner) / grid.annulus.gap
    bump = s * (1.0 - s)
    bump[0] = 0.0
    bump[-1] = 0.0
    return bump

class TestGrid:

    def test_spacing(self, operators, annulus):

        grid = operators.build_grid(annulus, 4, 4, 1.0)
        assert grid.h_r == 0.25
        assert grid.h_z == 0.25
        assert operators.build_grid(annulus, 8, 4, 1.0).h_r == 0.125

    def test_layout(self, operators, annulus):

        grid = operators.build_grid(annulus, 8, 6)
        assert grid.axisymmetric
        assert grid.z_period == pytest.approx(2.0)
        assert grid.r_faces[0] == 1.0
        assert grid.r_faces[-1] == pytest.approx(2.0)
        assert grid.face_shape == (9, 6)
        assert grid.cell_shape == (8, 6)
        assert grid.z_faces[0] == pytest.approx(-1.0)
        assert grid.z_centers[0] == pytest.approx(-1.0 + grid.h_z / 2)

    def test_theta_grid(self, operators, annulus):

        grid = operators.build_grid(annulus, 8, 6, n_theta=8)
        assert not grid.axisymmetric
        assert grid.h_theta == pytest.approx(math.pi / 4)
        assert grid.face_shape == (9, 8, 6)
        with pytest.raises(ValueError):
            operators.build_grid(annulus, 8, 6).h_theta

    @pytest.mark.parametrize("n_r, n_z, period", [(3, 8, 1.0), (8, 2, 1.0), (8, 8, 0.0)])
    def test_rejects_degenerate(self, operators, annulus, n_r, n_z, period):

        with pytest.raises(ValueError):
            operators.build_grid(annulus, n_r, n_z, period)

    def test_field_requires_wall_free_radial_velocity(self, operators, annulus):

        grid = operators.build_grid(annulus, 8, 6)
        v_r = np.zeros(grid.face_shape)
        v_r[0, 2] = 1e-3
        with pytest.raises(ValueError):
            Field(v_r=v_r, v_theta=np.zeros(grid.cell_shape), v_z=np.zeros(grid.cell_shape), grid=grid)

    def test_field_shape_check(self, operators, annulus):

        grid = operators.build_grid(annulus, 8, 6)
        with pytest.raises(ValueError):
            Field(v_r=np.zeros(grid.cell_shape), v_theta=np.zeros(grid.cell_shape),
                  v_z=np.zeros(grid.cell_shape), grid=grid)

class TestDivergence:

    def test_sampled_flow_is_solenoidal(self, exact, operators, annulus, below_threshold):

        field, _ = sampled_flow(exact, operators, annulus, below_threshold, 16)
        assert np.all(operators.divergence(field) == 0.0)

    def test_constant_axial_velocity(self, operators, annulus):

        grid = operators.build_grid(annulus, 8, 6)
        field = Field.zeros(grid).replace(v_z=np.full(grid.cell_shape, 0.7))
        assert np.all(operators.divergence(field) == 0.0)

    def test_discrete_gauss_identity(self, operators, annulus):

        grid = operators.build_grid(annulus, 16, 12)
        rng = np.random.default_rng(5)
        v_r = rng.normal(size=grid.face_shape)
        v_r[0] = 0.0
        v_r[-1] = 0.0
        field = Field(v_r=v_r, v_theta=rng.normal(size=grid.cell_shape),
                      v_z=rng.normal(size=grid.cell_shape), grid=grid)
        weights = grid.r_centers[:, None] * grid.h_r * grid.h_z
        assert abs(np.sum(weights * operators.divergence(field))) <= 1e-12 * 16 * 12

class TestLaplacian:

    def test_r_squared(self, operators, annulus):

        grid = operators.build_grid(annulus, 16, 8)
        values = np.broadcast_to(grid.r_centers[:, None] ** 2, grid.cell_shape).copy()
        np.testing.assert_allclose(operators.scalar_laplacian(values, grid), 4.0, rtol=1e-10)

    def test_r_squared_theta_grid(self, operators, annulus):

        grid = operators.build_grid(annulus, 16, 8, n_theta=4)
        values = np.broadcast_to(grid.radial(grid.r_centers) ** 2, grid.cell_shape).copy()
        np.testing.assert_allclose(operators.scalar_laplacian(values, grid), 4.0, rtol=1e-10)

class TestAxisymmetricResidual:

    def test_zero_state(self, operators, annulus):

        grid = operators.build_grid(annulus, 8, 6)
        report = operators.momentum_residual_axisym(Field.zeros(grid), PressureField.zeros(grid), 0.0, 1.0)
        assert report.linf == 0.0
        assert report.radial_l2 == report.azimuthal_l2 == report.axial_l2 == report.continuity_l2 == 0.0

    def test_missing_pressure(self, operators, annulus):

        grid = operators.build_grid(annulus, 8, 6)
        with pytest.raises(ValueError):
            operators.momentum_residual_axisym(Field.zeros(grid), None, 0.0, 1.0)

    def test_rejects_theta_grid(self, operators, annulus):

        grid = operators.build_grid(annulus, 8, 6, n_theta=4)
        with pytest.raises(ValueError):
            operators.momentum_residual_axisym(Field.zeros(grid), PressureField.zeros(grid), 0.0, 1.0)

    def test_second_order_on_generalized_flow(self, exact, operators, annulus, below_threshold, convergence_order):

        sizes = [32, 64, 128]
        errors = []
        for n in sizes:
            field, pressure = sampled_flow(exact, operators, annulus, below_threshold, n)
            errors.append(operators.momentum_residual_axisym(field, pressure, 0.5, 1.0).linf)
        assert errors[-1] < errors[0]
        assert convergence_order([1.0 / n for n in sizes], errors) >= 1.9

    def test_imposed_gradient_enters_axial_equation(self, exact, operators, annulus, below_threshold):

        field, pressure = sampled_flow(exact, operators, annulus, below_threshold, 16)
        matched = operators.residual_arrays(field, pressure, 1.0, 0.5)
        shifted = operators.residual_arrays(field, pressure, 1.0, 1.5)
        np.testing.assert_allclose(shifted.axial - matched.axial, 1.0, rtol=1e-12)
        np.testing.assert_array_equal(shifted.radial, matched.radial)

    def test_manufactured_azimuthal_profile(self, operators, annulus, convergence_order):

        sizes = [16, 32, 64]
        errors = []
        for n in sizes:
            grid = operators.build_grid(annulus, n, 4)
            r = grid.r_centers
            k = math.pi / annulus.gap
            profile = np.sin(k * (r - annulus.r_inner))
            field = Field.zeros(grid).replace(v_theta=np.repeat(profile[:, None], 4, axis=1))
            forcing = -(
                -k * k * profile
                + k * np.cos(k * (r - annulus.r_inner)) / r
                - profile / r**2
            )
            arrays = operators.residual_arrays(field, PressureField.zeros(grid), 1.0, 0.0, advective=False)
            errors.append(float(np.max(np.abs(arrays.azimuthal - forcing[:, None]))))
        assert convergence_order([1.0 / n for n in sizes], errors) >= 1.9

    def test_stokes_mode_drops_centrifugal_term(self, exact, operators, annulus, below_threshold):

        field, pressure = sampled_flow(exact, operators, annulus, below_threshold, 16)
        full = operators.residual_arrays(field, pressure, 1.0, 0.5)
        linear = operators.residual_arrays(field, pressure, 1.0, 0.5, advective=False)
        grid = field.grid
        r_in = grid.r_faces[1:-1][:, None]
        ut = 0.5 * (field.v_theta[:-1] + field.v_theta[1:])
        np.testing.assert_allclose(full.radial - linear.radial, -(ut**2) / r_in, atol=1e-13)

class TestGeneralResidual:

    def test_matches_axisymmetric_on_theta_constant_data(self, exact, operators, annulus, below_threshold):

        field, pressure = sampled_flow(exact, operators, annulus, below_threshold, 32)
        grid = field.grid
        rng = np.random.default_rng(8)
        v_r = field.v_r + 0.05 * rng.normal(size=grid.face_shape)
        v_r[0] = 0.0
        v_r[-1] = 0.0
        field = field.replace(v_r=v_r, v_z=field.v_z + 0.05 * rng.normal(size=grid.cell_shape))

        axisym = operators.momentum_residual_axisym(field, pressure, 0.5, 1.0)
        lifted, lifted_pressure = operators.extend_in_theta(field, pressure, 8)
        general = operators.momentum_residual_general(lifted, lifted_pressure, 1.0)
        for name, value in axisym.model_dump().items():
            assert getattr(general, name) == pytest.approx(value, rel=1e-13, abs=1e-14), name

    def test_second_order_on_generalized_flow(self, exact, operators, annulus, below_threshold, convergence_order):

        sizes = [32, 64, 128]
        errors = []
        for n in sizes:
            field, pressure = sampled_flow(exact, operators, annulus, below_threshold, n, n_theta=4)
            errors.append(operators.momentum_residual_general(field, pressure, 1.0).linf)
        assert convergence_order([1.0 / n for n in sizes], errors) >= 1.9

    def test_radial_coupling_in_azimuthal_equation(self, operators, annulus):

        nu, eps = 0.7, 1e-3
        grid = operators.build_grid(annulus, 16, 6, n_theta=16)
        theta = grid.theta
        bump = radial_bump(grid)
        v_r = eps * bump[:, None, None] * np.cos(theta)[None, :, None] * np.ones((1, 1, grid.n_z))
        field = Field.zeros(grid).replace(v_r=v_r)

        arrays = operators.residual_arrays(field, PressureField.zeros(grid), nu)
        r_c = grid.r_centers[:, None, None]
        bump_c = 0.5 * (bump[:-1] + bump[1:])[:, None, None]
        expected = 2.0 * nu * eps * np.sin(theta)[None, :, None] * bump_c / r_c**2
        np.testing.assert_allclose(arrays.azimuthal, np.broadcast_to(expected, grid.cell_shape), atol=1e-15)

    def test_rejects_axisymmetric_grid(self, operators, annulus):

        grid = operators.build_grid(annulus, 8, 6)
        with pytest.raises(ValueError):
            operators.momentum_residual_general(Field.zeros(grid), PressureField.zeros(grid), 1.0)

class TestPoincare:

    def test_fundamental_mode(self, operators, thresholds, annulus):

        grid = operators.build_grid(annulus, 64, 16, 4.0)
        s = (grid.r_faces - 1.0) / annulus.gap
        profile = np.sin(math.pi * s)
        profile[0] = profile[-1] = 0.0
        report = operators.poincare_check(profile, grid, 1.5)

        assert report.ratio_domain == pytest.approx(1.0 / math.pi, abs=1e-3)
        assert report.ratio_domain == pytest.approx(0.3183, abs=1e-3)
        assert report.bound == pytest.approx(math.sqrt(thresholds.poincare_constant(annulus)))
        assert report.bound == pytest.approx(0.4502, abs=1e-4)
        assert report.holds
        assert not report.degenerate

    def test_random_profiles(self, operators, annulus):

        grid = operators.build_grid(annulus, 32, 32, 4.0)
        s = (grid.r_faces - 1.0) / annulus.gap
        rng = np.random.default_rng(21)
        phase = 2.0 * math.pi * grid.z_centers / grid.z_period
        for _ in range(50):
            c = rng.normal(size=4)
            g = c[0] + c[1] * np.cos(phase) + c[2] * np.sin(2 * phase) + c[3] * np.cos(3 * phase)
            profile = (s * (1.0 - s))[:, None] * g[None, :]
            profile[0] = profile[-1] = 0.0
            for l_cut in (1.25, 1.5, 2.0):
                report = operators.poincare_check(profile, grid, l_cut)
                assert report.holds
                assert report.ratio_domain <= report.bound * report.tolerance_factor

    def test_zero_profile_is_degenerate(self, operators, annulus):

        grid = operators.build_grid(annulus, 16, 8, 4.0)
        report = operators.poincare_check(np.zeros(17), grid, 1.5)
        assert report.degenerate
        assert report.ratio_domain is None
        assert report.norm_f_domain == 0.0
        assert report.holds

    def test_rejects_wall_trace(self, operators, annulus):

        grid = operators.build_grid(annulus, 16, 8, 4.0)
        with pytest.raises(ValueError):
            operators.poincare_check(np.ones(17), grid, 1.5)

    @pytest.mark.parametrize("l_cut", [1.0, 0.5, 2.5])
    def test_rejects_bad_cutoff(self, operators, annulus, l_cut):

        grid = operators.build_grid(annulus, 16, 8, 4.0)
        with pytest.raises(ValueError):
            operators.poincare_check(np.zeros(17), grid, l_cut)

class TestThetaDiagnostics:

    def test_constant_field(self, exact, operators, annulus, below_threshold):

        field, _ = sampled_flow(exact, operators, annulus, below_threshold, 8, n_theta=8)
        assert operators.theta_asymmetry(field) == 0.0

    def test_cosine_perturbation(self, operators, annulus):

        grid = operators.build_grid(annulus, 8, 6, n_theta=16)
        wave = np.cos(grid.theta)[None, :, None] * np.ones(grid.cell_shape)
        base = Field.zeros(grid)
        small = operators.theta_asymmetry(base.replace(v_theta=1e-3 * wave))
        large = operators.theta_asymmetry(base.replace(v_theta=2e-3 * wave))
        assert small == pytest.approx(1e-3 * np.max(np.abs(np.sin(grid.theta))), rel=1e-12)
        assert large / small == pytest.approx(2.0, rel=1e-12)

    def test_rejects_axisymmetric_grid(self, operators, annulus):

        grid = operators.build_grid(annulus, 8, 6)
        with pytest.raises(ValueError):
            operators.theta_asymmetry(Field.zeros(grid))

    def test_spectral_second_derivative(self):

        theta = 2.0 * math.pi * np.arange(12) / 12
        values = np.sin(2.0 * theta)[None, :, None] * np.ones((3, 1, 2))
        np.testing.assert_allclose(theta_derivative(values, order=2), -4.0 * values, atol=1e-12)

    def test_extend_in_theta(self, exact, operators, annulus, below_threshold):

        field, pressure = sampled_flow(exact, operators, annulus, below_threshold, 8)
        lifted, lifted_pressure = operators.extend_in_theta(field, pressure, 6)
        assert lifted.grid.n_theta == 6
        assert lifted.v_r.shape == (9, 6, 8)
        np.testing.assert_array_equal(lifted.v_theta[:, 3, :], field.v_theta)
        np.testing.assert_array_equal(lifted_pressure.p[:, 5, :], pressure.p)
        assert lifted_pressure.axial_gradient == pressure.axial_gradient

def test_flow_config_wall_speeds(annulus):

    assert FlowConfig(viscosity=1.0, omega_inner=0.3, omega_outer=0.1).wall_speeds(annulus) == (0.3, 0.2)
