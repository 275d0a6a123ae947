import math

import numpy as np
import pytest

from taylor_couette_lab.models import (
    Annulus,
    FlowConfig,
    GeneralizedTC,
    TCCoefficients,
)

def random_case(rng):

    r1 = rng.uniform(0.1, 3.0)
    annulus = Annulus(r_inner=r1, r_outer=r1 + rng.uniform(0.2, 3.0))
    config = FlowConfig(
        viscosity=rng.uniform(0.05, 5.0),
        omega_inner=rng.uniform(-2.0, 2.0),
        omega_outer=rng.uniform(-2.0, 2.0),
    )
    return annulus, config

class TestCoefficients:

    def test_reference_values(self, exact, annulus):

        coeffs = exact.tc_coefficients(annulus, FlowConfig(viscosity=1.0, omega_inner=1.0))
        assert coeffs.a_coef == pytest.approx(-1.0 / 3.0, rel=1e-14)
        assert coeffs.b_coef == pytest.approx(4.0 / 3.0, rel=1e-14)
        assert exact.eval_vtheta(coeffs, 1.5) == pytest.approx(0.3888889, abs=5e-8)

    def test_nondimensional_form_agrees(self, exact):

        rng = np.random.default_rng(11)
        for _ in range(100):
            annulus, config = random_case(rng)
            direct = exact.tc_coefficients(annulus, config)
            scaled = exact.tc_coefficients_nondimensional(annulus, config)
            r1sq, r2sq = annulus.r_inner**2, annulus.r_outer**2
            omega = max(abs(config.omega_inner), abs(config.omega_outer))
            scale_a = omega * (r1sq + r2sq) / (r2sq - r1sq)
            scale_b = 2.0 * omega * r1sq * r2sq / (r2sq - r1sq)
            assert abs(direct.a_coef - scaled.a_coef) <= 1e-12 * scale_a
            assert abs(direct.b_coef - scaled.b_coef) <= 1e-12 * scale_b

    def test_nondimensional_form_with_inner_wall_at_rest(self, exact, annulus):

        config = FlowConfig(viscosity=1.0, omega_inner=0.0, omega_outer=0.4)
        direct = exact.tc_coefficients(annulus, config)
        scaled = exact.tc_coefficients_nondimensional(annulus, config)
        assert scaled.a_coef == pytest.approx(direct.a_coef, rel=1e-12)
        assert scaled.b_coef == pytest.approx(direct.b_coef, rel=1e-12)

    def test_boundary_conditions(self, exact):

        rng = np.random.default_rng(12)
        for _ in range(100):
            annulus, config = random_case(rng)
            coeffs = exact.tc_coefficients(annulus, config)
            inner, outer = config.wall_speeds(annulus)
            scale = abs(coeffs.a_coef) * annulus.r_outer + abs(coeffs.b_coef) / annulus.r_inner
            assert abs(exact.eval_vtheta(coeffs, annulus.r_inner) - inner) <= 1e-12 * scale
            assert abs(exact.eval_vtheta(coeffs, annulus.r_outer) - outer) <= 1e-12 * scale
            assert coeffs.wall_speeds() == pytest.approx((inner, outer), abs=1e-12 * scale)

    def test_scaling_by_omega(self, exact, annulus, below_threshold):

        base = exact.tc_coefficients(annulus, below_threshold)
        doubled = exact.tc_coefficients(
            annulus,
            below_threshold.model_copy(update={"omega_inner": 0.6, "omega_outer": 0.2}),
        )
        assert doubled.a_coef == pytest.approx(base.scaled(2.0).a_coef, rel=1e-14)
        assert doubled.b_coef == pytest.approx(base.scaled(2.0).b_coef, rel=1e-14)

class TestAxialProfile:

    def test_reference_value(self, exact, annulus):

        gtc = exact.generalized(annulus, FlowConfig(viscosity=1.0), axial_gradient=4.0)
        assert exact.eval_vz(gtc, 1.5) == pytest.approx(-0.5048875, abs=1e-6)

    def test_nondimensional_profile_agrees(self, exact):

        rng = np.random.default_rng(13)
        for _ in range(100):
            annulus, config = random_case(rng)
            gtc = exact.generalized(annulus, config, axial_gradient=rng.uniform(-3.0, 3.0))
            r = np.linspace(annulus.r_inner, annulus.r_outer, 17)
            dimensional = exact.eval_vz(gtc, r)
            scaled = exact.eval_vz_nondimensional(gtc, r)
            assert np.max(np.abs(dimensional - scaled)) <= 1e-12 * np.max(np.abs(dimensional))

    def test_vanishes_on_walls(self, exact):

        rng = np.random.default_rng(14)
        for _ in range(100):
            annulus, config = random_case(rng)
            gtc = exact.generalized(annulus, config, axial_gradient=rng.uniform(-3.0, 3.0))
            scale = abs(gtc.axial_gradient) / gtc.viscosity * annulus.r_outer**2
            assert abs(exact.eval_vz(gtc, annulus.r_inner)) <= 1e-12 * scale
            assert abs(exact.eval_vz(gtc, annulus.r_outer)) <= 1e-12 * scale

    def test_axial_momentum_balance(self, exact):

        rng = np.random.default_rng(15)
        for _ in range(50):
            r1 = rng.uniform(0.5, 3.0)
            annulus = Annulus(r_inner=r1, r_outer=r1 + rng.uniform(0.2, 3.0))
            nu = rng.uniform(0.05, 5.0)
            a = rng.uniform(-3.0, 3.0)
            gtc = exact.generalized(annulus, FlowConfig(viscosity=nu), axial_gradient=a)

            h = 1e-3 * r1
            r = np.linspace(annulus.r_inner + 2 * h, annulus.r_outer - 2 * h, 11)
            left, mid, right = exact.eval_vz(gtc, r - h), exact.eval_vz(gtc, r), exact.eval_vz(gtc, r + h)
            operator = (right - 2.0 * mid + left) / h**2 + (right - left) / (2.0 * h * r)
            assert np.max(np.abs(nu * operator - a)) <= 1e-4 * abs(a)

    def test_basis_is_unit_gradient_profile(self, exact, annulus):

        gtc = exact.generalized(annulus, FlowConfig(viscosity=2.0), axial_gradient=0.5)
        r = np.linspace(1.0, 2.0, 9)
        np.testing.assert_allclose(
            exact.vz_basis(annulus, 2.0, r) * 0.5, exact.eval_vz(gtc, r), rtol=1e-14, atol=1e-16
        )

class TestPressure:

    def test_radial_balance(self, exact, annulus, below_threshold):

        gtc = exact.generalized(annulus, below_threshold, pressure_offset=0.7)
        r = np.linspace(1.1, 1.9, 9)
        eps = 1e-6
        slope = (exact.eval_radial_pressure(gtc, r + eps) - exact.eval_radial_pressure(gtc, r - eps)) / (2 * eps)
        np.testing.assert_allclose(slope, exact.eval_vtheta(gtc.coeffs, r) ** 2 / r, rtol=1e-7)

    def test_axial_part(self, exact, annulus, below_threshold):

        gtc = exact.generalized(annulus, below_threshold, axial_gradient=0.5)
        assert exact.eval_pressure(gtc, 1.5, 2.0) - exact.eval_pressure(gtc, 1.5, 0.0) == pytest.approx(1.0)

class TestSampling:

    def test_sample_on_grid(self, exact, operators, annulus, below_threshold):

        gtc = exact.generalized(annulus, below_threshold, axial_gradient=0.5)
        grid = operators.build_grid(annulus, 8, 6)
        field, pressure = exact.sample_on_grid(gtc, grid)

        assert not np.any(field.v_r)
        assert field.theta_walls == pytest.approx(below_threshold.wall_speeds(annulus))
        np.testing.assert_allclose(field.v_theta[:, 0], exact.eval_vtheta(gtc.coeffs, grid.r_centers))
        assert np.all(field.v_z == field.v_z[:, :1])
        assert pressure.axial_gradient == 0.5
        assert pressure.gauge == "closed_form"

    def test_sample_on_theta_grid(self, exact, operators, annulus, below_threshold):

        gtc = exact.generalized(annulus, below_threshold)
        grid = operators.build_grid(annulus, 8, 6, n_theta=4)
        field, pressure = exact.sample_on_grid(gtc, grid)
        assert field.v_theta.shape == (8, 4, 6)
        assert field.v_r.shape == (9, 4, 6)
        assert pressure.p.shape == (8, 4, 6)

    def test_annulus_mismatch(self, exact, operators, annulus, below_threshold):

        gtc = exact.generalized(annulus, below_threshold)
        other = operators.build_grid(Annulus(r_inner=1.0, r_outer=3.0), 8, 6)
        with pytest.raises(ValueError):
            exact.sample_on_grid(gtc, other)

    def test_radius_outside_annulus(self, exact, annulus, below_threshold):

        coeffs = exact.tc_coefficients(annulus, below_threshold)
        with pytest.raises(ValueError):
            exact.eval_vtheta(coeffs, 2.5)

    def test_generalized_requires_matching_annulus(self, annulus):

        coeffs = TCCoefficients(a_coef=0.0, b_coef=0.0, annulus=Annulus(r_inner=1.0, r_outer=3.0))
        with pytest.raises(ValueError):
            GeneralizedTC(coeffs=coeffs, annulus=annulus, viscosity=1.0)

    def test_canonical_flag(self, exact, annulus, below_threshold):

        assert exact.generalized(annulus, below_threshold).is_canonical
        assert not exact.generalized(annulus, below_threshold, axial_gradient=0.5).is_canonical
