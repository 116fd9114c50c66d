import math

import numpy as np
import pytest

from covsim.environment import BasisSet, DensityField, Domain
from covsim.validation import DomainError, ValidationError


def make_field(sigma=0.1, rho=0.2, coeffs=None, resolution=100):
    domain = Domain(grid_resolution=resolution)
    basis = BasisSet.grid_layout(sigma=sigma, rho_trunc=rho)
    if coeffs is None:
        coeffs = np.ones(basis.size)
    return DensityField(domain, basis, coeffs)


class TestDomain:
    def test_grid_shape_and_area(self):
        d = Domain(grid_resolution=10)
        assert d.points.shape == (100, 2)
        assert d.cell_area == pytest.approx(1e-2)
        assert np.all(d.points >= 0.0) and np.all(d.points <= 1.0)

    def test_rejects_inverted_bounds(self):
        with pytest.raises(ValidationError):
            Domain(lower=[1.0, 0.0], upper=[0.0, 1.0])

    def test_integrate_constant_field(self):
        d = Domain(grid_resolution=37)
        assert d.integrate(np.ones(d.n_points)) == pytest.approx(1.0, abs=1e-12)

    def test_integrate_rejects_wrong_size(self):
        d = Domain(grid_resolution=10)
        with pytest.raises(ValidationError):
            d.integrate(np.ones(5))

    def test_clamp(self):
        d = Domain()
        out = d.clamp(np.array([[-0.5, 0.3], [1.7, 2.0]]))
        assert np.allclose(out, [[0.0, 0.3], [1.0, 1.0]])


class TestBasisSet:
    def test_grid_layout_centers(self):
        basis = BasisSet.grid_layout()
        assert basis.size == 25
        # 1-based component 7 is row 1, column 1; component 9 is row 1, column 3
        assert np.allclose(basis.means[6], [0.3, 0.3])
        assert np.allclose(basis.means[8], [0.7, 0.3])
        assert np.allclose(basis.means[0], [0.1, 0.1])
        assert np.allclose(basis.means[24], [0.9, 0.9])

    def test_peak_value_at_mean(self):
        basis = BasisSet.grid_layout(sigma=0.1, rho_trunc=0.2)
        vals = basis.evaluate(basis.means[6])
        expected = 1.0 / (0.1 * math.sqrt(2 * math.pi)) - basis.g_trunc
        assert vals[6] == pytest.approx(expected, rel=1e-12)

    def test_zero_at_truncation_radius(self):
        basis = BasisSet.grid_layout(sigma=0.1, rho_trunc=0.2)
        point = basis.means[6] + np.array([0.2, 0.0])
        assert basis.evaluate(point)[6] == 0.0

    def test_value_at_interior_distance(self):
        # independent scalar evaluation: (1/(0.1*sqrt(2pi))) * (e^-0.5 - e^-2)
        basis = BasisSet.grid_layout(sigma=0.1, rho_trunc=0.2)
        point = basis.means[6] + np.array([0.1, 0.0])
        assert basis.evaluate(point)[6] == pytest.approx(1.879797580059553, rel=1e-12)

    def test_nonnegative_everywhere(self, rng):
        basis = BasisSet.grid_layout(sigma=0.1, rho_trunc=0.2)
        pts = rng.random((500, 2))
        assert np.all(basis.evaluate(pts) >= 0.0)

    def test_continuity_at_truncation_edge(self):
        basis = BasisSet.grid_layout(sigma=0.1, rho_trunc=0.2)
        mu = basis.means[12]
        eps = 1e-7
        inside = basis.evaluate(mu + [0.2 - eps, 0.0])[12]
        assert 0.0 < inside < 1e-4

    def test_rejects_bad_sigma(self):
        with pytest.raises(ValidationError):
            BasisSet(means=np.zeros((1, 2)), sigma=0.0)


class TestDensityField:
    def test_zero_coeffs_zero_everywhere(self):
        field = make_field(coeffs=np.zeros(25))
        assert field.mass == 0.0
        assert field.eval_density([0.3, 0.3]) == 0.0

    def test_unit_coeff_peak(self):
        coeffs = np.zeros(25)
        coeffs[6] = 1.0
        field = make_field(coeffs=coeffs)
        expected = field.basis.peak - field.basis.g_trunc
        assert field.eval_density([0.3, 0.3]) == pytest.approx(expected, rel=1e-12)

    def test_separated_scenario_zero_in_void(self, separated_density):
        # every point at least rho_trunc from both active means reads zero
        assert separated_density.eval_density([0.9, 0.9]) == 0.0
        assert separated_density.eval_density([0.1, 0.9]) == 0.0

    def test_linearity_in_coeffs(self, rng):
        field = make_field(resolution=20)
        a = rng.random(25) * 10
        b = rng.random(25) * 5
        q = rng.random(2)
        fa = field.eval_density(q, a)
        fb = field.eval_density(q, b)
        fab = field.eval_density(q, a + b)
        assert fab == pytest.approx(fa + fb, rel=1e-12, abs=1e-12)

    def test_rejects_negative_coeffs(self):
        with pytest.raises(ValidationError):
            make_field(coeffs=np.full(25, -1.0))
        field = make_field(resolution=10)
        with pytest.raises(ValidationError):
            field.eval_density([0.5, 0.5], -np.ones(25))

    def test_rejects_point_outside_domain(self):
        field = make_field(resolution=10)
        with pytest.raises(DomainError):
            field.eval_basis([1.5, 0.5])

    def test_mass_positive_and_finite(self, separated_density):
        assert 0.0 < separated_density.mass < np.inf

    def test_single_bump_integral_matches_analytic(self):
        # interior disk: analytic integral of the truncated Gaussian
        sigma, rho = 0.1, 0.2
        coeffs = np.zeros(25)
        coeffs[12] = 1.0  # mean (0.5, 0.5), disk fully inside
        field = make_field(sigma=sigma, rho=rho, coeffs=coeffs, resolution=100)
        g_trunc = field.basis.g_trunc
        analytic = (sigma * math.sqrt(2 * math.pi) * (1 - math.exp(-(rho**2) / (2 * sigma**2)))
                    - g_trunc * math.pi * rho**2)
        assert analytic == pytest.approx(0.14889225320827354, rel=1e-12)
        assert field.mass == pytest.approx(analytic, rel=1e-2)

    def test_single_bump_integral_matches_fine_quadrature(self):
        # independent oracle: 1000x1000 midpoint quadrature of one component
        basis = BasisSet(means=np.array([[0.5, 0.5]]), sigma=0.1, rho_trunc=0.2)
        fine = Domain(grid_resolution=1000)
        oracle = fine.integrate(basis.evaluate(fine.points)[:, 0])
        field = DensityField(Domain(grid_resolution=100), basis, np.ones(1))
        assert field.mass == pytest.approx(oracle, rel=1e-2)

    def test_grid_refinement_stability(self):
        field = make_field(resolution=50)
        finer = field.with_resolution(100)
        assert finer.mass == pytest.approx(field.mass, rel=2e-2)

    def test_grid_weights_are_measure(self, separated_density):
        w = separated_density.grid_weights
        assert w.shape == (separated_density.domain.n_points,)
        assert w.sum() == pytest.approx(separated_density.mass, rel=1e-12)
