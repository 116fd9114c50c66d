import numpy as np
import pytest

from covsim.environment import BasisSet, DensityField, Domain


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def unit_domain():
    return Domain(grid_resolution=60)


@pytest.fixture
def basis_05():
    """The shipped 5x5 layout at sigma = 0.5."""
    return BasisSet.grid_layout(sigma=0.5)


@pytest.fixture
def separated_density(unit_domain, basis_05):
    """Two active bumps (components 7 and 9), zero elsewhere."""
    coeffs = np.zeros(25)
    coeffs[6] = coeffs[8] = 29960.0
    return DensityField(unit_domain, basis_05, coeffs)


@pytest.fixture
def random_density(unit_domain, basis_05, rng):
    return DensityField(unit_domain, basis_05, rng.random(25) * 100.0)


@pytest.fixture
def uniform_measure(unit_domain):
    """Exactly flat unit-density measure on the grid (points, weights)."""
    w = np.full(unit_domain.n_points, unit_domain.cell_area)
    return unit_domain.points, w
