import numpy as np
import pytest

from hjflow.spaces import (
    double_well_potential,
    euclidean_space,
    quadratic_potential,
    quantile_space,
    quartic_potential,
)


@pytest.fixture(scope="session")
def ou():
    """Quadratic kappa = 1 potential on the line: every estimate has a closed form."""
    return euclidean_space(quadratic_potential(1.0))


@pytest.fixture(scope="session")
def quartic():
    return euclidean_space(quartic_potential(), sample_radius=1.5)


@pytest.fixture(scope="session")
def double_well():
    return euclidean_space(double_well_potential(-0.5), sample_radius=1.5)


@pytest.fixture(scope="session")
def quantile_ou():
    return quantile_space(quadratic_potential(1.0), grid_size=8)


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)
