"""Shared fixtures."""

import numpy as np
import pytest

from function_models import gaussian_bump
from models import QuadratureScheme, SpectralGrid
from utils import make_rng


@pytest.fixture
def rng() -> np.random.Generator:
    return make_rng(42, "tests")


@pytest.fixture
def scheme() -> QuadratureScheme:
    return QuadratureScheme()


@pytest.fixture
def small_scheme() -> QuadratureScheme:
    return QuadratureScheme(k_nodes=32, t_nodes=32, x_nodes=32, levi_nodes=32, radius=8.0)


@pytest.fixture
def small_grid() -> SpectralGrid:
    return SpectralGrid(jmax=4, dmu=0.05, mu_max=10.0)


@pytest.fixture
def upper_bump():
    return gaussian_bump("upper", {0: 1.0, 1: 0.5, -2: 0.25j}, 0.1, 0.5)


@pytest.fixture
def lower_bump():
    return gaussian_bump("lower", {0: 0.8, -1: 0.4, 2: 0.3j}, -0.1, 0.55)
