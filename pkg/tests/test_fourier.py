import math

import numpy as np
import pytest

from exceptions import ValidationError
from fourier import (
    act_L_spectral,
    export_spectral_csv,
    extend_homogeneous,
    fourier_A,
    gaussian_spectrum,
    import_spectral_csv,
    inverse_fourier_A,
    k_rotate,
    parity_split,
    restrict_to_circle,
    separable_spectrum,
    spectral_norm,
    spectral_slice,
)
from function_models import act_G_left, act_L_right, as_row_function, gaussian_bump, l2_norm
from models import GroupElement, KSeries, SpectralGrid

COEFFS = {0: 1.0, 1: -0.5, 3: 0.25j}
POINTS = np.array([[0.9, 0.3], [-0.4, 1.1], [0.2, -0.8]])


@pytest.fixture
def wide_grid() -> SpectralGrid:
    return SpectralGrid(jmax=4, dmu=0.05, mu_max=20.0)


@pytest.mark.parametrize("side", ["upper", "lower"])
def test_transform_of_gaussian_bump_has_closed_form(side, wide_grid):
    h = gaussian_bump(side, COEFFS, 0.3, 0.5)
    H = fourier_A(h, wide_grid)
    expected = gaussian_spectrum(side, COEFFS, 0.3, 0.5, wide_grid)
    assert np.max(np.abs(H.coeffs - expected.coeffs)) < 1e-8 * np.max(np.abs(expected.coeffs))


@pytest.mark.parametrize("side", ["upper", "lower"])
def test_parseval(side, wide_grid):
    h = gaussian_bump(side, COEFFS, -0.2, 0.45)
    assert spectral_norm(fourier_A(h, wide_grid)) == pytest.approx(l2_norm(h), rel=1e-6)


@pytest.mark.parametrize("side", ["upper", "lower"])
def test_inverse_transform_recovers_function(side, wide_grid):
    h = gaussian_bump(side, COEFFS, 0.1, 0.5)
    restored = inverse_fourier_A(fourier_A(h, wide_grid))
    assert restored(POINTS) == pytest.approx(h(POINTS), rel=1e-5, abs=1e-8)


@pytest.mark.parametrize("side", ["upper", "lower"])
def test_right_levi_action_becomes_a_phase(side, wide_grid):
    h = gaussian_bump(side, COEFFS, 0.0, 0.5)
    ell = GroupElement.diagonal(-math.exp(0.3))
    lhs = fourier_A(act_L_right(ell, h), wide_grid)
    rhs = act_L_spectral(fourier_A(h, wide_grid), ell)
    assert np.allclose(lhs.coeffs, rhs.coeffs, atol=1e-7)


def test_rotation_becomes_k_type_phase(wide_grid):
    h = gaussian_bump("upper", COEFFS, 0.0, 0.5)
    alpha = 0.9
    lhs = fourier_A(act_G_left(GroupElement.rotation(alpha), h), wide_grid)
    rhs = k_rotate(fourier_A(h, wide_grid), alpha)
    assert np.allclose(lhs.coeffs, rhs.coeffs, atol=1e-8)


@pytest.mark.parametrize("side", ["upper", "lower"])
def test_homogeneous_extension_restricts_back(side):
    c = KSeries(jmax=3, coeffs=[0.1, 0, 0.5j, 1.0, -0.3, 0, 0.2])
    h = extend_homogeneous(1.3, c, side)
    assert np.allclose(restrict_to_circle(h, 3).coeffs, c.coeffs, atol=1e-12)


def test_spectral_slice_lies_in_the_principal_series(small_grid):
    H = gaussian_spectrum("upper", {0: 1.0, 2: 0.5}, 0.0, 0.5, small_grid)
    index = small_grid.zero_index + 30
    h = spectral_slice(H, index)
    mu = H.mu[index]
    point = np.array([0.3, 0.7])
    assert h(3.0 * point) == pytest.approx(3.0 ** (-1 - 1j * mu) * h(point))


def test_parity_split(small_grid):
    H = gaussian_spectrum("lower", {0: 1.0, 1: 0.5, -2: 0.2j, 3: -1.0}, 0.2, 0.4, small_grid)
    even, odd = parity_split(H)
    assert np.allclose((even + odd).coeffs, H.coeffs)
    assert np.all(even.coeffs[:, small_grid.js % 2 == 1] == 0)
    assert np.all(odd.coeffs[:, small_grid.js % 2 == 0] == 0)


def test_separable_spectrum(small_grid):
    H = separable_spectrum("upper", small_grid, lambda mu: mu * np.exp(-mu ** 2), {0: 1.0, -1: 2.0})
    assert H.coeffs[small_grid.zero_index, small_grid.jmax] == 0
    assert H.coeffs[small_grid.zero_index + 20, small_grid.jmax - 1] == pytest.approx(2.0 * np.exp(-1.0))


def test_k_type_outside_grid_rejected(small_grid):
    with pytest.raises(ValidationError):
        gaussian_spectrum("upper", {7: 1.0}, 0.0, 0.5, small_grid)


def test_csv_roundtrip(tmp_path):
    grid = SpectralGrid(jmax=2, dmu=0.25, mu_max=2.0)
    H = gaussian_spectrum("lower", {0: 1.0, -1: 0.5j, 2: 0.1}, 0.3, 0.6, grid)
    path = tmp_path / "spectrum.csv"
    export_spectral_csv(H, str(path))
    restored = import_spectral_csv(str(path), "lower")
    assert restored.grid.jmax == 2
    assert restored.grid.n_mu == grid.n_mu
    assert np.allclose(restored.coeffs, H.coeffs, atol=1e-15)


def test_rejects_row_model(small_grid, upper_bump):
    with pytest.raises(ValidationError):
        fourier_A(as_row_function(upper_bump), small_grid)
