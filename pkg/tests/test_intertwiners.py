import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from exceptions import PoleError, ValidationError
from fourier import gaussian_spectrum
from function_models import gaussian_bump, homogeneous_atom, l2_inner, materialize
from intertwiners import (
    antisymmetric_part,
    apply_c,
    apply_c_inverse,
    c_function,
    c_function_reciprocal,
    c_table,
    complex_gamma,
    intertwine_I,
    intertwine_J_numeric,
    intertwine_J_points,
    j_decay_constant,
    matrix_coefficient,
    matrix_coefficient_direct,
    normalized_W,
    reciprocal_gamma,
    roundtrip_error,
    symmetric_part,
    w_scalars,
)
from models import GroupElement, SpectralFunction, SpectralGrid

POINTS = np.array([[0.8, 0.6], [-0.5, 1.3]])


def c_mpmath(sign: str, j: int, mu: complex) -> complex:
    nu = -1j * mu if sign == "plus" else 1j * mu
    value = (mpmath.sqrt(mpmath.pi) * mpmath.gamma(nu / 2) * mpmath.gamma((1 + nu) / 2)
             / (mpmath.gamma((1 + nu + j) / 2) * mpmath.gamma((1 + nu - j) / 2)))
    return complex(value)


class TestGamma:
    @settings(max_examples=60, deadline=None)
    @given(st.floats(-4.9, 8.0), st.floats(-10.0, 10.0))
    def test_matches_mpmath(self, re, im):
        z = complex(re, im)
        if abs(z - round(re)) < 1e-3 and round(re) <= 0:
            return
        exact = complex(mpmath.gamma(z))
        assert complex_gamma(z) == pytest.approx(exact, rel=1e-10)

    @pytest.mark.parametrize("y", [0.5, 1.0, 2.0])
    def test_modulus_on_imaginary_axis(self, y):
        assert abs(complex_gamma(1j * y)) ** 2 == pytest.approx(math.pi / (y * math.sinh(math.pi * y)), rel=1e-12)

    @pytest.mark.parametrize("z", [0.0, -1.0, -4.0])
    def test_poles(self, z):
        with pytest.raises(PoleError):
            complex_gamma(z)
        assert reciprocal_gamma(z) == 0


class TestCFunction:
    def test_odd_value_at_zero(self):
        assert c_function("plus", 1, 0.0) == pytest.approx(math.pi)
        assert c_function("minus", -1, 0.0) == pytest.approx(math.pi)

    @pytest.mark.parametrize("j", [0, 2, -4])
    def test_even_pole_at_zero(self, j):
        with pytest.raises(PoleError):
            c_function("plus", j, 0.0)
        assert c_function_reciprocal("plus", j, 0.0) == 0

    def test_pole_residue(self):
        mu = 1e-3
        assert mu * c_function("plus", 0, mu) == pytest.approx(2j, abs=1e-2)

    @pytest.mark.parametrize("j", range(-5, 6))
    @pytest.mark.parametrize("sign", ["plus", "minus"])
    def test_matches_gamma_quotient(self, sign, j):
        for mu in (1.3, -0.7, 2.0 + 0.4j):
            assert c_function(sign, j, mu) == pytest.approx(c_mpmath(sign, j, mu), rel=1e-10)

    def test_conjugation(self):
        mu = np.linspace(-10.0, 10.0, 40)
        for j in range(-6, 7):
            assert np.allclose(np.conj(c_function("minus", j, mu)), c_function("plus", j, mu), rtol=1e-12)

    def test_reciprocal(self):
        mu = np.array([-3.0, 0.5, 4.0 + 1.0j])
        for j in range(-3, 4):
            assert np.allclose(c_function("plus", j, mu) * c_function_reciprocal("plus", j, mu), 1.0)

    def test_table_flags_even_poles(self, tmp_path):
        table = c_table("plus", SpectralGrid(jmax=4, dmu=0.5, mu_max=5.0))
        zero = table.mu.size // 2
        assert table.mu[zero] == 0.0
        assert np.array_equal(table.poles[zero], table.js % 2 == 0)
        assert not table.poles[zero + 1].any()
        path = tmp_path / "c.csv"
        table.to_csv(str(path))
        assert path.read_text().splitlines()[0] == "side,j,mu,re,im,pole"

    def test_apply_c_and_inverse(self, small_grid):
        H = gaussian_spectrum("upper", {1: 1.0, 2: 0.5}, 0.0, 0.5, small_grid)
        back = apply_c(apply_c_inverse(H, "plus"), "plus")
        mask = np.ones(small_grid.n_mu, dtype=bool)
        mask[small_grid.zero_index] = False
        assert np.allclose(back.coeffs[mask], H.coeffs[mask])


class TestNumericJ:
    @pytest.mark.parametrize("j", [0, 1, 2, 3])
    def test_plus_multiplies_by_c(self, j, scheme):
        mu = 1.0 + 0.5j
        h = homogeneous_atom(mu, {j: 1.0}, "lower")
        expected = c_function("plus", j, mu) * homogeneous_atom(mu, {j: 1.0}, "upper")(POINTS)
        values = [intertwine_J_numeric("plus", h, p, scheme) for p in POINTS]
        assert values == pytest.approx(list(expected), rel=1e-6)

    @pytest.mark.parametrize("j", [0, -1, 2])
    def test_minus_multiplies_by_c(self, j, scheme):
        mu = 2.0 - 0.7j
        h = homogeneous_atom(mu, {j: 1.0}, "upper")
        expected = c_function("minus", j, mu) * homogeneous_atom(mu, {j: 1.0}, "lower")(POINTS)
        values = [intertwine_J_numeric("minus", h, p, scheme) for p in POINTS]
        assert values == pytest.approx(list(expected), rel=1e-6)

    def test_independent_of_the_point_on_the_line(self, lower_bump, scheme):
        point = POINTS[0]
        assert intertwine_J_numeric("plus", lower_bump, point, scheme, shift=0.7) == pytest.approx(
            intertwine_J_numeric("plus", lower_bump, point, scheme), rel=1e-9)

    def test_wrong_side_rejected(self, upper_bump):
        with pytest.raises(ValidationError):
            intertwine_J_numeric("plus", upper_bump, POINTS[0])

    def test_origin_rejected(self, lower_bump):
        with pytest.raises(ValidationError):
            intertwine_J_numeric("plus", lower_bump, (0.0, 0.0))

    @pytest.mark.parametrize("u", [-5.0, 0.0, 5.0])
    def test_trapezoid_matches_adaptive_far_from_the_unit_circle(self, lower_bump, scheme, u):
        points = math.exp(u) * np.array([[0.6, 0.8], [-0.96, 0.28]])
        grid = materialize(lower_bump, scheme, jmax=8)
        adaptive = np.array([intertwine_J_numeric("plus", lower_bump, p, scheme) for p in points])
        trapezoid = intertwine_J_points("plus", grid, points, scheme)
        # |x| J h(x) stays of order one at every radius
        assert math.exp(u) * np.max(np.abs(trapezoid - adaptive)) < 1e-5

    def test_decays_like_inverse_radius(self, lower_bump, scheme):
        direction = np.array([[0.6, 0.8]])
        near = j_decay_constant("plus", lower_bump, 50.0 * direction, scheme)
        far = j_decay_constant("plus", lower_bump, 100.0 * direction, scheme)
        assert 0.5 < far / near < 2.0


@pytest.mark.slow
class TestInverse:
    @pytest.fixture
    def wide_grid(self):
        return SpectralGrid(jmax=4, dmu=0.05, mu_max=20.0)

    @pytest.mark.parametrize("sign,side", [("plus", "upper"), ("minus", "lower")])
    def test_roundtrip(self, sign, side, wide_grid):
        h = gaussian_bump(side, {0: 1.0, 1: 0.5, -2: 0.3j}, 0.1, 0.5, normalized=True)
        assert roundtrip_error(sign, h, wide_grid) < 1e-3

    def test_roundtrip_far_from_the_unit_circle(self, wide_grid):
        h = gaussian_bump("upper", {0: 1.0}, 0.0, 0.5, normalized=True)
        inverse = intertwine_I("plus", h, wide_grid)
        u = np.array([-6.0, -3.0, 0.0, 1.0, 3.0, 6.0, 10.0])
        points = np.exp(u)[:, None] * np.array([[0.6, 0.8]])
        back = np.exp(u) * intertwine_J_points("plus", inverse, points)
        original = np.exp(u) * h(points)
        assert np.max(np.abs(back - original)) < 1e-3 * np.max(np.abs(original))

    def test_adjointness(self, wide_grid):
        h = gaussian_bump("upper", {1: 1.0, -2: 0.5j}, 0.5, 0.6, normalized=True)
        k = gaussian_bump("lower", {3: 0.7, 0: 0.2}, -0.4, 0.45, normalized=True)
        forward = l2_inner(k, intertwine_I("plus", h, wide_grid))
        backward = l2_inner(intertwine_I("minus", k, wide_grid), h)
        assert abs(forward - backward) < 1e-3

    def test_wrong_side_rejected(self, lower_bump, small_grid):
        with pytest.raises(ValidationError):
            intertwine_I("plus", lower_bump, small_grid)


class TestW:
    @pytest.fixture
    def spectrum(self, rng, small_grid):
        shape = (small_grid.n_mu, 2 * small_grid.jmax + 1)
        return SpectralFunction(side="upper", grid=small_grid,
                                coeffs=rng.normal(size=shape) + 1j * rng.normal(size=shape))

    def test_involution(self, spectrum):
        assert np.allclose(normalized_W(normalized_W(spectrum)).coeffs, spectrum.coeffs, atol=1e-12)

    def test_unitary(self, spectrum):
        assert normalized_W(spectrum).norm() == pytest.approx(spectrum.norm(), rel=1e-12)

    @pytest.mark.parametrize("side", ["upper", "lower"])
    def test_identity_at_zero(self, side, small_grid):
        assert np.allclose(w_scalars(side, small_grid)[small_grid.zero_index], 1.0)

    def test_scalars_are_unimodular(self, small_grid):
        assert np.allclose(np.abs(w_scalars("lower", small_grid)), 1.0)

    def test_split_is_a_decomposition(self, spectrum):
        sym, anti = symmetric_part(spectrum), antisymmetric_part(spectrum)
        assert np.allclose((sym + anti).coeffs, spectrum.coeffs)
        assert np.allclose(normalized_W(sym).coeffs, sym.coeffs, atol=1e-12)
        assert np.allclose(normalized_W(anti).coeffs, -anti.coeffs, atol=1e-12)


class TestMatrixCoefficients:
    def test_identity_gives_pointwise_inner_product(self, small_grid, scheme):
        X = gaussian_spectrum("upper", {0: 1.0, 2: 0.5j}, 0.2, 0.6, small_grid)
        Y = gaussian_spectrum("upper", {0: 0.3, 2: 1.0, -1: 0.4}, -0.1, 0.5, small_grid)
        values = matrix_coefficient(X, Y, GroupElement.identity(), scheme)
        expected = np.sum(np.conj(X.coeffs) * Y.coeffs, axis=1)
        assert np.allclose(values, expected, atol=1e-10)

    @pytest.mark.parametrize("side", ["upper", "lower"])
    @pytest.mark.parametrize("g", [
        GroupElement.rotation(0.5) @ GroupElement.diagonal(1.4) @ GroupElement.rotation(-1.1),
        GroupElement.diagonal(1.4) @ GroupElement.rotation(-1.1),
    ])
    def test_cartan_reduction_matches_direct_action(self, side, g, scheme):
        grid = SpectralGrid(jmax=3, dmu=0.5, mu_max=3.0)
        X = gaussian_spectrum(side, {0: 1.0, 1: 0.5, -2: 0.2j}, 0.1, 0.6, grid)
        Y = gaussian_spectrum(side, {0: 0.4, -1: 1.0, 2: 0.3}, -0.2, 0.5, grid)
        reduced = matrix_coefficient(X, Y, g, scheme)
        for index in (0, grid.zero_index, grid.n_mu - 2):
            assert reduced[index] == pytest.approx(matrix_coefficient_direct(X, Y, g, index), rel=1e-7, abs=1e-10)

    def test_mismatched_sides_rejected(self, small_grid):
        X = gaussian_spectrum("upper", {0: 1.0}, 0.0, 0.5, small_grid)
        Y = gaussian_spectrum("lower", {0: 1.0}, 0.0, 0.5, small_grid)
        with pytest.raises(ValidationError):
            matrix_coefficient(X, Y, GroupElement.identity())
