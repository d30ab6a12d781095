import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from exceptions import ValidationError
from group_core import (
    GroupBump,
    cartan,
    cartan_parameter,
    from_nln,
    group_norm,
    haar_density,
    integrate_bi_invariant,
    integrate_G,
    integrate_NLN,
    iwasawa,
    modular_delta,
    nln_coordinates,
    random_group_element,
    spherical_average,
    square_integrability_profile,
    xi,
    xi_decay_constant,
    xi_diagonal,
)
from models import GroupElement
from strategies import group_elements


def xi_closed_form(t: float) -> float:
    """(2/pi) e^-t K(1 - e^-4t) with K the complete elliptic integral in the parameter m."""
    with mpmath.workdps(30):
        return float(2 / mpmath.pi * mpmath.exp(-t) * mpmath.ellipk(1 - mpmath.exp(-4 * t)))


class TestDecompositions:
    @settings(max_examples=50, deadline=None)
    @given(group_elements())
    def test_upper_iwasawa_reconstructs(self, g):
        factors = iwasawa(g, "upper")
        assert np.allclose(factors.product, g.matrix, atol=1e-10)
        assert factors.a.entries[0] > 0

    @settings(max_examples=50, deadline=None)
    @given(group_elements())
    def test_lower_iwasawa_reconstructs(self, g):
        factors = iwasawa(g, "lower")
        assert np.allclose(factors.product, g.matrix, atol=1e-10)
        assert factors.n.entries[1] == 0.0

    @settings(max_examples=50, deadline=None)
    @given(group_elements())
    def test_cartan_reconstructs(self, g):
        factors = cartan(g)
        assert np.allclose(factors.product, g.matrix, atol=1e-10)
        assert factors.t >= 0
        assert 0 <= factors.phi1 < math.pi

    @pytest.mark.parametrize("g", [
        GroupElement.diagonal(math.exp(0.5)) @ GroupElement.rotation(1.0),
        GroupElement.diagonal(1.4) @ GroupElement.rotation(-1.1),
        GroupElement.rotation(math.pi),
        GroupElement.identity(),
    ])
    def test_cartan_with_trivial_left_rotation(self, g):
        factors = cartan(g)
        assert np.allclose(factors.product, g.matrix, atol=1e-12)
        assert 0 <= factors.phi1 < math.pi

    @settings(max_examples=50, deadline=None)
    @given(st.floats(min_value=-2.0, max_value=2.0), st.floats(min_value=-3.0, max_value=3.0))
    def test_lower_iwasawa_of_an(self, t, x):
        g = GroupElement.diagonal(math.exp(t)) @ GroupElement.upper_unipotent(x)
        size = math.exp(-2 * t) + x ** 2 * math.exp(2 * t)
        a = iwasawa(g, "lower").a.matrix
        assert np.allclose(a, np.diag([size ** -0.5, size ** 0.5]), rtol=1e-10, atol=0.0)

    def test_cartan_parameter_matches_svd(self, rng):
        for _ in range(20):
            g = random_group_element(rng, 1.5)
            assert cartan_parameter(g.matrix) == pytest.approx(cartan(g).t, abs=1e-8)

    def test_nln_roundtrip(self):
        mats = from_nln(np.array([0.3, -1.2]), np.array([1.0, -1.0]), np.array([0.4, -0.7]), np.array([2.0, 0.1]))
        y, sign, s, x = nln_coordinates(mats)
        assert np.allclose(y, [0.3, -1.2])
        assert np.allclose(sign, [1.0, -1.0])
        assert np.allclose(s, [0.4, -0.7])
        assert np.allclose(x, [2.0, 0.1])

    def test_determinant_is_validated(self):
        with pytest.raises(ValidationError):
            GroupElement(entries=(2.0, 0.0, 0.0, 2.0))

    def test_near_unit_determinant_is_renormalized(self):
        g = GroupElement(entries=(1.0 + 1e-10, 0.0, 0.0, 1.0))
        assert np.linalg.det(g.matrix) == pytest.approx(1.0, abs=1e-14)


class TestModularAndNorm:
    def test_group_norm_of_diagonal(self):
        assert group_norm(GroupElement(entries=(2.0, 0.0, 0.0, 0.5))) == pytest.approx(2.0)
        assert group_norm(GroupElement.diagonal(0.25)) == pytest.approx(4.0)

    def test_group_norm_is_rotation_invariant(self):
        g = GroupElement.rotation(0.4) @ GroupElement.diagonal(3.0) @ GroupElement.rotation(1.1)
        assert group_norm(g) == pytest.approx(3.0)

    def test_submultiplicative(self, rng):
        for _ in range(100):
            g1, g2 = random_group_element(rng, 1.0), random_group_element(rng, 1.0)
            assert group_norm(g1 @ g2) <= group_norm(g1) * group_norm(g2) * (1 + 1e-12)

    def test_modular_delta_on_iwasawa_coordinates(self):
        g = GroupElement.rotation(0.7) @ GroupElement.diagonal(math.exp(0.3)) @ GroupElement.upper_unipotent(1.5)
        assert modular_delta(g, "upper") == pytest.approx(math.exp(0.6))
        h = GroupElement.rotation(0.2) @ GroupElement.diagonal(math.exp(0.3)) @ GroupElement.lower_unipotent(-0.8)
        assert modular_delta(h, "lower") == pytest.approx(math.exp(-0.6))

    def test_haar_density(self):
        assert haar_density(np.array([0.0, 0.5])) == pytest.approx([1.0, math.e])


class TestXi:
    def test_identity(self, scheme):
        assert xi(GroupElement.identity(), scheme) == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("t", [0.1, 0.5, 1.0, 2.5, 5.0])
    def test_elliptic_closed_form(self, scheme, t):
        assert xi_diagonal(np.array([t]), scheme)[0] == pytest.approx(xi_closed_form(t), rel=1e-10)

    def test_bi_k_invariance(self, scheme):
        a = GroupElement.diagonal(math.exp(0.8))
        g = GroupElement.rotation(1.3) @ a @ GroupElement.rotation(-0.4)
        assert xi(g, scheme) == pytest.approx(xi(a, scheme), rel=1e-12)

    @settings(max_examples=25, deadline=None)
    @given(group_elements(3.0))
    def test_inversion_invariance(self, g):
        assert xi(g.inverse()) == pytest.approx(xi(g), rel=1e-12)
        assert xi(g.inverse(), side="lower") == pytest.approx(xi(g, side="lower"), rel=1e-12)

    def test_sides_agree(self, scheme):
        g = GroupElement.rotation(0.3) @ GroupElement.diagonal(2.0) @ GroupElement.upper_unipotent(0.5)
        assert xi(g, scheme, "lower") == pytest.approx(xi(g, scheme, "upper"), rel=1e-10)

    def test_spherical_function_identity(self, scheme, rng):
        for _ in range(3):
            g1, g2 = random_group_element(rng, 0.7), random_group_element(rng, 0.7)
            lhs = spherical_average(g1, g2, scheme)
            assert lhs == pytest.approx(xi(g1, scheme) * xi(g2, scheme), rel=1e-6)

    def test_decay_constant_below_four_over_pi(self, scheme):
        constant = xi_decay_constant(np.linspace(0.0, 20.0, 201), scheme)
        assert constant < 4 / math.pi
        assert constant > 0.5

    def test_square_integrability_profile_levels_off(self, scheme):
        values = square_integrability_profile([4.0, 8.0, 16.0, 32.0], scheme, p=4.0)
        assert all(b >= a for a, b in zip(values, values[1:]))
        assert values[-1] - values[-2] < values[1] - values[0]


class TestHaarIntegration:
    def test_iwasawa_and_nln_agree(self, scheme):
        bump = GroupBump(left=GroupElement.rotation(0.2), width=0.15, kind="gaussian")
        assert integrate_NLN(bump, scheme) == pytest.approx(integrate_G(bump, scheme), rel=1e-6)

    def test_left_and_right_invariance(self, scheme):
        bump = GroupBump(width=0.15, kind="gaussian")
        base = integrate_G(bump, scheme)
        g = GroupElement.rotation(0.5) @ GroupElement.diagonal(1.4) @ GroupElement.upper_unipotent(0.3)
        assert integrate_G(bump.translated(left=g), scheme) == pytest.approx(base, rel=1e-6)
        assert integrate_G(bump.translated(right=g), scheme) == pytest.approx(base, rel=1e-6)

    def test_normalized_bump_has_unit_mass(self, scheme):
        bump = GroupBump(width=0.3, kind="gaussian").normalized(scheme)
        assert integrate_G(bump, scheme).real == pytest.approx(1.0, rel=1e-8)

    def test_bi_invariant_formula_matches_iwasawa(self, scheme):
        def profile(t):
            return np.exp(-(2 * np.cosh(2 * t) - 2))

        def phi(g):
            return np.exp(-(np.sum(g ** 2, axis=(-2, -1)) - 2))

        radial = integrate_bi_invariant(profile, 6.0, scheme)
        assert integrate_G(phi, scheme).real == pytest.approx(radial, rel=1e-5)

    def test_gaussian_of_the_norm(self, scheme):
        def phi(g):
            return np.exp(-(np.sum(g ** 2, axis=(-2, -1)) - 2))

        assert integrate_G(phi, scheme).real == pytest.approx(math.pi ** 2, rel=1e-8)

    def test_nln_needs_a_box(self, scheme):
        with pytest.raises(ValidationError):
            integrate_NLN(lambda g: np.ones(g.shape[:-2]), scheme)
