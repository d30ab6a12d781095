import math

import numpy as np
import pytest
from hypothesis import given, settings

from exceptions import ValidationError
from function_models import (
    LeviFunction,
    act_G_left,
    act_L_module,
    act_L_right,
    act_Sc_G,
    as_row_function,
    atom_from_json,
    atom_to_json,
    convolve_G,
    convolve_L,
    export_grid_csv,
    gaussian_bump,
    hc_seminorm,
    hc_seminorm_first_order,
    homogeneous_atom,
    import_grid_csv,
    invert_cosets,
    l2_inner,
    l2_norm,
    levi_coordinates,
    materialize,
    model_direction,
    norm_gmodn,
    star,
    xi_gmodn,
    xi_plane,
)
from group_core import GroupBump
from models import GroupElement
from strategies import group_elements, k_series_coeffs

POINTS = np.array([[0.9, 0.3], [-0.4, 1.1], [0.2, -0.8], [-1.3, -0.5]])


def polar_points(side, u, theta):
    ox, oy = model_direction(side, np.asarray(theta))
    r = np.exp(np.asarray(u))
    return np.stack([r * ox, r * oy], axis=-1)


class TestConstructors:
    @pytest.mark.parametrize("side", ["upper", "lower"])
    def test_gaussian_bump_norm(self, side):
        width = 0.4
        h = gaussian_bump(side, {0: 1.0, 3: 0.5j}, 0.2, width)
        expected = 2 * math.pi * width * math.sqrt(math.pi) * 1.25
        assert l2_norm(h) ** 2 == pytest.approx(expected, rel=1e-8)

    def test_normalized_bump(self):
        h = gaussian_bump("lower", {-1: 2.0, 2: 1.0 + 1.0j}, 0.0, 0.6, normalized=True)
        assert l2_norm(h) == pytest.approx(1.0, rel=1e-8)

    def test_empty_coefficients_rejected(self):
        with pytest.raises(ValidationError):
            gaussian_bump("upper", {})

    @pytest.mark.parametrize("side,sign", [("upper", -1), ("lower", 1)])
    def test_homogeneous_atom_degree(self, side, sign):
        mu = 1.7
        h = homogeneous_atom(mu, {0: 1.0, 2: 0.3}, side)
        point = np.array([0.6, -0.2])
        assert h(2.5 * point) == pytest.approx(2.5 ** (-1 + sign * 1j * mu) * h(point))

    def test_xi_on_plane(self):
        assert xi_plane("upper")(POINTS) == pytest.approx(xi_gmodn(POINTS))
        assert norm_gmodn(np.array([[0.5, 0.0]]))[0] == pytest.approx(2.0)

    def test_atom_json_roundtrip(self, upper_bump):
        restored = atom_from_json(atom_to_json(upper_bump))
        assert restored(POINTS) == pytest.approx(upper_bump(POINTS))

    def test_grid_has_no_json_descriptor(self, upper_bump, small_scheme):
        with pytest.raises(ValidationError):
            atom_to_json(materialize(upper_bump, small_scheme, jmax=4))


class TestGrids:
    @pytest.mark.parametrize("side", ["upper", "lower"])
    def test_materialize_interpolates(self, side):
        h = gaussian_bump(side, {0: 1.0, 1: -0.5, -2: 0.25j}, 0.1, 0.5)
        grid = materialize(h, jmax=4)
        assert grid(POINTS) == pytest.approx(h(POINTS), rel=1e-4, abs=1e-8)

    def test_grid_reproduces_its_nodes(self, upper_bump, small_scheme):
        grid = materialize(upper_bump, small_scheme, jmax=4)
        points = polar_points("upper", grid.u_nodes[158:163], np.zeros(5))
        exact = upper_bump(points)
        assert grid(points) == pytest.approx(exact, rel=1e-10, abs=1e-12)

    def test_csv_roundtrip(self, lower_bump, small_scheme, tmp_path):
        grid = materialize(lower_bump, small_scheme, jmax=3)
        path = tmp_path / "grid.csv"
        export_grid_csv(grid, str(path))
        restored = import_grid_csv(str(path), "lower", jmax=3)
        assert np.allclose(restored.coeffs, grid.coeffs, atol=1e-12)
        assert np.allclose(restored.u_nodes, grid.u_nodes)


class TestActions:
    @settings(max_examples=10, deadline=None)
    @given(group_elements(1.0), group_elements(1.0))
    def test_left_action_is_a_homomorphism(self, g1, g2):
        h = gaussian_bump("upper", {0: 1.0, 1: 0.5}, 0.0, 0.5)
        lhs = act_G_left(g1, act_G_left(g2, h))(POINTS)
        rhs = act_G_left(g1 @ g2, h)(POINTS)
        assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-14)

    @pytest.mark.parametrize("side", ["upper", "lower"])
    def test_rotation_rotates_the_model(self, side):
        h = gaussian_bump(side, {0: 1.0, 1: 0.5, -3: 0.2j}, 0.0, 0.5)
        alpha = 0.7
        theta = np.array([0.1, 1.5, 4.0])
        moved = act_G_left(GroupElement.rotation(alpha), h)(polar_points(side, 0.2, theta))
        assert moved == pytest.approx(h(polar_points(side, 0.2, theta - alpha)))

    def test_left_action_is_unitary(self, upper_bump):
        g = GroupElement.rotation(0.3) @ GroupElement.diagonal(1.5) @ GroupElement.upper_unipotent(0.4)
        assert l2_norm(act_G_left(g, upper_bump)) == pytest.approx(l2_norm(upper_bump), rel=1e-6)

    def test_right_levi_action(self, upper_bump, lower_bump):
        a = -1.7
        ell = GroupElement.diagonal(a)
        assert act_L_right(ell, upper_bump)(POINTS) == pytest.approx(upper_bump(POINTS / a) / abs(a))
        assert act_L_right(ell, lower_bump)(POINTS) == pytest.approx(lower_bump(POINTS * a) * abs(a))

    @pytest.mark.parametrize("side", ["upper", "lower"])
    def test_module_action_matches_direct_integral(self, side, small_scheme):
        h = gaussian_bump(side, {0: 1.0, 1: 0.5, 2: -0.3j}, 0.0, 0.5)
        f = LeviFunction.gaussian(0.2, 0.3, 1.0 + 0.5j, signs=(-1.0, 1.0))
        lhs = act_L_module(h, f, small_scheme, jmax=4)(POINTS)
        rhs = np.zeros(len(POINTS), dtype=complex)
        for sign, s, weighted in f.nodes(small_scheme):
            for si, wi in zip(s, weighted):
                rhs += wi * act_L_right(GroupElement.diagonal(sign * math.exp(si)), h)(POINTS)
        assert lhs == pytest.approx(rhs, rel=1e-4, abs=1e-8)

    def test_test_function_action_approximates_identity(self, upper_bump, small_scheme):
        phi = GroupBump(width=0.03, kind="gaussian").normalized(small_scheme)
        moved = act_Sc_G(phi, upper_bump, small_scheme)(POINTS[:2])
        assert moved == pytest.approx(upper_bump(POINTS[:2]), rel=2e-2)

    def test_left_action_rejects_row_model(self, upper_bump):
        with pytest.raises(ValidationError):
            act_G_left(GroupElement.identity(), as_row_function(upper_bump))

    @pytest.mark.slow
    def test_convolution_acts_as_composition(self, upper_bump, small_scheme):
        scheme = small_scheme.model_copy(update={"k_nodes": 20, "t_nodes": 20, "x_nodes": 20})
        phi1 = GroupBump(left=GroupElement.rotation(0.4) @ GroupElement.diagonal(1.3), width=0.3, kind="gaussian")
        phi2 = GroupBump(right=GroupElement.upper_unipotent(0.5), width=0.3, kind="gaussian")
        lhs = act_Sc_G(convolve_G(phi1, phi2, scheme), upper_bump, scheme)(POINTS[:2])
        rhs = act_Sc_G(phi1, act_Sc_G(phi2, upper_bump, scheme), scheme)(POINTS[:2])
        assert np.max(np.abs(lhs - rhs)) <= 1e-2 * np.max(np.abs(rhs))


class TestRowModels:
    @pytest.mark.parametrize("side", ["upper", "lower"])
    def test_inversion_roundtrip(self, side):
        h = gaussian_bump(side, {0: 1.0, 1: 0.4j}, 0.1, 0.5)
        assert invert_cosets(as_row_function(h))(POINTS) == pytest.approx(h(POINTS))

    def test_row_model_is_g_inverse(self, upper_bump):
        g = GroupElement.rotation(0.4) @ GroupElement.diagonal(1.3) @ GroupElement.upper_unipotent(-0.6)
        row = as_row_function(upper_bump)
        second_row_of_inverse = g.inverse().matrix[1]
        assert row(second_row_of_inverse) == pytest.approx(upper_bump(g.matrix[:, 0]))

    def test_star_is_an_involution(self, lower_bump):
        assert star(star(lower_bump))(POINTS) == pytest.approx(lower_bump(POINTS))


class TestLevi:
    def test_gaussian_has_declared_mass(self, scheme):
        f = LeviFunction.gaussian(0.3, 0.2, 2.0 - 1.0j)
        total = sum(np.sum(weighted) for _, _, weighted in f.nodes(scheme))
        assert total == pytest.approx(2.0 - 1.0j, rel=1e-12)

    def test_convolution_of_gaussians(self, scheme):
        f1 = LeviFunction.gaussian(0.2, 0.3, 1.0, signs=(1.0,))
        f2 = LeviFunction.gaussian(-0.5, 0.4, 2.0, signs=(-1.0,))
        product = convolve_L(f1, f2, scheme)
        expected = LeviFunction.gaussian(-0.3, 0.5, 2.0, signs=(-1.0,))
        s = np.linspace(-1.5, 1.0, 7)
        assert product.evaluate(-1.0, s) == pytest.approx(expected.evaluate(-1.0, s), rel=1e-10)
        assert np.allclose(product.evaluate(1.0, s), 0.0)

    def test_star(self):
        f = LeviFunction.gaussian(0.4, 0.3, 1.0 + 2.0j)
        ell = GroupElement.diagonal(math.exp(-0.25))
        assert f.star()(ell) == pytest.approx(np.conj(f(ell.inverse())))

    def test_levi_coordinates(self):
        assert levi_coordinates(GroupElement.diagonal(-math.exp(0.5))) == pytest.approx((-1.0, 0.5))
        with pytest.raises(ValidationError):
            levi_coordinates(GroupElement.rotation(0.1))


class TestSeminorms:
    def test_bump_is_harish_chandra(self, upper_bump):
        estimate = hc_seminorm(upper_bump, 4)
        assert not estimate.divergent
        assert estimate.value > 0

    def test_xi_itself_fails_with_positive_p(self):
        assert hc_seminorm(xi_plane("upper"), 2).divergent
        assert not hc_seminorm(xi_plane("upper"), 0).divergent

    def test_negative_exponent_rejected(self, upper_bump):
        with pytest.raises(ValidationError):
            hc_seminorm(upper_bump, -1)

    def test_first_order_seminorm(self, upper_bump):
        estimate = hc_seminorm_first_order(upper_bump, 4)
        assert not estimate.divergent
        doubled = hc_seminorm_first_order(gaussian_bump("upper", {0: 2.0, 1: 1.0, -2: 0.5j}, 0.1, 0.5), 4)
        assert doubled.value == pytest.approx(2.0 * estimate.value, rel=1e-9)

    def test_first_order_sees_oscillation_of_atoms(self):
        atom = homogeneous_atom(1.0, {0: 1.0}, "upper")
        assert not hc_seminorm(atom, 0).divergent
        assert hc_seminorm_first_order(atom, 1).divergent
        with pytest.raises(ValidationError):
            hc_seminorm_first_order(atom, -1)


@settings(max_examples=10, deadline=None)
@given(k_series_coeffs(4), k_series_coeffs(4))
def test_inner_product_is_hermitian(c1, c2):
    h1 = gaussian_bump("upper", c1, 0.0, 0.5)
    h2 = gaussian_bump("upper", c2, 0.3, 0.4)
    assert l2_inner(h1, h2) == pytest.approx(np.conj(l2_inner(h2, h1)), abs=1e-12)
