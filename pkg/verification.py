"""
Verification Module

Named suites of numerical identity checks, run by the command line:
- group-core: Xi identities, Haar integration formulas, decompositions
- intertwiner: c-function values, numeric J against c, J I = id, adjointness, W
- frobenius: pairing, counit, unit kernels and the Bernstein unit
- wave-packet: Plancherel densities, symmetry lemma, B and its adjoint form
- second-adjoint: both triangle identities

Every check produces a CheckResult whose tolerance is the base tolerance
times the configured tolerance scale. Sampled points come from generators
seeded per suite, so a fixed seed and config give identical reports.
"""

import logging
import math
from typing import Callable, Dict, List, Optional

import numpy as np
from scipy.integrate import quad
from scipy.special import ellipkm1, gamma as scipy_gamma

from adjunction import (
    balanced_image,
    bernstein_unit,
    counit_by_restriction,
    frobenius_counit,
    frobenius_pairing,
    frobenius_unit_kernel,
    hc_wave_condition_check,
    plancherel_density,
    plancherel_weighted_pairing,
    residual_report,
    unit_kernel_action,
    verify_triangle_first,
    verify_triangle_second,
    wave_packet_B,
    wave_packet_B_adjoint,
    wave_packet_decay,
    wave_packet_pairing,
)
from exceptions import ConfigError, HarmonicAnalysisError
from fourier import gaussian_spectrum, parity_split, separable_spectrum
from function_models import (
    LeviFunction,
    PlaneFunction,
    act_G_left,
    act_L_module,
    act_Sc_G,
    as_row_function,
    convolve_L,
    gaussian_bump,
    homogeneous_atom,
    l2_inner,
    model_direction,
    seminorm_from_ratio,
    xi_gmodn,
)
from group_core import (
    GroupBump,
    cartan,
    from_nln,
    group_norm,
    integrate_G,
    integrate_NLN,
    iwasawa,
    random_group_element,
    random_group_matrices,
    spherical_average,
    square_integrability_profile,
    xi,
    xi_decay_constant,
    xi_diagonal,
)
from intertwiners import (
    antisymmetric_part,
    c_function,
    complex_gamma,
    intertwine_I,
    intertwine_J_numeric,
    normalized_W,
    roundtrip_error,
    symmetric_part,
    w_scalars,
)
from models import (
    BumpSpec,
    CheckResult,
    GroupElement,
    QuadratureScheme,
    SpectralFunction,
    SpectralGrid,
    SuiteConfig,
    SuiteReport,
)
from utils import make_rng, measure_time

logger = logging.getLogger(__name__)

SUITES = ("group-core", "intertwiner", "frobenius", "wave-packet", "second-adjoint")

# Base tolerances before tolerance_scale.
TOL_EXACT = 1e-12
TOL_IDENTITY = 1e-10
TOL_SPHERICAL = 1e-6
TOL_J_VS_C = 1e-4
TOL_ROUNDTRIP = 1e-3
TOL_ADJOINT = 1e-3
TOL_FROBENIUS = 1e-3
TOL_BIMODULE = 1e-4
TOL_KERNEL = 1e-8
TOL_WAVE = 1e-6
TOL_EQUIVARIANCE = 1e-4
TOL_TRIANGLE = 1e-2

CONVERGENT_MU = (1.0 + 0.5j, 2.0 + 0.7j)


def _reduced(scheme: QuadratureScheme, nodes: int, radius: float, **update) -> QuadratureScheme:
    """Scheme for nested quadratures: fewer group nodes and a shorter radius."""
    values = {
        "k_nodes": min(scheme.k_nodes, nodes),
        "t_nodes": min(scheme.t_nodes, nodes),
        "x_nodes": min(scheme.x_nodes, nodes),
        "radius": min(scheme.radius, radius),
    }
    values.update(update)
    return scheme.model_copy(update=values)


def _reduced_grid(grid: SpectralGrid, jmax: int, mu_max: float) -> SpectralGrid:
    mu_max = min(grid.mu_max, mu_max)
    mu_max = grid.dmu * round(mu_max / grid.dmu)
    return SpectralGrid(jmax=min(grid.jmax, jmax), dmu=grid.dmu, mu_max=mu_max, oversample=grid.oversample)


def scaled_report(name: str, anchor: str, residuals: np.ndarray, scale: float, tolerance: float,
                  grid_params: Optional[Dict] = None) -> CheckResult:
    """CheckResult for residuals that should vanish, measured against a given scale."""
    residuals = np.abs(np.asarray(residuals, dtype=complex)).reshape(-1)
    scale = scale if scale > 0 else 1.0
    sup = float(np.max(residuals)) / scale if residuals.size else 0.0
    l2 = float(np.sqrt(np.mean(residuals ** 2))) / scale if residuals.size else 0.0
    return CheckResult(name=name, anchor=anchor, residual_sup=sup, residual_l2=l2, tolerance=tolerance,
                       samples=int(residuals.size), grid_params=grid_params or {}, passed=sup <= tolerance)


def failed_report(name: str, error: HarmonicAnalysisError, tolerance: float = 0.0) -> CheckResult:
    return CheckResult(name=name, anchor="raised " + type(error).__name__, residual_sup=math.inf,
                       residual_l2=math.inf, tolerance=tolerance, samples=0,
                       grid_params={"error": error.message, **error.details}, passed=False)


class VerificationRunner:
    """
    Runs the checks of one or more suites under a SuiteConfig.

    A check that raises a library error is recorded as failed with the
    error message in its grid parameters; configuration errors propagate.
    """

    def __init__(self, config: SuiteConfig):
        self.config = config
        self.scheme = config.effective_scheme()
        self.grid = config.grid
        self.results: List[CheckResult] = []

    def tolerance(self, base: float) -> float:
        return base * self.config.tolerance_scale

    def rng(self, stream: str) -> np.random.Generator:
        return make_rng(self.config.seed, stream)

    def scheme_params(self, scheme: Optional[QuadratureScheme] = None) -> Dict:
        scheme = scheme or self.scheme
        return {"k_nodes": scheme.k_nodes, "t_nodes": scheme.t_nodes, "x_nodes": scheme.x_nodes,
                "radius": scheme.radius}

    def _run(self, name: str, check: Callable[[], CheckResult]) -> None:
        logger.info(f"running {name}")
        try:
            with measure_time(f"check {name}"):
                result = check()
        except ConfigError:
            raise
        except HarmonicAnalysisError as e:
            logger.error(f"{name} raised {type(e).__name__}: {e.message}")
            result = failed_report(name, e)
        status = "pass" if result.passed else "FAIL"
        logger.info(f"{name}: {status} (residual {result.residual_sup:.3e}, tolerance {result.tolerance:.1e})")
        self.results.append(result)

    def run(self) -> SuiteReport:
        """
        Run the configured suite ("all" runs every suite in turn).

        Returns:
            SuiteReport: checks sorted by name in the report, plus the effective config
        """
        suites = SUITES if self.config.suite == "all" else (self.config.suite,)
        for suite in suites:
            checks = getattr(self, _SUITE_METHODS[suite])()
            with measure_time(f"suite {suite}"):
                for name, check in checks:
                    self._run(name, check)
        # output paths differ between otherwise identical runs
        config = self.config.model_dump(mode="json", exclude={"json_path", "csv_path"})
        return SuiteReport(suite=self.config.suite, seed=self.config.seed, config=config, checks=self.results)

    # -----------------------------------------------------------------------
    # group-core
    # -----------------------------------------------------------------------

    def group_core_checks(self) -> List:
        return [
            ("xi-at-identity", self.check_xi_identity),
            ("xi-spherical-identity", self.check_spherical_identity),
            ("xi-gmodn-spherical-lemma", self.check_gmodn_lemma),
            ("xi-elliptic-closed-form", self.check_xi_closed_form),
            ("xi-decay-bound", self.check_xi_decay),
            ("haar-nln-integration", self.check_nln_integration),
            ("haar-translation-invariance", self.check_translation_invariance),
            ("norm-submultiplicative", self.check_norm),
            ("decomposition-reconstruction", self.check_decompositions),
            ("xi-square-integrability-profile", self.check_square_integrability),
        ]

    def check_xi_identity(self) -> CheckResult:
        value = xi(GroupElement.identity(), self.scheme)
        return scaled_report("xi-at-identity", "Xi(e) = 1", [value - 1.0], 1.0,
                             self.tolerance(TOL_EXACT), {"k_log_step": self.scheme.k_log_step})

    def check_spherical_identity(self) -> CheckResult:
        rng = self.rng("group-core/spherical")
        lhs, rhs = [], []
        for _ in range(10):
            g1, g2 = random_group_element(rng, 0.7), random_group_element(rng, 0.7)
            lhs.append(spherical_average(g1, g2, self.scheme))
            rhs.append(xi(g1, self.scheme) * xi(g2, self.scheme))
        return residual_report("xi-spherical-identity", "average over K of Xi(g1 k g2) = Xi(g1) Xi(g2)",
                               np.array(lhs), np.array(rhs), self.tolerance(TOL_SPHERICAL),
                               {"k_nodes": self.scheme.k_nodes, "k_log_step": self.scheme.k_log_step})

    def check_gmodn_lemma(self) -> CheckResult:
        rng = self.rng("group-core/gmodn")
        lhs, rhs = [], []
        for _ in range(10):
            g = random_group_element(rng, 0.7).matrix
            angle = rng.uniform(0.0, 2.0 * math.pi)
            point = math.exp(rng.normal(0.0, 0.5)) * np.array([math.cos(angle), math.sin(angle)])

            def integrand(theta: float) -> float:
                k = np.array([[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]])
                return float(xi_gmodn(g @ k @ point))

            average = quad(integrand, 0.0, 2.0 * math.pi, epsabs=0.0, epsrel=1e-12, limit=200)[0]
            lhs.append(average / (2.0 * math.pi))
            rhs.append(xi(GroupElement.from_matrix(g), self.scheme) * float(xi_gmodn(point)))
        return residual_report("xi-gmodn-spherical-lemma",
                               "average over K of Xi_G/N(g k x) = Xi(g) Xi_G/N(x)",
                               np.array(lhs), np.array(rhs), self.tolerance(TOL_SPHERICAL),
                               {"k_log_step": self.scheme.k_log_step})

    def check_xi_closed_form(self) -> CheckResult:
        ts = np.linspace(0.0, 6.0, 13)
        exact = (2.0 / math.pi) * np.exp(-ts) * ellipkm1(np.exp(-4.0 * ts))
        return residual_report("xi-elliptic-closed-form", "Xi(a_t) = (2/pi) e^-t K(1 - e^-4t)",
                               xi_diagonal(ts, self.scheme), exact, self.tolerance(TOL_IDENTITY),
                               {"k_log_step": self.scheme.k_log_step, "t_max": 6.0})

    def check_xi_decay(self) -> CheckResult:
        constant = xi_decay_constant(np.linspace(0.0, 20.0, 81), self.scheme)
        return scaled_report("xi-decay-bound", "Xi(a_t) <= C (1 + t) e^-t with C <= 4/pi",
                             [max(0.0, constant - 4.0 / math.pi)], 1.0, self.tolerance(TOL_IDENTITY),
                             {"fitted_constant": constant, "t_max": 20.0})

    def _nln_bumps(self, rng: np.random.Generator) -> List[GroupBump]:
        bumps = []
        for sign in (1.0, 1.0, 1.0, 1.0, -1.0):
            y, s, x = rng.uniform(-0.3, 0.3, 3)
            center = from_nln(np.array(y), np.array(sign), np.array(s), np.array(x))
            bumps.append(GroupBump(left=GroupElement.from_matrix(center), width=0.15, kind="gaussian"))
        return bumps

    def check_nln_integration(self) -> CheckResult:
        bumps = self._nln_bumps(self.rng("group-core/nln"))
        lhs = np.array([integrate_NLN(bump, self.scheme) for bump in bumps])
        rhs = np.array([integrate_G(bump, self.scheme) for bump in bumps])
        return residual_report("haar-nln-integration",
                               "integral over G = integral over N- x L x N+ with delta+(l)",
                               lhs, rhs, self.tolerance(TOL_SPHERICAL), self.scheme_params())

    def check_translation_invariance(self) -> CheckResult:
        rng = self.rng("group-core/translation")
        bump = GroupBump(width=0.15, kind="gaussian")
        base = integrate_G(bump, self.scheme)
        moved = []
        for _ in range(4):
            left, right = random_group_element(rng, 0.5), random_group_element(rng, 0.5)
            moved.append(integrate_G(bump.translated(left=left, right=right), self.scheme))
        return residual_report("haar-translation-invariance", "Haar measure is left and right invariant",
                               np.array(moved), np.full(len(moved), base), self.tolerance(TOL_SPHERICAL),
                               self.scheme_params())

    def check_norm(self) -> CheckResult:
        rng = self.rng("group-core/norm")
        first, second = random_group_matrices(rng, 1000, 1.0), random_group_matrices(rng, 1000, 1.0)
        norm1 = np.linalg.norm(first, ord=2, axis=(-2, -1))
        norm2 = np.linalg.norm(second, ord=2, axis=(-2, -1))
        product = np.linalg.norm(first @ second, ord=2, axis=(-2, -1))
        excess = np.maximum(product - norm1 * norm2, 0.0) / (norm1 * norm2)
        sample = GroupElement.from_matrix(first[0])
        consistency = abs(group_norm(sample) - norm1[0]) / norm1[0]
        return scaled_report("norm-submultiplicative", "|g1 g2| <= |g1| |g2|",
                             np.append(excess, consistency), 1.0, self.tolerance(TOL_IDENTITY * 100),
                             {"pairs": 1000})

    def check_decompositions(self) -> CheckResult:
        rng = self.rng("group-core/decompositions")
        lhs, rhs = [], []
        for _ in range(20):
            g = random_group_element(rng, 1.0)
            for side in ("upper", "lower"):
                lhs.append(iwasawa(g, side).product)
                rhs.append(g.matrix)
            lhs.append(cartan(g).product)
            rhs.append(g.matrix)
        return residual_report("decomposition-reconstruction", "g = k a n and g = k1 a k2",
                               np.array(lhs), np.array(rhs), self.tolerance(TOL_IDENTITY), {"samples": 20})

    def check_square_integrability(self) -> CheckResult:
        radii = (4.0, 8.0, 16.0, 32.0)
        values = square_integrability_profile(radii, self.scheme, p=4.0)
        increments = np.diff(np.concatenate([[0.0], values]))
        growth = float(np.max(increments[1:] / increments[:-1])) if np.all(increments > 0) else math.inf
        residual = max(0.0, -float(np.min(increments))) + max(0.0, growth - 1.0)
        return scaled_report("xi-square-integrability-profile",
                             "Xi^2 (1 + log|g|)^-p is integrable: increments shrink",
                             [residual], 1.0, 0.0,
                             {"radii": list(radii), "values": [float(v) for v in values], "p": 4.0})

    # -----------------------------------------------------------------------
    # intertwiner
    # -----------------------------------------------------------------------

    def intertwiner_checks(self) -> List:
        return [
            ("gamma-lanczos", self.check_gamma),
            ("c-plus-j1-at-zero", self.check_c_at_zero),
            ("c-plus-j0-pole", self.check_c_pole),
            ("c-conjugation", self.check_c_conjugation),
            ("j-numeric-vs-c", self.check_j_against_c),
            ("j-inverse-roundtrip", self.check_roundtrip),
            ("i-adjointness", self.check_i_adjoint),
            ("w-involution", self.check_w_involution),
            ("w-unitary", self.check_w_unitary),
            ("w-identity-at-zero", self.check_w_at_zero),
        ]

    def check_gamma(self) -> CheckResult:
        re = np.linspace(-4.75, 6.25, 23)
        im = np.linspace(-10.0, 10.0, 21)
        z = (re[:, None] + 1j * im[None, :]).reshape(-1)
        exact = scipy_gamma(z)
        relative = np.abs(complex_gamma(z) - exact) / np.abs(exact)
        return scaled_report("gamma-lanczos", "Lanczos Gamma with reflection agrees with scipy.special.gamma",
                             relative, 1.0, self.tolerance(TOL_IDENTITY), {"strip": [-4.75, 6.25, -10.0, 10.0]})

    def check_c_at_zero(self) -> CheckResult:
        return residual_report("c-plus-j1-at-zero", "c+^(1)(0) = pi", [c_function("plus", 1, 0.0)], [math.pi],
                               self.tolerance(TOL_IDENTITY), {})

    def check_c_pole(self) -> CheckResult:
        mus = np.array([0.01, 0.005])
        values = mus * np.asarray(c_function("plus", 0, mus))
        ratios = np.abs(values - 2j) / (2.0 * mus)
        return scaled_report("c-plus-j0-pole", "|mu c+^(0)(mu) - 2i| <= 2|mu| near the pole",
                             ratios, 1.0, self.tolerance(1.0), {"mu": mus.tolist()})

    def check_c_conjugation(self) -> CheckResult:
        mu = np.linspace(-10.0, 10.0, 81)
        lhs, rhs = [], []
        for j in range(-8, 9):
            nodes = mu[mu != 0.0] if j % 2 == 0 else mu
            lhs.append(np.conj(np.asarray(c_function("minus", j, nodes))))
            rhs.append(np.asarray(c_function("plus", j, nodes)))
        return residual_report("c-conjugation", "conj c-^(j)(mu) = c+^(j)(mu) for real mu",
                               np.concatenate(lhs), np.concatenate(rhs), self.tolerance(TOL_IDENTITY),
                               {"jmax": 8, "mu_max": 10.0})

    def check_j_against_c(self) -> CheckResult:
        points = np.array([[0.8, 0.6], [-0.5, 1.3]])
        lhs, rhs = [], []
        for j in range(4):
            for mu in CONVERGENT_MU:
                for sign, source, target, param in (("plus", "lower", "upper", mu),
                                                    ("minus", "upper", "lower", mu.conjugate())):
                    h = homogeneous_atom(param, {j: 1.0}, source)
                    expected = c_function(sign, j, param) * homogeneous_atom(param, {j: 1.0}, target)(points)
                    lhs.extend(intertwine_J_numeric(sign, h, p, self.scheme) for p in points)
                    rhs.extend(expected)
        return residual_report("j-numeric-vs-c", "J multiplies the K-type j atom of V(mu) by c^(j)(mu)",
                               np.array(lhs), np.array(rhs), self.tolerance(TOL_J_VS_C),
                               {"mu": [[m.real, m.imag] for m in CONVERGENT_MU], "j": [0, 1, 2, 3]})

    def _test_bumps(self, side: str) -> List[PlaneFunction]:
        return [
            gaussian_bump(side, {0: 1.0}, 0.0, 0.5, normalized=True),
            gaussian_bump(side, {1: 1.0, -2: 0.5j}, 0.5, 0.6, normalized=True),
            gaussian_bump(side, {3: 0.7, 0: 0.2}, -0.4, 0.45, normalized=True),
        ]

    def check_roundtrip(self) -> CheckResult:
        errors = [roundtrip_error("plus", h, self.grid, self.scheme) for h in self._test_bumps("upper")]
        errors += [roundtrip_error("minus", h, self.grid, self.scheme) for h in self._test_bumps("lower")]
        return scaled_report("j-inverse-roundtrip", "J I h = h in L2", errors, 1.0,
                             self.tolerance(TOL_ROUNDTRIP),
                             {"jmax": self.grid.jmax, "dmu": self.grid.dmu, "mu_max": self.grid.mu_max,
                              "log_step": self.scheme.log_step})

    def check_i_adjoint(self) -> CheckResult:
        residuals = []
        for h, k in zip(self._test_bumps("upper"), reversed(self._test_bumps("lower"))):
            forward = l2_inner(k, intertwine_I("plus", h, self.grid, self.scheme), self.scheme)
            backward = l2_inner(intertwine_I("minus", k, self.grid, self.scheme), h, self.scheme)
            residuals.append(forward - backward)
        return scaled_report("i-adjointness", "<k, I+ h> = <I- k, h>", residuals, 1.0,
                             self.tolerance(TOL_ADJOINT), {"pairs": 3, "normalized": True})

    def _random_spectrum(self, side: str, grid: SpectralGrid, stream: str) -> SpectralFunction:
        rng = self.rng(stream)
        shape = (grid.n_mu, 2 * grid.jmax + 1)
        coeffs = rng.normal(size=shape) + 1j * rng.normal(size=shape)
        return SpectralFunction(side=side, grid=grid, coeffs=coeffs)

    def check_w_involution(self) -> CheckResult:
        grid = _reduced_grid(self.grid, 8, 10.0)
        lhs, rhs = [], []
        for side in ("upper", "lower"):
            H = self._random_spectrum(side, grid, f"intertwiner/w-{side}")
            lhs.append(normalized_W(normalized_W(H)).coeffs)
            rhs.append(H.coeffs)
        return residual_report("w-involution", "W W = id", np.array(lhs), np.array(rhs),
                               self.tolerance(TOL_IDENTITY), {"jmax": grid.jmax, "mu_max": grid.mu_max})

    def check_w_unitary(self) -> CheckResult:
        grid = _reduced_grid(self.grid, 8, 10.0)
        lhs, rhs = [], []
        for side in ("upper", "lower"):
            H = self._random_spectrum(side, grid, f"intertwiner/w-{side}")
            lhs.append(normalized_W(H).norm())
            rhs.append(H.norm())
        return residual_report("w-unitary", "|W H| = |H|", np.array(lhs), np.array(rhs),
                               self.tolerance(TOL_IDENTITY), {"jmax": grid.jmax, "mu_max": grid.mu_max})

    def check_w_at_zero(self) -> CheckResult:
        grid = _reduced_grid(self.grid, 8, 10.0)
        values = np.concatenate([w_scalars(side, grid)[grid.zero_index] for side in ("upper", "lower")])
        return scaled_report("w-identity-at-zero", "W(0) = id", values - 1.0, 1.0,
                             self.tolerance(TOL_IDENTITY), {"jmax": grid.jmax})

    # -----------------------------------------------------------------------
    # frobenius
    # -----------------------------------------------------------------------

    def frobenius_checks(self) -> List:
        return [
            ("frobenius-pairing-at-identity", self.check_pairing_identity),
            ("frobenius-bimodule", self.check_bimodule),
            ("frobenius-g-invariance", self.check_g_invariance),
            ("counit-by-restriction", self.check_counit_restriction),
            ("counit-balanced", self.check_counit_balanced),
            ("unit-kernel-invariance", self.check_kernel_invariance),
            ("unit-kernel-reproducing", self.check_kernel_reproducing),
            ("bernstein-balanced-image", self.check_bernstein),
        ]

    @property
    def pairing_jmax(self) -> int:
        # Translated bumps spread over more K-types; G-invariance uses the full grid.
        return min(self.grid.jmax, 8)

    @staticmethod
    def _levi_points() -> List[GroupElement]:
        return [GroupElement.diagonal(sign * math.exp(s)) for sign in (1.0, -1.0) for s in (-0.6, 0.0, 0.5)]

    def check_pairing_identity(self) -> CheckResult:
        coeffs, width = {0: 1.0, 1: 0.5j}, 0.5
        h = gaussian_bump("upper", coeffs, 0.2, width)
        pairing = frobenius_pairing(h, h, self.scheme, self.pairing_jmax)
        exact = 2.0 * math.pi * width * math.sqrt(math.pi) * sum(abs(c) ** 2 for c in coeffs.values())
        return residual_report("frobenius-pairing-at-identity", "<<h, h>>(e) = |h|^2",
                               [pairing(GroupElement.identity())], [exact], self.tolerance(TOL_SPHERICAL),
                               {"log_step": self.scheme.log_step})

    def check_bimodule(self) -> CheckResult:
        jmax = self.pairing_jmax
        h1 = gaussian_bump("upper", {0: 1.0, 1: 0.5}, 0.1, 0.5)
        h2 = gaussian_bump("upper", {0: 0.7j, 1: 1.0, 2: 0.3}, -0.2, 0.55)
        f1 = LeviFunction.gaussian(0.2, 0.3, 1.0, signs=(1.0, -1.0))
        f2 = LeviFunction.gaussian(-0.1, 0.4, 0.5 + 0.5j, signs=(1.0, -1.0))
        moved = frobenius_pairing(act_L_module(h1, f1, self.scheme, jmax),
                                  act_L_module(h2, f2, self.scheme, jmax), self.scheme, jmax)
        pairing = frobenius_pairing(h1, h2, self.scheme, jmax)
        expected = convolve_L(f2, convolve_L(f1.star(), pairing, self.scheme), self.scheme)
        ells = self._levi_points()
        return residual_report("frobenius-bimodule", "<<h1 f1, h2 f2>> = f1* * <<h1, h2>> * f2",
                               np.array([moved(ell) for ell in ells]),
                               np.array([expected(ell) for ell in ells]),
                               self.tolerance(TOL_BIMODULE), {"jmax": jmax, "levi_nodes": self.scheme.levi_nodes})

    def check_g_invariance(self) -> CheckResult:
        rng = self.rng("frobenius/g-invariance")
        jmax = self.grid.jmax
        h1 = gaussian_bump("upper", {0: 1.0, -1: 0.4}, 0.0, 0.5)
        h2 = gaussian_bump("upper", {0: 0.6, 1: 0.8j}, 0.3, 0.5)
        base = frobenius_pairing(h1, h2, self.scheme, jmax)
        ells = self._levi_points()
        lhs, rhs = [], []
        for _ in range(2):
            g = random_group_element(rng, 0.3)
            moved = frobenius_pairing(act_G_left(g, h1), act_G_left(g, h2), self.scheme, jmax)
            lhs.extend(moved(ell) for ell in ells)
            rhs.extend(base(ell) for ell in ells)
        return residual_report("frobenius-g-invariance", "<<g h1, g h2>> = <<h1, h2>>",
                               np.array(lhs), np.array(rhs), self.tolerance(TOL_BIMODULE), {"jmax": jmax})

    def _counit_pair(self, side: str):
        h1 = as_row_function(gaussian_bump(side, {0: 1.0, 1: 0.4}, 0.1, 0.5))
        h2 = gaussian_bump(side, {0: 0.8, -1: 0.5j}, -0.2, 0.55)
        return h1, h2

    def check_counit_restriction(self) -> CheckResult:
        ells = [GroupElement.diagonal(math.exp(0.3)), GroupElement.diagonal(-math.exp(-0.2)),
                GroupElement.identity()]
        lhs, rhs = [], []
        for side in ("upper", "lower"):
            h1, h2 = self._counit_pair(side)
            counit = frobenius_counit(h1, h2, self.scheme, self.pairing_jmax)
            lhs.extend(counit_by_restriction(h1, h2, ells, self.scheme))
            rhs.extend(counit(ell) for ell in ells)
        return residual_report("counit-by-restriction",
                               "Fr(h1 (x) h2) computed on G with an N-cutoff",
                               np.array(lhs), np.array(rhs), self.tolerance(TOL_FROBENIUS), self.scheme_params())

    def check_counit_balanced(self) -> CheckResult:
        scheme = _reduced(self.scheme, 24, 5.0)
        jmax = self.pairing_jmax
        phi = GroupBump(left=GroupElement.rotation(0.3) @ GroupElement.diagonal(math.exp(0.1)),
                        width=0.4, kind="compact")
        h1, h2 = self._counit_pair("upper")
        lhs = frobenius_counit(act_Sc_G(phi, h1, scheme), h2, scheme, jmax)
        rhs = frobenius_counit(h1, act_Sc_G(phi, h2, scheme), scheme, jmax)
        ells = self._levi_points()
        return residual_report("counit-balanced", "Fr(h1 phi (x) h2) = Fr(h1 (x) phi h2)",
                               np.array([lhs(ell) for ell in ells]), np.array([rhs(ell) for ell in ells]),
                               self.tolerance(TOL_BIMODULE), {**self.scheme_params(scheme), "jmax": jmax})

    def check_kernel_invariance(self) -> CheckResult:
        rng = self.rng("frobenius/kernel-invariance")
        f = GroupBump(width=0.5, kind="gaussian")
        residuals, peak = [], 0.0
        for side in ("upper", "lower"):
            kernel = frobenius_unit_kernel(f, side, self.scheme)
            residuals.extend(kernel.invariance_residuals(rng, 20).values())
            identity = np.eye(2)
            peak = max(peak, float(abs(kernel(identity, identity))))
        return scaled_report("unit-kernel-invariance", "k_f(g1 n, g2) = k_f(g1, n g2) = k_f(g1, g2)",
                             residuals, peak, self.tolerance(TOL_KERNEL), {"x_nodes": self.scheme.x_nodes})

    def check_kernel_reproducing(self) -> CheckResult:
        rng = self.rng("frobenius/kernel-reproducing")
        f = GroupBump(left=GroupElement.rotation(0.2), width=0.4, kind="gaussian")
        h = gaussian_bump("upper", {0: 1.0, 1: 0.5}, 0.0, 0.5)
        kernel = frobenius_unit_kernel(f, "upper", self.scheme)
        u = rng.uniform(-0.4, 0.4, 6)
        theta = rng.uniform(0.0, 2.0 * math.pi, 6)
        ox, oy = model_direction("upper", theta)
        points = np.stack([np.exp(u) * ox, np.exp(u) * oy], axis=-1)
        lhs = unit_kernel_action(kernel, h, points, self.scheme)
        rhs = act_Sc_G(f, h, self.scheme)(points)
        return residual_report("unit-kernel-reproducing", "integral over G/N of k_f(g, y^-1) h(y) = (f h)(g)",
                               lhs, rhs, self.tolerance(TOL_FROBENIUS), self.scheme_params())

    def check_bernstein(self) -> CheckResult:
        scheme = _reduced(self.scheme, 40, 12.0, x_nodes=96)
        f = LeviFunction.gaussian(0.1, 0.5, 1.0, signs=(1.0, -1.0))
        specs = [BumpSpec(),
                 BumpSpec(u_center=GroupElement.rotation(0.4), u_width=0.4, v_center=0.3, v_width=0.8,
                          vbar_center=-0.2, vbar_width=1.2)]
        ells = [GroupElement.diagonal(math.exp(0.2)), GroupElement.diagonal(-math.exp(-0.3))]
        lhs, rhs = [], []
        for bumps in specs:
            kernel = bernstein_unit(f, bumps, scheme)
            for ell in ells:
                lhs.append(balanced_image(kernel, ell, scheme))
                rhs.append(f(ell))
        return residual_report("bernstein-balanced-image",
                               "the extension-by-zero unit maps to f in the balanced tensor product",
                               np.array(lhs), np.array(rhs), self.tolerance(TOL_FROBENIUS),
                               {**self.scheme_params(scheme), "cutoffs": len(specs)})

    # -----------------------------------------------------------------------
    # wave-packet
    # -----------------------------------------------------------------------

    def wave_packet_checks(self) -> List:
        return [
            ("plancherel-values-at-zero", self.check_plancherel_values),
            ("plancherel-evenness", self.check_plancherel_evenness),
            ("wave-packet-symmetry-lemma", self.check_symmetry_lemma),
            ("wave-packet-b-adjoint", self.check_b_adjoint),
            ("wave-packet-direct-action", self.check_direct_action),
            ("plancherel-substitution", self.check_plancherel_substitution),
            ("w-equivariance", self.check_w_equivariance),
            ("hc-wave-condition", self.check_wave_condition),
            ("odd-wave-packet-decay", self.check_odd_decay),
        ]

    @property
    def wave_grid(self) -> SpectralGrid:
        return _reduced_grid(self.grid, 4, 10.0)

    def _group_samples(self, stream: str, count: int, scale: float = 0.6) -> List[GroupElement]:
        rng = self.rng(stream)
        return [random_group_element(rng, scale) for _ in range(count)]

    @staticmethod
    def _vanishing_radial(mu: np.ndarray) -> np.ndarray:
        return mu * np.exp(-0.5 * mu ** 2)

    def check_plancherel_values(self) -> CheckResult:
        lhs = [plancherel_density("even", 0.0), plancherel_density("odd", 0.0)]
        return residual_report("plancherel-values-at-zero", "alpha_even(0) = 0 and alpha_odd(0) = 1/pi^2",
                               np.array(lhs), np.array([0.0, 1.0 / math.pi ** 2]),
                               self.tolerance(TOL_IDENTITY), {"kappa": 1.0})

    def check_plancherel_evenness(self) -> CheckResult:
        mu = self.wave_grid.mu
        lhs = np.concatenate([plancherel_density(p, mu) for p in ("even", "odd")])
        rhs = np.concatenate([plancherel_density(p, -mu) for p in ("even", "odd")])
        return residual_report("plancherel-evenness", "alpha(-mu) = alpha(mu)", lhs, rhs,
                               self.tolerance(TOL_IDENTITY), {"mu_max": self.wave_grid.mu_max})

    def check_symmetry_lemma(self) -> CheckResult:
        grid = self.wave_grid
        X = symmetric_part(gaussian_spectrum("upper", {0: 1.0, 2: 0.5}, 0.3, 0.6, grid))
        Y = antisymmetric_part(gaussian_spectrum("upper", {0: 0.4j, -2: 1.0, 4: 0.2}, -0.2, 0.5, grid))
        values = [wave_packet_pairing(X, Y, g, self.scheme)
                  for g in self._group_samples("wave-packet/symmetry", 4)]
        return scaled_report("wave-packet-symmetry-lemma",
                             "symmetric against antisymmetric wave packets vanish identically",
                             values, X.norm() * Y.norm(), self.tolerance(TOL_WAVE),
                             {"jmax": grid.jmax, "mu_max": grid.mu_max,
                              "matrix_log_step": self.scheme.matrix_log_step})

    def _b_data(self, grid: SpectralGrid):
        H1 = gaussian_spectrum("lower", {0: 1.0, 1: 0.4}, 0.2, 0.6, grid)
        H2 = gaussian_spectrum("upper", {0: 0.7, -1: 0.5j, 2: 0.3}, -0.1, 0.5, grid)
        return H1, H2

    def check_b_adjoint(self) -> CheckResult:
        grid = self.wave_grid
        H1, H2 = self._b_data(grid)
        samples = self._group_samples("wave-packet/b-adjoint", 4)
        lhs = np.array([wave_packet_B(H1, H2, g, self.scheme) for g in samples])
        rhs = np.array([wave_packet_B_adjoint(H1, H2, g, self.scheme) for g in samples])
        return residual_report("wave-packet-b-adjoint", "B through I+ equals B through I- on swapped sides",
                               lhs, rhs, self.tolerance(TOL_ADJOINT), {"jmax": grid.jmax, "mu_max": grid.mu_max})

    def check_direct_action(self) -> CheckResult:
        grid = self.wave_grid
        H1, H2 = self._b_data(grid)
        g = self._group_samples("wave-packet/direct", 1, 0.3)[0]
        lhs = wave_packet_B(H1, H2, g, self.scheme, direct=True)
        rhs = wave_packet_B(H1, H2, g, self.scheme)
        return residual_report("wave-packet-direct-action",
                               "g^-1 acting on V(mu) through homogeneous extension and restriction",
                               [lhs], [rhs], self.tolerance(TOL_WAVE), {"jmax": grid.jmax, "mu_max": grid.mu_max})

    def check_plancherel_substitution(self) -> CheckResult:
        grid = self.wave_grid
        X = gaussian_spectrum("upper", {0: 1.0, 2: 0.3j}, 0.1, 0.6, grid)
        Y = separable_spectrum("upper", grid, self._vanishing_radial, {0: 1.0, -2: 0.4})
        samples = self._group_samples("wave-packet/substitution", 3)
        lhs = np.array([plancherel_weighted_pairing(X, Y, g, "even", self.scheme) for g in samples])
        rhs = np.array([wave_packet_pairing(X, Y, g, self.scheme) for g in samples])
        return residual_report("plancherel-substitution", "int <X, g^-1 Y> = int <X, g^-1 alpha^-1 Y> alpha",
                               lhs, rhs, self.tolerance(TOL_IDENTITY), {"jmax": grid.jmax, "mu_max": grid.mu_max})

    def check_w_equivariance(self) -> CheckResult:
        grid = self.wave_grid
        X = gaussian_spectrum("upper", {0: 1.0, 2: 0.5j}, 0.2, 0.6, grid)
        Y = gaussian_spectrum("upper", {0: 0.3, -2: 1.0, 4: 0.2j}, -0.3, 0.55, grid)
        samples = self._group_samples("wave-packet/w-equivariance", 3)
        lhs = np.array([wave_packet_pairing(normalized_W(X), Y, g, self.scheme) for g in samples])
        rhs = np.array([wave_packet_pairing(X, normalized_W(Y), g, self.scheme) for g in samples])
        return residual_report("w-equivariance", "int <W X, g^-1 Y> = int <X, g^-1 W Y>", lhs, rhs,
                               self.tolerance(TOL_EQUIVARIANCE), {"jmax": grid.jmax, "mu_max": grid.mu_max})

    def check_wave_condition(self) -> CheckResult:
        grid = self.wave_grid
        H1 = separable_spectrum("lower", grid, self._vanishing_radial, {0: 1.0})
        H2 = separable_spectrum("upper", grid, self._vanishing_radial, {0: 1.0})
        report = hc_wave_condition_check(H1, H2, p=2, scheme=self.scheme)
        tolerance = self.tolerance(1.0)
        ratio = report.seminorm.boundary_ratio
        return CheckResult(name="hc-wave-condition", anchor="B(a_t) (1 + t)^2 / Xi(a_t) stays bounded",
                           residual_sup=ratio, residual_l2=ratio, tolerance=tolerance, samples=17,
                           grid_params={"branch": report.branch, "order_first": report.order_first,
                                        "order_second": report.order_second,
                                        "seminorm": report.seminorm.value, "t_max": 8.0},
                           passed=report.passed and ratio <= tolerance)

    def check_odd_decay(self) -> CheckResult:
        grid = self.wave_grid
        H1 = gaussian_spectrum("lower", {1: 1.0}, 0.0, 0.6, grid)
        H2 = gaussian_spectrum("upper", {1: 1.0, -1: 0.5}, 0.2, 0.5, grid)
        _, odd = parity_split(H2)
        ts = np.linspace(0.0, 8.0, 17)
        ratio = wave_packet_decay(H1, odd, ts, 2, self.scheme)
        estimate = seminorm_from_ratio(ts, ratio, 2, float(ts[-1]))
        return scaled_report("odd-wave-packet-decay", "odd wave packets lie in the Harish-Chandra class",
                             [estimate.boundary_ratio], 1.0, self.tolerance(1.0),
                             {"seminorm": estimate.value, "t_max": 8.0})

    # -----------------------------------------------------------------------
    # second-adjoint
    # -----------------------------------------------------------------------

    def second_adjoint_checks(self) -> List:
        return [
            ("triangle-first", self.check_triangle_first),
            ("triangle-second", self.check_triangle_second),
            ("triangle-approximate-identity", self.check_approximate_identity),
        ]

    @property
    def triangle_grid(self) -> SpectralGrid:
        return _reduced_grid(self.grid, 8, self.grid.mu_max)

    @staticmethod
    def _triangle_levi() -> LeviFunction:
        return LeviFunction.gaussian(0.3, 0.4, 1.0, signs=(-1.0, 1.0))

    def check_triangle_first(self) -> CheckResult:
        h = gaussian_bump("upper", {0: 1.0, 1: 0.5, 2: 0.25j}, 0.0, 0.5)
        return verify_triangle_first(h, self._triangle_levi(), BumpSpec(), self.scheme, self.triangle_grid,
                                     samples=20, rng=self.rng("second-adjoint/first"),
                                     tolerance=self.tolerance(TOL_TRIANGLE), spot_checks=2)

    def check_triangle_second(self) -> CheckResult:
        k = as_row_function(gaussian_bump("lower", {0: 0.8, -1: 0.6j, 2: 0.3}, 0.1, 0.5))
        return verify_triangle_second(k, self._triangle_levi(), BumpSpec(), self.scheme, self.triangle_grid,
                                      samples=20, rng=self.rng("second-adjoint/second"),
                                      tolerance=self.tolerance(TOL_TRIANGLE), spot_checks=2)

    def check_approximate_identity(self) -> CheckResult:
        width = 0.02
        h = gaussian_bump("upper", {0: 1.0, 1: 0.5, -2: 0.3j}, 0.0, 0.5)
        f = LeviFunction.gaussian(0.0, width, 1.0)
        rng = self.rng("second-adjoint/approximate-identity")
        u = rng.uniform(-0.5, 0.5, 20)
        theta = rng.uniform(0.0, 2.0 * math.pi, 20)
        ox, oy = model_direction("upper", theta)
        points = np.stack([np.exp(u) * ox, np.exp(u) * oy], axis=-1)
        lhs = act_L_module(h, f, self.scheme, jmax=self.triangle_grid.jmax)(points)
        return residual_report("triangle-approximate-identity", "h . f tends to h as f concentrates at e",
                               lhs, h(points), self.tolerance(TOL_TRIANGLE), {"levi_width": width})


_SUITE_METHODS = {
    "group-core": "group_core_checks",
    "intertwiner": "intertwiner_checks",
    "frobenius": "frobenius_checks",
    "wave-packet": "wave_packet_checks",
    "second-adjoint": "second_adjoint_checks",
}


def run_suite(config: SuiteConfig) -> SuiteReport:
    """Run the suite named in config and return its report."""
    return VerificationRunner(config).run()
