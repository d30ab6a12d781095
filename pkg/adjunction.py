"""
Adjunction Module

Unit and counit of the adjunction between parabolic induction and parabolic
restriction for SL(2,R), and numerical checks of its triangle identities:
- Frobenius pairing <<h1, h2>>, its counit Fr and the unit kernels k_f
- The Bernstein unit: extension by zero from the open cell N- L N+
- Plancherel densities and the wave-packet counit B
- Residual reports for both triangle identities

Right actions of L follow function_models: on the upper model h . l is
|a|^-1 h(x / a), on the lower model |a| h(a x), for l = diag(a, 1/a).
"""

import logging
import math
from typing import Any, Callable, Dict, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.integrate import quad

from exceptions import HypothesisViolationError, SupportOverflowError, TruncationWarning, ValidationError
from fourier import parity_split
from function_models import (
    LeviFunction,
    PlaneFunction,
    act_L_module,
    act_L_right,
    invert_cosets,
    levi_coordinates,
    materialize,
    model_direction,
    seminorm_from_ratio,
    shifted_coefficients,
    star,
)
from group_core import (
    SUPPORT_THRESHOLD,
    GroupBump,
    IwasawaBox,
    from_iwasawa,
    from_nln,
    haar_nodes,
    inverse_matrices,
    iwasawa_coordinates,
    levi_elements,
    lower_unipotents,
    nln_coordinates,
    random_group_matrices,
    upper_unipotents,
    xi_diagonal,
)
from intertwiners import (
    Sign,
    apply_c_inverse,
    c_function_reciprocal,
    intertwine_I,
    intertwine_J_points,
    matrix_coefficient,
    matrix_coefficient_direct,
)
from models import (
    BumpSpec,
    CheckResult,
    GroupElement,
    Parity,
    QuadratureScheme,
    Side,
    SpectralFunction,
    SpectralGrid,
    WaveConditionReport,
)
from utils import flag, gauss_legendre, make_rng

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi
PLANCHEREL_KAPPA = 1.0
KERNEL_SCAN = 481
EVAL_CHUNK = 2_000_000
VANISHING_CAP = 3

KernelEvaluator = Callable[[np.ndarray, np.ndarray], np.ndarray]

# Integral of exp(-1/(1 - x^2)) over (-1, 1).
BUMP_MASS = quad(lambda x: math.exp(-1.0 / (1.0 - x * x)), -1.0, 1.0, epsabs=1e-15, epsrel=1e-13)[0]


def _unipotents(side: Side, x: np.ndarray) -> np.ndarray:
    return upper_unipotents(x) if side == "upper" else lower_unipotents(x)


def _as_matrices(g: Union[GroupElement, np.ndarray]) -> np.ndarray:
    return g.matrix if isinstance(g, GroupElement) else np.asarray(g, dtype=float)


def line_bump(center: float, width: float) -> Callable[[np.ndarray], np.ndarray]:
    """exp(-1/(1 - r^2)) in r = (x - center) / width, scaled to total integral 1."""
    norm = 1.0 / (width * BUMP_MASS)

    def evaluate(x: np.ndarray) -> np.ndarray:
        r = (np.asarray(x, dtype=float) - center) / width
        inside = np.abs(r) < 1.0
        safe = np.where(inside, r, 0.0)
        return np.where(inside, norm * np.exp(-1.0 / (1.0 - safe ** 2)), 0.0)

    return evaluate


# ---------------------------------------------------------------------------
# Kernels on G x G
# ---------------------------------------------------------------------------

class KernelOnGxG(BaseModel):
    """
    A function k(g1, g2) on G x G.

    Attributes:
        evaluator (KernelEvaluator): vectorized (g1, g2) -> complex on arrays (..., 2, 2)
        side (Side): N+ ("upper") or N- ("lower"), the subgroup named by the tags
        invariances (Tuple[str, ...]): declared among "right-N slot 1", "left-N slot 2"
        support (Any): bump-like object covering the slot-1 support, when known
        parts (Dict): construction data (f0, cutoffs, bump spec)
    """
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    evaluator: KernelEvaluator
    side: Side = "upper"
    invariances: Tuple[str, ...] = ()
    support: Any = None
    parts: Dict[str, Any] = Field(default_factory=dict)

    def __call__(self, g1: Union[GroupElement, np.ndarray],
                 g2: Union[GroupElement, np.ndarray]) -> np.ndarray:
        return np.asarray(self.evaluator(_as_matrices(g1), _as_matrices(g2)), dtype=complex)

    def invariance_residuals(self, rng: np.random.Generator, samples: int = 20,
                             scale: float = 0.5) -> Dict[str, float]:
        """
        Largest |k(moved) - k| over random samples for each declared tag.

        Pairs are drawn with g1 g2 near the identity so that kernels built
        from bumps at e are sampled where they do not vanish.
        """
        g1 = random_group_matrices(rng, samples, scale)
        g2 = inverse_matrices(g1) @ random_group_matrices(rng, samples, 0.2 * scale)
        n = _unipotents(self.side, rng.normal(0.0, 1.0, samples))
        base = self(g1, g2)
        residuals = {}
        for tag in self.invariances:
            if tag == "right-N slot 1":
                moved = self(g1 @ n, g2)
            elif tag == "left-N slot 2":
                moved = self(g1, n @ g2)
            else:
                raise ValidationError(f"unknown invariance tag {tag!r}")
            residuals[tag] = float(np.max(np.abs(moved - base)))
        return residuals


# ---------------------------------------------------------------------------
# Frobenius pairing, counit and unit
# ---------------------------------------------------------------------------

def frobenius_pairing(h1: PlaneFunction, h2: PlaneFunction, scheme: Optional[QuadratureScheme] = None,
                      jmax: int = 16, s_max: Optional[float] = None) -> LeviFunction:
    """
    <<h1, h2>>(l) = <h1, h2 . l^-1>_{L2} as a function on both components of L.

    Both functions are materialized on the log-polar grid; the pairing is
    sampled at the u-grid spacing for |s| <= s_max (default: the scheme
    radius) and returned as a cubic-spline LeviFunction.

    Args:
        h1, h2 (PlaneFunction): functions on the same plane model of G/N
        scheme (QuadratureScheme): grid resolution
        jmax (int): K-type cutoff of the materialized profiles
        s_max (Optional[float]): half-length of the sampled s-interval

    Returns:
        LeviFunction: the pairing
    """
    if h1.side != h2.side or h1.coset != "right" or h2.coset != "right":
        raise ValidationError("the pairing needs two functions on the same G/N model",
                              {"sides": (h1.side, h2.side), "cosets": (h1.coset, h2.coset)})
    scheme = scheme or QuadratureScheme()
    first = materialize(h1, scheme, jmax)
    second = materialize(h2, scheme, jmax)
    u = first.u_nodes
    weights = np.full(u.size, scheme.log_step)
    weights[0] = weights[-1] = 0.5 * scheme.log_step
    left = np.conj(first.coeffs) * (TWO_PI * weights)[:, None]
    half = int(round((s_max or scheme.radius) / scheme.log_step))
    s_nodes = scheme.log_step * np.arange(-half, half + 1, dtype=float)
    values = {}
    for sign in (1.0, -1.0):
        values[sign] = np.array([np.sum(left * shifted_coefficients(second, sign, -s)) for s in s_nodes])
    peak = max(float(np.max(np.abs(v))) for v in values.values())
    edge = max(float(max(abs(v[0]), abs(v[-1]))) for v in values.values())
    if peak > 0 and edge > 1e-10 * peak:
        flag("Frobenius pairing not negligible at the ends of the s-interval", TruncationWarning,
             ratio=edge / peak)
    logger.debug(f"frobenius_pairing on {s_nodes.size} s-nodes per component")
    return LeviFunction.from_samples(s_nodes, values)


def frobenius_counit(h1: PlaneFunction, h2: PlaneFunction, scheme: Optional[QuadratureScheme] = None,
                     jmax: int = 16, s_max: Optional[float] = None) -> LeviFunction:
    """
    Fr(h1 (x) h2) = <<h1*, h2>> for h1 on the row model of N\\G and h2 on G/N.

    h1*(g) = conj h1(g^-1) is realized by star, which reads the row of g^-1
    off the column of g.
    """
    if h1.coset != "left" or h2.coset != "right" or h1.side != h2.side:
        raise ValidationError("the counit pairs N\\G with G/N for the same unipotent subgroup",
                              {"sides": (h1.side, h2.side), "cosets": (h1.coset, h2.coset)})
    return frobenius_pairing(star(h1), h2, scheme, jmax, s_max)


def counit_by_restriction(h1: PlaneFunction, h2: PlaneFunction, ells: Sequence[GroupElement],
                          scheme: Optional[QuadratureScheme] = None,
                          cutoff_width: float = 1.0) -> np.ndarray:
    """
    Fr(h1 (x) h2)(l) as a Haar integral over G.

    The integrand h1(N g^-1) (h2 . l^-1)(g N) is right-N-invariant, so it is
    multiplied by a cutoff beta(k a n_x) = rho(x) with rho a unit-mass
    Gaussian on N and integrated over G in Iwasawa coordinates of the same
    side. Rows of g^-1 are read directly off the inverse matrix.
    """
    if h1.coset != "left" or h2.coset != "right" or h1.side != h2.side:
        raise ValidationError("the counit pairs N\\G with G/N for the same unipotent subgroup")
    scheme = scheme or QuadratureScheme()
    side = h2.side
    reach = 8.0 * cutoff_width
    rho_norm = 1.0 / (cutoff_width * math.sqrt(TWO_PI))
    row, column = (1, 0) if side == "upper" else (0, 1)
    out = np.empty(len(ells), dtype=complex)
    for i, ell in enumerate(ells):
        moved = act_L_right(ell.inverse(), h2)
        lo = max(moved.u_range[0], h1.u_range[0], -scheme.radius)
        hi = min(moved.u_range[1], h1.u_range[1], scheme.radius)
        if hi <= lo:
            out[i] = 0.0
            continue
        t_range = (lo, hi) if side == "upper" else (-hi, -lo)
        mats, weights = haar_nodes(IwasawaBox(t=t_range, x=(-reach, reach)), scheme, side)
        _, t, x = iwasawa_coordinates(mats, side)
        columns = mats[..., :, column]
        rows = inverse_matrices(mats)[..., row, :]
        rho = rho_norm * np.exp(-0.5 * (x / cutoff_width) ** 2)
        values = h1.evaluate(rows[:, 0], rows[:, 1]) * moved.evaluate(columns[:, 0], columns[:, 1])
        out[i] = np.sum(weights * rho * values)
        logger.debug(f"counit_by_restriction at l={ell.entries} on {weights.size} nodes")
    return out


def frobenius_unit_kernel(f: Callable[[np.ndarray], np.ndarray], side: Side = "upper",
                          scheme: Optional[QuadratureScheme] = None) -> KernelOnGxG:
    """
    k_f(g1, g2) = integral over N of f(g1 n g2) dn for compactly supported f.

    For each pair the N-line is scanned on [-radius, radius] to find where
    f(g1 n g2) is nonzero, then integrated by Gauss-Legendre on that
    interval. Slot 2 is read as a point of N\\G; integrating k_f(g, gamma^-1)
    against h(gamma N) over G/N gives (f h)(g).
    """
    scheme = scheme or QuadratureScheme()
    x_scan = np.linspace(-scheme.radius, scheme.radius, KERNEL_SCAN)
    n_scan = _unipotents(side, x_scan)
    cell = x_scan[1] - x_scan[0]
    z, wz = gauss_legendre(scheme.x_nodes, -1.0, 1.0)

    def evaluate(g1: np.ndarray, g2: np.ndarray) -> np.ndarray:
        g1, g2 = np.broadcast_arrays(np.asarray(g1, dtype=float), np.asarray(g2, dtype=float))
        shape = g1.shape[:-2]
        first, second = g1.reshape(-1, 2, 2), g2.reshape(-1, 2, 2)
        out = np.zeros(first.shape[0], dtype=complex)
        chunk = max(1, EVAL_CHUNK // KERNEL_SCAN)
        for start in range(0, first.shape[0], chunk):
            a, b = first[start:start + chunk], second[start:start + chunk]
            coarse = np.abs(np.asarray(f(a[:, None] @ n_scan[None] @ b[:, None])))
            peak = float(coarse.max()) if coarse.size else 0.0
            if peak == 0.0:
                continue
            mask = coarse > SUPPORT_THRESHOLD * peak
            if np.any(mask[:, 0] | mask[:, -1]):
                flag("unit kernel integrand reaches the truncation radius", TruncationWarning,
                     radius=scheme.radius)
            hit = mask.any(axis=1)
            first_idx = np.argmax(mask, axis=1)
            last_idx = KERNEL_SCAN - 1 - np.argmax(mask[:, ::-1], axis=1)
            lo, hi = x_scan[first_idx] - cell, x_scan[last_idx] + cell
            mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
            x = mid[:, None] + half[:, None] * z[None, :]
            values = np.asarray(f(a[:, None] @ _unipotents(side, x) @ b[:, None]), dtype=complex)
            out[start:start + chunk] = np.where(hit, (values @ wz) * half, 0.0)
        return out.reshape(shape)

    return KernelOnGxG(evaluator=evaluate, side=side, invariances=("right-N slot 1", "left-N slot 2"),
                       support=f if hasattr(f, "iwasawa_box") else None, parts={"f": f})


def _plane_representatives(side: Side, u: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """g = k_theta a with g N = e^u omega(theta) on the model of the given side."""
    t = u if side == "upper" else -u
    return from_iwasawa(theta, t, np.zeros_like(t), side)


def unit_kernel_action(kernel: KernelOnGxG, h: PlaneFunction, points: np.ndarray,
                       scheme: Optional[QuadratureScheme] = None) -> np.ndarray:
    """
    integral over G/N of k(g, gamma^-1) h(gamma N) d(gamma N) at g N = point.

    G/N carries Lebesgue measure r^2 du dtheta on the plane. For k = k_f the
    result is the action (f h)(point) of f on h.
    """
    if h.coset != "right" or h.side != kernel.side:
        raise ValidationError("the kernel acts on functions on its own G/N model")
    scheme = scheme or QuadratureScheme()
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    lo, hi = max(h.u_range[0], -scheme.radius), min(h.u_range[1], scheme.radius)
    theta, wth = gauss_legendre(scheme.k_nodes, 0.0, TWO_PI)
    u, wu = gauss_legendre(scheme.t_nodes, lo, hi)
    U, T = np.meshgrid(u, theta, indexing="ij")
    ox, oy = model_direction(h.side, T)
    r = np.exp(U)
    weights = (np.outer(wu, wth) * r ** 2 * h.evaluate(r * ox, r * oy)).reshape(-1)
    keep = np.abs(weights) > 1e-16 * np.max(np.abs(weights))
    slot2 = inverse_matrices(_plane_representatives(h.side, U, T).reshape(-1, 2, 2))[keep]
    weights = weights[keep]
    r_pts = np.hypot(points[:, 0], points[:, 1])
    if h.side == "upper":
        theta_pts = np.arctan2(points[:, 1], points[:, 0])
    else:
        theta_pts = np.arctan2(-points[:, 0], points[:, 1])
    targets = _plane_representatives(h.side, np.log(r_pts), theta_pts)
    return np.array([kernel(target[None], slot2) @ weights for target in targets])


# ---------------------------------------------------------------------------
# Bernstein unit
# ---------------------------------------------------------------------------

def _check_bump_supports(bumps: BumpSpec, scheme: QuadratureScheme) -> None:
    for name, center, width in (("v", bumps.v_center, bumps.v_width),
                                ("vbar", bumps.vbar_center, bumps.vbar_width)):
        if abs(center) + width > scheme.radius:
            logger.error(f"cutoff {name} leaves the quadrature box")
            raise SupportOverflowError(f"support of {name} exceeds the truncation radius",
                                       {"center": center, "width": width, "radius": scheme.radius})


def bernstein_f0(f: LeviFunction, bumps: BumpSpec) -> Callable[[np.ndarray], np.ndarray]:
    """
    f0(nbar_y l n_x) = vbar(y) f(l) delta+(l)^(-1/2) v(x) on the open cell,
    extended by zero to G.
    """
    v = line_bump(bumps.v_center, bumps.v_width)
    vbar = line_bump(bumps.vbar_center, bumps.vbar_width)

    def evaluate(g: np.ndarray) -> np.ndarray:
        y, sign, s, x = nln_coordinates(np.asarray(g, dtype=float))
        cell = np.isfinite(y) & np.isfinite(s) & np.isfinite(x)
        out = np.zeros(y.shape, dtype=complex)
        for component in f.signs:
            mask = cell & (sign == component)
            if np.any(mask):
                out[mask] = (vbar(y[mask]) * f.evaluate(component, s[mask])
                             * np.exp(-s[mask]) * v(x[mask]))
        return out

    return evaluate


def bernstein_unit(f: LeviFunction, bumps: Optional[BumpSpec] = None,
                   scheme: Optional[QuadratureScheme] = None) -> KernelOnGxG:
    """
    The unit kernel k0(g1, g2) = u(g1) f0(g1 g2) for f on L.

    u is a compact bump on G of total integral 1 and f0 comes from
    bernstein_f0. The N- and N+ integrations that carry k0 into the balanced
    tensor product are applied lazily by balanced_image.

    Raises:
        SupportOverflowError: a cutoff does not fit inside the quadrature boxes
    """
    bumps = bumps or BumpSpec()
    scheme = scheme or QuadratureScheme()
    _check_bump_supports(bumps, scheme)
    u = GroupBump(left=bumps.u_center, width=bumps.u_width, kind="compact")
    box = u.iwasawa_box()
    if max(abs(box.t[0]), abs(box.t[1]), abs(box.x[0]), abs(box.x[1])) > scheme.radius:
        raise SupportOverflowError("support of u exceeds the truncation radius",
                                   {"t": box.t, "x": box.x, "radius": scheme.radius})
    u = u.normalized(scheme)
    f0 = bernstein_f0(f, bumps)

    def evaluate(g1: np.ndarray, g2: np.ndarray) -> np.ndarray:
        return u(g1) * f0(g1 @ g2)

    return KernelOnGxG(evaluator=evaluate, side="upper", support=u,
                       parts={"f": f, "f0": f0, "u": u, "bumps": bumps})


def balanced_image(kernel: KernelOnGxG, ell: GroupElement,
                   scheme: Optional[QuadratureScheme] = None) -> complex:
    """
    Lambda_l(k) = delta+(l)^(1/2) integral over N- x N+ x G of
    k(nbar l gamma, gamma^-1 n) dgamma dn dnbar.

    The value depends on k only through its image in the balanced tensor
    product; for the Bernstein unit of f it is f(l) whatever the cutoffs.
    """
    if "bumps" not in kernel.parts or kernel.support is None:
        raise ValidationError("balanced_image needs a kernel carrying its cutoff data")
    scheme = scheme or QuadratureScheme()
    bumps: BumpSpec = kernel.parts["bumps"]
    _, s = levi_coordinates(ell)
    count = max(8, scheme.x_nodes // 4)
    y, wy = gauss_legendre(count, bumps.vbar_center - bumps.vbar_width, bumps.vbar_center + bumps.vbar_width)
    x, wx = gauss_legendre(count, bumps.v_center - bumps.v_width, bumps.v_center + bumps.v_width)
    n = upper_unipotents(x)
    total = 0j
    for yk, wk in zip(y, wy):
        left = lower_unipotents(yk) @ ell.matrix
        moved = kernel.support.translated(left=GroupElement.from_matrix(left))
        mats, weights = haar_nodes(moved.iwasawa_box(), scheme)
        active = np.abs(moved(mats)) > 0
        mats, weights = mats[active], weights[active]
        values = kernel(left @ mats[:, None], inverse_matrices(mats)[:, None] @ n[None])
        total += wk * (weights @ values @ wx)
    logger.debug(f"balanced_image at l={ell.entries} on {count} x {count} unipotent nodes")
    return complex(math.exp(s) * total)


# ---------------------------------------------------------------------------
# Plancherel densities and wave packets
# ---------------------------------------------------------------------------

def plancherel_density(parity: Parity, mu: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """
    alpha(mu) = kappa / |c+^(j0)(mu)|^2 with j0 = 0 (even) or 1 (odd), kappa = 1.

    The even density vanishes at mu = 0; the odd one equals 1/pi^2 there.
    """
    if parity not in ("even", "odd"):
        raise ValidationError(f"unknown parity {parity!r}")
    j0 = 0 if parity == "even" else 1
    arr = np.asarray(mu, dtype=float)
    values = PLANCHEREL_KAPPA * np.abs(np.asarray(c_function_reciprocal("plus", j0, arr))) ** 2
    return float(values) if values.ndim == 0 else values


def plancherel_table(grid: SpectralGrid) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(mu, even density, odd density) on the grid nodes."""
    mu = grid.mu
    return mu, plancherel_density("even", mu), plancherel_density("odd", mu)


def wave_packet_pairing(X: SpectralFunction, Y: SpectralFunction, g: GroupElement,
                        scheme: Optional[QuadratureScheme] = None, direct: bool = False) -> complex:
    """
    integral of <X(mu), g^-1 Y(mu)> dmu by the trapezoid rule on the grid.

    direct=True computes every mu-slice through extend_homogeneous,
    act_G_left and restriction to the circle instead of the Cartan-reduced
    matrix coefficient.
    """
    if X.side != Y.side or X.grid != Y.grid:
        raise ValidationError("wave packets need spectral data on one grid and side")
    if direct:
        values = np.array([matrix_coefficient_direct(X, Y, g, i) for i in range(X.grid.n_mu)])
    else:
        values = matrix_coefficient(X, Y, g, scheme)
    return complex(np.dot(X.grid.mu_weights, values))


def _inverted(H: SpectralFunction, sign: Sign) -> SpectralFunction:
    """1/c applied to H, relabelled as data on the opposite side."""
    inverted = apply_c_inverse(H, sign)
    return inverted.with_coeffs(inverted.coeffs, side="lower" if H.side == "upper" else "upper")


def wave_packet_B(H1: SpectralFunction, H2: SpectralFunction, g: GroupElement,
                  scheme: Optional[QuadratureScheme] = None, direct: bool = False) -> complex:
    """
    B(g) = integral of <H1(mu), g^-1 c+^-1 H2(mu)> dmu.

    H1 is spectral data of the lower side and H2 of the upper side; c+^-1
    carries H2 to the lower side, which is the spectral form of I+.
    """
    if H1.side != "lower" or H2.side != "upper":
        raise ValidationError("wave_packet_B pairs lower-side H1 with upper-side H2",
                              {"sides": (H1.side, H2.side)})
    return wave_packet_pairing(H1, _inverted(H2, "plus"), g, scheme, direct)


def wave_packet_B_adjoint(H1: SpectralFunction, H2: SpectralFunction, g: GroupElement,
                          scheme: Optional[QuadratureScheme] = None, direct: bool = False) -> complex:
    """
    integral of <c-^-1 H1(mu), g^-1 H2(mu)> dmu on the upper side.

    Agrees with wave_packet_B because I+ and I- are L2-adjoint.
    """
    if H1.side != "lower" or H2.side != "upper":
        raise ValidationError("wave_packet_B_adjoint pairs lower-side H1 with upper-side H2",
                              {"sides": (H1.side, H2.side)})
    return wave_packet_pairing(_inverted(H1, "minus"), H2, g, scheme, direct)


def plancherel_weighted_pairing(X: SpectralFunction, Y: SpectralFunction, g: GroupElement,
                                parity: Parity, scheme: Optional[QuadratureScheme] = None) -> complex:
    """
    integral of <X, g^-1 alpha^-1 Y> alpha dmu.

    Nodes where alpha vanishes contribute nothing, so this agrees with
    wave_packet_pairing exactly for data vanishing there.
    """
    alpha = plancherel_density(parity, X.mu)
    safe = np.where(alpha > 0, alpha, 1.0)
    scaled = Y.with_coeffs(np.where((alpha > 0)[:, None], Y.coeffs / safe[:, None], 0.0))
    values = matrix_coefficient(X, scaled, g, scheme)
    return complex(np.dot(X.grid.mu_weights, alpha * values))


def vanishing_order(H: SpectralFunction, tolerance: float = 1e-6) -> int:
    """
    Order of vanishing of H at mu = 0, capped at 3.

    Values and first and second derivatives at 0 are estimated by
    Richardson-extrapolated central differences on the grid and compared
    with tolerance * max|H|.
    """
    if H.grid.n_mu < 5:
        raise ValidationError("vanishing_order needs at least five mu-nodes")
    peak = float(np.max(np.abs(H.coeffs)))
    if peak == 0.0:
        return VANISHING_CAP
    i, d = H.grid.zero_index, H.grid.dmu
    c = H.coeffs
    first = (4.0 * (c[i + 1] - c[i - 1]) / (2 * d) - (c[i + 2] - c[i - 2]) / (4 * d)) / 3.0
    second = (4.0 * (c[i + 1] - 2 * c[i] + c[i - 1]) / d ** 2
              - (c[i + 2] - 2 * c[i] + c[i - 2]) / (4 * d ** 2)) / 3.0
    for order, estimate in enumerate((c[i], first, second)):
        if float(np.max(np.abs(estimate))) > tolerance * peak:
            return order
    return VANISHING_CAP


def wave_packet_decay(H1: SpectralFunction, H2: SpectralFunction, ts: np.ndarray, p: int = 2,
                      scheme: Optional[QuadratureScheme] = None) -> np.ndarray:
    """|B(a_t)| (1 + t)^p / Xi(a_t) at the sampled t."""
    scheme = scheme or QuadratureScheme()
    ts = np.asarray(ts, dtype=float)
    values = np.array([abs(wave_packet_B(H1, H2, GroupElement.diagonal(math.exp(t)), scheme)) for t in ts])
    return values * (1.0 + ts) ** p / xi_diagonal(ts, scheme)


def hc_wave_condition_check(H1: SpectralFunction, H2: SpectralFunction, p: int = 2,
                            scheme: Optional[QuadratureScheme] = None,
                            ts: Optional[np.ndarray] = None,
                            tolerance: float = 1e-6) -> WaveConditionReport:
    """
    Check the vanishing hypothesis for even wave-packet data, then sample
    the Harish-Chandra seminorm of g -> B(g) along A.

    The hypothesis holds when both H1 and H2 vanish at mu = 0 or one of them
    vanishes there to order two.

    Raises:
        ValidationError: the data carry odd K-types
        HypothesisViolationError: the vanishing orders are insufficient
    """
    for H in (H1, H2):
        _, odd = parity_split(H)
        if odd.norm() > tolerance * max(H.norm(), 1e-300):
            raise ValidationError("hc_wave_condition_check expects even-parity data",
                                  {"odd_norm": odd.norm()})
    order_first, order_second = vanishing_order(H1, tolerance), vanishing_order(H2, tolerance)
    if order_first >= 1 and order_second >= 1:
        branch = "both vanish"
    elif order_second >= 2:
        branch = "second vanishes to order two"
    elif order_first >= 2:
        branch = "first vanishes to order two"
    else:
        logger.error(f"vanishing orders {order_first}, {order_second} do not meet the hypothesis")
        raise HypothesisViolationError("wave-packet data must vanish at mu = 0",
                                       {"order_first": order_first, "order_second": order_second})
    scheme = scheme or QuadratureScheme()
    ts = np.linspace(0.0, 8.0, 17) if ts is None else np.asarray(ts, dtype=float)
    ratio = wave_packet_decay(H1, H2, ts, p, scheme)
    estimate = seminorm_from_ratio(ts, ratio, p, float(ts[-1]))
    passed = bool(np.isfinite(estimate.value)) and not estimate.divergent
    logger.info(f"wave condition ({branch}): seminorm {estimate.value:.3e}, p={p}")
    return WaveConditionReport(order_first=order_first, order_second=order_second, branch=branch,
                               seminorm=estimate, passed=passed)


# ---------------------------------------------------------------------------
# Triangle identities
# ---------------------------------------------------------------------------

def residual_report(name: str, anchor: str, lhs: np.ndarray, rhs: np.ndarray, tolerance: float,
                    grid_params: Optional[Dict[str, Any]] = None) -> CheckResult:
    """Relative sup and root-mean-square residuals of lhs against rhs."""
    lhs, rhs = np.asarray(lhs, dtype=complex), np.asarray(rhs, dtype=complex)
    diff = np.abs(lhs - rhs).reshape(-1)
    scale = max(float(np.max(np.abs(rhs))) if rhs.size else 0.0,
                float(np.max(np.abs(lhs))) if lhs.size else 0.0)
    if scale == 0.0:
        sup, l2 = 0.0, 0.0
    else:
        sup = float(np.max(diff)) / scale
        l2 = float(np.sqrt(np.mean(diff ** 2))) / scale
    return CheckResult(name=name, anchor=anchor, residual_sup=sup, residual_l2=l2, tolerance=tolerance,
                       samples=int(diff.size), grid_params=grid_params or {}, passed=sup <= tolerance)


def _sample_points(h: PlaneFunction, rng: np.random.Generator, samples: int) -> np.ndarray:
    """Points r omega(theta) with u = log r drawn where the profile of h carries energy."""
    energy = np.sum(np.abs(h.coeffs) ** 2, axis=1)
    peak = float(energy.max()) if energy.size else 0.0
    candidates = h.u_nodes[energy > 1e-4 * peak] if peak > 0 else np.linspace(-1.0, 1.0, 21)
    step = h.u_nodes[1] - h.u_nodes[0]
    u = rng.choice(candidates, samples) + rng.uniform(-0.5 * step, 0.5 * step, samples)
    theta = rng.uniform(0.0, TWO_PI, samples)
    ox, oy = model_direction(h.side, theta)
    r = np.exp(u)
    return np.stack([r * ox, r * oy], axis=-1)


def _reduced_side(sign: Sign, h: PlaneFunction, f: LeviFunction, points: np.ndarray,
                  grid: SpectralGrid, scheme: QuadratureScheme) -> np.ndarray:
    """integral over L of f(l) ((J I h) . l)(x) dl, with I and J of the given sign."""
    inverse = intertwine_I(sign, h, grid, scheme)
    moved, weights = [], []
    for component, s, weighted in f.nodes(scheme):
        a = component * np.exp(s)
        if h.side == "upper":
            moved.append(points[None, :, :] / a[:, None, None])
            weights.append(weighted * np.exp(-s))
        else:
            moved.append(points[None, :, :] * a[:, None, None])
            weights.append(weighted * np.exp(s))
    moved_points = np.concatenate(moved, axis=0)
    weights = np.concatenate(weights)
    values = intertwine_J_points(sign, inverse, moved_points.reshape(-1, 2), scheme)
    return weights @ values.reshape(moved_points.shape[:2])


def _line_rule(scheme: QuadratureScheme, log_reach: float) -> Tuple[np.ndarray, np.ndarray]:
    """sinh(tau) and trapezoid weights in tau up to |sinh(tau)| = e^log_reach."""
    tau_max = math.asinh(math.exp(min(log_reach, 700.0))) + scheme.line_padding
    steps = int(math.ceil(tau_max / scheme.line_step))
    tau = scheme.line_step * np.arange(-steps, steps + 1)
    return np.sinh(tau), scheme.line_step * np.cosh(tau)


def triangle_first_unreduced(lower: PlaneFunction, f: LeviFunction, bumps: BumpSpec, points: np.ndarray,
                             scheme: QuadratureScheme) -> np.ndarray:
    """
    integral over G and N+ of f0(gamma n) k(g gamma^-1 e2) at g e1 = x, in
    N- L N+ coordinates gamma = nbar_y l n_x'.

    k lives on the lower side. For k = I+ h the result is (h . f)(x); f0 is
    integrated over N+ through its matrix argument and the x'-integral is a
    line integral of k, so nothing is taken from the closed form of f0.
    """
    f0 = bernstein_f0(f, bumps)
    count = max(8, scheme.x_nodes // 4)
    y, wy = gauss_legendre(count, bumps.vbar_center - bumps.vbar_width, bumps.vbar_center + bumps.vbar_width)
    z, wz = gauss_legendre(count, bumps.v_center - bumps.v_width, bumps.v_center + bumps.v_width)
    r = np.hypot(points[:, 0], points[:, 1])
    targets = _plane_representatives("upper", np.log(r), np.arctan2(points[:, 1], points[:, 0]))
    s_nodes, ws = gauss_legendre(scheme.levi_nodes, *f.support)
    sinh, line_weights = _line_rule(scheme, scheme.radius + float(np.log(r.max())) + float(np.max(np.abs(s_nodes))))
    out = np.zeros(points.shape[0], dtype=complex)
    for component in f.signs:
        Y, S, Z = np.meshgrid(y, s_nodes, z, indexing="ij")
        cell = f0(from_nln(Y, component, S, Z)) @ wz
        inner = wy @ cell
        a = component * np.exp(s_nodes)
        for i, g in enumerate(targets):
            # x' = sinh(tau) / |x|^2 resolves the pass of the line at distance 1/|x| from the origin
            line = g @ upper_unipotents(-sinh / r[i] ** 2) @ np.array([0.0, 1.0])
            moved = a[:, None, None] * line[None, :, :]
            values = np.nan_to_num(lower.evaluate(moved[..., 0], moved[..., 1])) @ (line_weights / r[i] ** 2)
            out[i] += np.sum(ws * np.exp(2.0 * s_nodes) * inner * values)
    return out


def bernstein_f0_opposite(f: LeviFunction, bumps: BumpSpec) -> Callable[[np.ndarray], np.ndarray]:
    """
    f0'(n_x l nbar_y) = v(x) f(l) delta-(l)^(-1/2) vbar(y) on the opposite
    open cell N+ L N-, extended by zero to G.
    """
    v = line_bump(bumps.v_center, bumps.v_width)
    vbar = line_bump(bumps.vbar_center, bumps.vbar_width)

    def evaluate(g: np.ndarray) -> np.ndarray:
        g = np.asarray(g, dtype=float)
        d = g[..., 1, 1]
        cell = d != 0
        safe = np.where(cell, d, 1.0)
        # n_x l nbar_y = [[a + x y / a, x / a], [y / a, 1 / a]]
        sign, s = np.sign(safe), -np.log(np.abs(safe))
        x, y = g[..., 0, 1] / safe, g[..., 1, 0] / safe
        out = np.zeros(d.shape, dtype=complex)
        for component in f.signs:
            mask = cell & (sign == component)
            if np.any(mask):
                out[mask] = (v(x[mask]) * f.evaluate(component, s[mask])
                             * np.exp(s[mask]) * vbar(y[mask]))
        return out

    return evaluate


def triangle_second_unreduced(upper: PlaneFunction, f: LeviFunction, bumps: BumpSpec, points: np.ndarray,
                              scheme: QuadratureScheme) -> np.ndarray:
    """
    integral over G and N- of f0'(gamma nbar) k(g gamma^-1 e1) at g e2 = x, in
    N+ L N- coordinates gamma = n_x l nbar_y'.

    k lives on the upper side. For k = I- h with h on the lower side the
    result is (h . f)(x); the y'-integral is a line integral of k.
    """
    f0 = bernstein_f0_opposite(f, bumps)
    count = max(8, scheme.x_nodes // 4)
    x, wx = gauss_legendre(count, bumps.v_center - bumps.v_width, bumps.v_center + bumps.v_width)
    y, wy = gauss_legendre(count, bumps.vbar_center - bumps.vbar_width, bumps.vbar_center + bumps.vbar_width)
    r = np.hypot(points[:, 0], points[:, 1])
    targets = _plane_representatives("lower", np.log(r), np.arctan2(-points[:, 0], points[:, 1]))
    s_nodes, ws = gauss_legendre(scheme.levi_nodes, *f.support)
    sinh, line_weights = _line_rule(scheme, scheme.radius + float(np.log(r.max())) + float(np.max(np.abs(s_nodes))))
    out = np.zeros(points.shape[0], dtype=complex)
    for component in f.signs:
        X, S, Y = np.meshgrid(x, s_nodes, y, indexing="ij")
        gamma = upper_unipotents(X) @ levi_elements(component, S) @ lower_unipotents(Y)
        inner = wx @ (f0(gamma) @ wy)
        a = component * np.exp(s_nodes)
        for i, g in enumerate(targets):
            line = g @ lower_unipotents(-sinh / r[i] ** 2) @ np.array([1.0, 0.0])
            moved = line[None, :, :] / a[:, None, None]
            values = np.nan_to_num(upper.evaluate(moved[..., 0], moved[..., 1])) @ (line_weights / r[i] ** 2)
            out[i] += np.sum(ws * np.exp(-2.0 * s_nodes) * inner * values)
    return out


def _triangle(name: str, anchor: str, sign: Sign, h: PlaneFunction, f: LeviFunction,
              scheme: QuadratureScheme, grid: SpectralGrid, samples: int, rng: np.random.Generator,
              tolerance: float, extra: Optional[Callable[[np.ndarray], np.ndarray]] = None,
              spot_checks: int = 0) -> CheckResult:
    direct = act_L_module(h, f, scheme, jmax=grid.jmax)
    points = _sample_points(direct if np.any(direct.coeffs) else materialize(h, scheme, grid.jmax),
                            rng, samples)
    rhs = direct(points)
    lhs = _reduced_side(sign, h, f, points, grid, scheme)
    params = {"jmax": grid.jmax, "dmu": grid.dmu, "mu_max": grid.mu_max,
              "log_step": scheme.log_step, "line_step": scheme.line_step,
              "levi_nodes": scheme.levi_nodes}
    if extra is not None and spot_checks > 0:
        spot = extra(points[:spot_checks])
        scale = max(float(np.max(np.abs(rhs))), 1e-300)
        params["unreduced_residual"] = float(np.max(np.abs(spot - rhs[:spot_checks]))) / scale
    report = residual_report(name, anchor, lhs, rhs, tolerance, params)
    logger.info(f"{name}: sup residual {report.residual_sup:.3e} over {report.samples} points")
    return report


def verify_triangle_first(h: PlaneFunction, f: LeviFunction, bumps: Optional[BumpSpec] = None,
                          scheme: Optional[QuadratureScheme] = None, grid: Optional[SpectralGrid] = None,
                          samples: int = 20, rng: Optional[np.random.Generator] = None,
                          tolerance: float = 1e-2, spot_checks: int = 0) -> CheckResult:
    """
    First triangle identity on G/N+: ((J+ I+ h) . f)(x) against (h . f)(x).

    The left side is the reduced closed form, an L-integral of line
    integrals of I+ h; the right side is the L-module action on profile
    coefficients. With spot_checks > 0 the first points are also evaluated
    through the unreduced N- L N+ integral of f0, reported as
    grid_params["unreduced_residual"].
    """
    if h.side != "upper" or h.coset != "right":
        raise ValidationError("the first triangle identity acts on functions on G/N+")
    scheme = scheme or QuadratureScheme()
    grid = grid or SpectralGrid()
    bumps = bumps or BumpSpec()
    rng = rng or make_rng(42, "triangle-first")

    def unreduced(points: np.ndarray) -> np.ndarray:
        return triangle_first_unreduced(intertwine_I("plus", h, grid, scheme), f, bumps, points, scheme)

    return _triangle("triangle-first", "(J+ I+ h) . f = h . f on G/N+", "plus", h, f, scheme, grid,
                     samples, rng, tolerance, unreduced, spot_checks)


def verify_triangle_second(k: PlaneFunction, f: LeviFunction, bumps: Optional[BumpSpec] = None,
                           scheme: Optional[QuadratureScheme] = None, grid: Optional[SpectralGrid] = None,
                           samples: int = 20, rng: Optional[np.random.Generator] = None,
                           tolerance: float = 1e-2, spot_checks: int = 0) -> CheckResult:
    """
    Second triangle identity for k on the row model of N-\\G.

    Inversion carries k to the lower column model, where
    ((J- I- k~) . f)(x) is compared with (k~ . f)(x). With spot_checks > 0
    the first points are also evaluated through the unreduced integral of
    f0' over the opposite cell N+ L N-, reported as
    grid_params["unreduced_residual"].
    """
    if k.side != "lower" or k.coset != "left":
        raise ValidationError("the second triangle identity acts on functions on N-\\G")
    scheme = scheme or QuadratureScheme()
    grid = grid or SpectralGrid()
    bumps = bumps or BumpSpec()
    rng = rng or make_rng(42, "triangle-second")
    column = materialize(invert_cosets(k), scheme, grid.jmax)

    def unreduced(points: np.ndarray) -> np.ndarray:
        return triangle_second_unreduced(intertwine_I("minus", column, grid, scheme), f, bumps, points, scheme)

    return _triangle("triangle-second", "(J- I- k) . f = k . f on N-\\G", "minus", column, f, scheme, grid,
                     samples, rng, tolerance, unreduced, spot_checks)
