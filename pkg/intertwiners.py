"""
Intertwining Operators Module

Standard intertwining integrals between the two plane models and their
spectral description:
- complex_gamma / reciprocal_gamma (Lanczos approximation with reflection)
- c-functions c+^(j)(mu), c-^(j)(mu), their reciprocals and tables
- intertwine_J_numeric: the line integrals J+ (lower -> upper) and J- (upper -> lower)
- apply_c, apply_c_inverse and the inverse operators I+ and I-
- The normalized involution W and the symmetric/antisymmetric split
- Matrix coefficients <X(mu), g^-1 Y(mu)> on the spaces V(mu)

On the homogeneous atom of K-type j and parameter mu, J+ multiplies by
c+^(j)(mu) for Im mu > 0 and J- multiplies by c-^(j)(mu) for Im mu < 0.
"""

import csv
import logging
import math
from typing import Callable, Literal, Optional, Tuple, Union

import numpy as np
from cachetools import LRUCache, cached
from pydantic import BaseModel, ConfigDict
from scipy.integrate import quad

from exceptions import DivergenceWarning, PoleError, ValidationError
from fourier import extend_homogeneous, fourier_A, inverse_fourier_A, k_rotate, restrict_to_circle
from function_models import PlaneFunction, act_G_left, model_direction
from group_core import cartan
from models import GroupElement, QuadratureScheme, Side, SpectralFunction, SpectralGrid
from utils import flag, log_tangent_rule

logger = logging.getLogger(__name__)

Sign = Literal["plus", "minus"]

SQRT_PI = math.sqrt(math.pi)
LANCZOS_G = 7.0
LANCZOS_COEFFS = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
POLE_TOLERANCE = 1e-14
TAIL_SLOPE_LIMIT = -1.05
MU_CHUNK = 64


# ---------------------------------------------------------------------------
# Gamma function
# ---------------------------------------------------------------------------

def _gamma_poles(z: np.ndarray) -> np.ndarray:
    return (z.imag == 0) & (z.real <= 0) & (np.abs(z.real - np.round(z.real)) < POLE_TOLERANCE)


def _lanczos(z: np.ndarray) -> np.ndarray:
    """Gamma(z) for Re z >= 1/2."""
    z = z - 1.0
    series = np.full(z.shape, LANCZOS_COEFFS[0], dtype=complex)
    for i, coeff in enumerate(LANCZOS_COEFFS[1:], start=1):
        series += coeff / (z + i)
    t = z + LANCZOS_G + 0.5
    return math.sqrt(2.0 * math.pi) * np.exp((z + 0.5) * np.log(t) - t) * series


def _gamma_parts(z: np.ndarray, reciprocal: bool) -> np.ndarray:
    out = np.empty(z.shape, dtype=complex)
    right = z.real >= 0.5
    if np.any(right):
        value = _lanczos(z[right])
        out[right] = 1.0 / value if reciprocal else value
    left = ~right
    if np.any(left):
        zl = z[left]
        sine = np.sin(math.pi * zl)
        mirror = _lanczos(1.0 - zl)
        with np.errstate(divide="ignore", invalid="ignore"):
            out[left] = sine * mirror / math.pi if reciprocal else math.pi / (sine * mirror)
    return out


def complex_gamma(z: Union[complex, np.ndarray]) -> Union[complex, np.ndarray]:
    """
    Gamma function on the complex plane.

    Lanczos approximation (g = 7, 9 coefficients) for Re z >= 1/2 and the
    reflection formula Gamma(z) Gamma(1 - z) = pi / sin(pi z) below.

    Raises:
        PoleError: at nonpositive integers
    """
    arr = np.asarray(z, dtype=complex)
    if np.any(_gamma_poles(arr)):
        raise PoleError("Gamma has a pole at nonpositive integers",
                        {"z": arr[_gamma_poles(arr)].tolist()})
    out = _gamma_parts(np.atleast_1d(arr), reciprocal=False).reshape(arr.shape)
    return complex(out) if out.ndim == 0 else out


def reciprocal_gamma(z: Union[complex, np.ndarray]) -> Union[complex, np.ndarray]:
    """1/Gamma(z), an entire function: exactly 0 at the poles of Gamma."""
    arr = np.asarray(z, dtype=complex)
    flat = np.atleast_1d(arr)
    out = _gamma_parts(flat, reciprocal=True)
    out[_gamma_poles(flat)] = 0.0
    out = out.reshape(arr.shape)
    return complex(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# c-functions
# ---------------------------------------------------------------------------

def _nu(sign: Sign, mu: np.ndarray) -> np.ndarray:
    if sign == "plus":
        return -1j * mu
    if sign == "minus":
        return 1j * mu
    raise ValidationError(f"unknown sign {sign!r}")


def _c_parts(sign: Sign, j: int, mu: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(numerator Gamma argument, denominator Gamma argument, polynomial factor)."""
    nu = _nu(sign, mu)
    n = abs(int(j))
    m = n // 2
    product = np.ones(nu.shape, dtype=complex)
    if n % 2 == 0:
        numerator = nu / 2.0
        for k in range(1, m + 1):
            product = product * ((1.0 + nu) / 2.0 - k)
    else:
        numerator = (1.0 + nu) / 2.0
        for k in range(1, m + 1):
            product = product * (nu / 2.0 - k)
    return numerator, (1.0 + nu + n) / 2.0, product


def c_function(sign: Sign, j: int, mu: Union[complex, np.ndarray]) -> Union[complex, np.ndarray]:
    """
    c+-^(j)(mu) = sqrt(pi) Gamma(nu/2) Gamma((1+nu)/2) / (Gamma((1+nu+j)/2) Gamma((1+nu-j)/2)),
    nu = -i mu for "plus" and +i mu for "minus".

    Evaluated after cancelling the common Gamma factor, so only one Gamma
    and one reciprocal Gamma remain.

    Raises:
        PoleError: at even j, mu = 0 and at the other poles of the numerator
    """
    arr = np.asarray(mu, dtype=complex)
    numerator, denominator, product = _c_parts(sign, j, np.atleast_1d(arr))
    if np.any(_gamma_poles(numerator)):
        raise PoleError("c-function pole", {"sign": sign, "j": j, "mu": arr.tolist()})
    out = (SQRT_PI * complex_gamma(numerator) * reciprocal_gamma(denominator) * product).reshape(arr.shape)
    return complex(out) if out.ndim == 0 else out


def c_function_reciprocal(sign: Sign, j: int, mu: Union[complex, np.ndarray]) -> Union[complex, np.ndarray]:
    """1/c^(j)(mu), with the value 0 at the even-j pole mu = 0."""
    arr = np.asarray(mu, dtype=complex)
    numerator, denominator, product = _c_parts(sign, j, np.atleast_1d(arr))
    if np.any(_gamma_poles(denominator)) or np.any(product == 0):
        raise PoleError("c-function vanishes", {"sign": sign, "j": j, "mu": arr.tolist()})
    out = (reciprocal_gamma(numerator) * complex_gamma(denominator) / (SQRT_PI * product)).reshape(arr.shape)
    return complex(out) if out.ndim == 0 else out


def c_ratio(sign: Sign, j: int, mu: Union[complex, np.ndarray]) -> np.ndarray:
    """c^(j)(mu) / c^(j0)(mu), j0 = 0 or 1 of the same parity, as a rational function of nu."""
    nu = _nu(sign, np.asarray(mu, dtype=complex))
    n = abs(int(j))
    m = n // 2
    ratio = np.ones(nu.shape, dtype=complex)
    for k in range(m):
        if n % 2 == 0:
            ratio = ratio * ((1.0 + nu) / 2.0 - (k + 1)) / ((1.0 + nu) / 2.0 + k)
        else:
            ratio = ratio * (nu / 2.0 - (k + 1)) / (1.0 + nu / 2.0 + k)
    return ratio


class CFunctionTable(BaseModel):
    """
    c-function values on a spectral grid.

    Attributes:
        sign (Sign): "plus" or "minus"
        js (np.ndarray): K-types -jmax..jmax
        mu (np.ndarray): mu-grid
        values (np.ndarray): shape (n_mu, 2 jmax + 1), NaN at poles
        reciprocals (np.ndarray): 1/c with 0 at the poles
        poles (np.ndarray): True at (even j, mu = 0)
    """
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    sign: Sign
    js: np.ndarray
    mu: np.ndarray
    values: np.ndarray
    reciprocals: np.ndarray
    poles: np.ndarray

    def to_csv(self, path: str) -> None:
        with open(path, "w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(["side", "j", "mu", "re", "im", "pole"])
            for k, j in enumerate(self.js):
                for i, mu in enumerate(self.mu):
                    value = self.values[i, k]
                    writer.writerow([self.sign, int(j), repr(float(mu)), repr(float(value.real)),
                                     repr(float(value.imag)), int(self.poles[i, k])])
        logger.info(f"wrote c-table ({self.sign}) to {path}")


c_table_cache = LRUCache(maxsize=32)


@cached(c_table_cache)
def _c_table(sign: Sign, jmax: int, dmu: float, mu_max: float) -> CFunctionTable:
    grid = SpectralGrid(jmax=jmax, dmu=dmu, mu_max=mu_max)
    mu = grid.mu
    values = np.empty((mu.size, 2 * jmax + 1), dtype=complex)
    reciprocals = np.empty_like(values)
    poles = np.zeros(values.shape, dtype=bool)
    for k, j in enumerate(grid.js):
        reciprocals[:, k] = c_function_reciprocal(sign, int(j), mu)
        if j % 2 == 0:
            at_zero = mu == 0.0
            poles[:, k] = at_zero
            values[:, k] = np.nan
            values[~at_zero, k] = c_function(sign, int(j), mu[~at_zero])
        else:
            values[:, k] = c_function(sign, int(j), mu)
    for arr in (mu, values, reciprocals, poles):
        arr.setflags(write=False)
    return CFunctionTable(sign=sign, js=grid.js, mu=mu, values=values, reciprocals=reciprocals, poles=poles)


def c_table(sign: Sign, grid: Optional[SpectralGrid] = None) -> CFunctionTable:
    """Cached c-function table on the grid nodes."""
    grid = grid or SpectralGrid()
    return _c_table(sign, grid.jmax, grid.dmu, grid.mu_max)


# ---------------------------------------------------------------------------
# Numeric line integrals
# ---------------------------------------------------------------------------

def _source_target(sign: Sign) -> Tuple[Side, Side]:
    """(side of the input, side of the output) of J with this sign."""
    if sign == "plus":
        return "lower", "upper"
    if sign == "minus":
        return "upper", "lower"
    raise ValidationError(f"unknown sign {sign!r}")


def dual_vector(sign: Sign, point: np.ndarray) -> np.ndarray:
    """w with det[x, w] = 1 (plus) or det[w, x] = 1 (minus), orthogonal to x."""
    point = np.asarray(point, dtype=float)
    r2 = point[..., 0] ** 2 + point[..., 1] ** 2
    if np.any(r2 == 0):
        raise ValidationError("the origin is not a point of G/N")
    if sign == "plus":
        return np.stack([-point[..., 1], point[..., 0]], -1) / r2[..., None]
    return np.stack([point[..., 1], -point[..., 0]], -1) / r2[..., None]


def _tail_slope(h: PlaneFunction, w: np.ndarray, x: np.ndarray) -> float:
    s = np.geomspace(1e3, 1e6, 8)
    slopes = []
    for direction in (1.0, -1.0):
        values = np.abs(h.evaluate(w[0] + direction * s * x[0], w[1] + direction * s * x[1]))
        if np.all(values > 1e-300):
            slopes.append(np.polyfit(np.log(s), np.log(values), 1)[0])
    return max(slopes) if slopes else -math.inf


def intertwine_J_numeric(sign: Sign, h: PlaneFunction, point: Union[Tuple[float, float], np.ndarray],
                         scheme: Optional[QuadratureScheme] = None, shift: float = 0.0) -> complex:
    """
    (J h)(x) = integral over R of h(w + s x) ds.

    w is the dual vector of x (det[x, w] = 1 for J+, det[w, x] = 1 for J-);
    shift moves it along the line, which leaves the value unchanged.
    Closed-form atoms are integrated adaptively after s = sinh(tau) / |x|^2;
    other functions use intertwine_J_points.
    """
    source, _ = _source_target(sign)
    if h.side != source:
        raise ValidationError(f"J{'+' if sign == 'plus' else '-'} acts on {source}-side functions",
                              {"side": h.side})
    x = np.asarray(point, dtype=float)
    w = dual_vector(sign, x) + shift * x
    slope = _tail_slope(h, w, x)
    if slope > TAIL_SLOPE_LIMIT:
        flag("line integrand decays too slowly", DivergenceWarning, slope=float(slope))
    if h.kind != "atom":
        return complex(intertwine_J_points(sign, h, x[None, :], scheme, check=False)[0])
    r2 = float(x @ x)

    def integrand(tau: float) -> complex:
        if abs(tau) > 700.0:
            return 0j
        s = math.sinh(tau) / r2
        value = complex(h.evaluate(np.asarray(w[0] + s * x[0]), np.asarray(w[1] + s * x[1])))
        return value * math.cosh(tau) / r2 if np.isfinite(value) else 0j

    options = {"limit": 500, "epsabs": 1e-14, "epsrel": 1e-11}
    real = quad(lambda tau: integrand(tau).real, -np.inf, np.inf, **options)[0]
    imag = quad(lambda tau: integrand(tau).imag, -np.inf, np.inf, **options)[0]
    return complex(real, imag)


def intertwine_J_points(sign: Sign, h: PlaneFunction, points: np.ndarray,
                        scheme: Optional[QuadratureScheme] = None, check: bool = True) -> np.ndarray:
    """
    Vectorized J at many points.

    The line through the dual vector w of x is parametrized by
    s = sinh(tau) / |x|^2, so that |w + s x| = cosh(tau) / |x| and
    |x| (J h)(x) = integral of P(log cosh(tau) - log|x|, theta(tau)) dtau with P
    the profile of h. The trapezoid rule with the scheme's line step runs over
    the tau-interval on which the line stays inside the u-range of h.
    """
    scheme = scheme or QuadratureScheme()
    source, _ = _source_target(sign)
    if h.side != source:
        raise ValidationError("J applied to a function on the wrong side", {"side": h.side})
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    if h.kind == "atom" and check:
        return np.array([intertwine_J_numeric(sign, h, p, scheme) for p in points])
    w = dual_vector(sign, points)
    r2 = points[:, 0] ** 2 + points[:, 1] ** 2
    reach = np.exp(np.minimum(min(h.u_range[1], 350.0) + 0.5 * np.log(r2), 700.0))
    tau_max = float(np.max(np.arcsinh(reach))) + scheme.line_padding
    count = int(math.ceil(tau_max / scheme.line_step))
    tau = scheme.line_step * np.arange(-count, count + 1)
    sinh, weights = np.sinh(tau), scheme.line_step * np.cosh(tau)
    out = np.empty(points.shape[0], dtype=complex)
    step = max(1, 2_000_000 // tau.size)
    for start in range(0, points.shape[0], step):
        block = slice(start, start + step)
        scale = 1.0 / r2[block, None]
        s = sinh[None, :] * scale
        values = h.evaluate(w[block, 0:1] + s * points[block, 0:1], w[block, 1:2] + s * points[block, 1:2])
        out[block] = np.sum(np.nan_to_num(values) * weights[None, :] * scale, axis=1)
    return out


def intertwine_J(sign: Sign, h: PlaneFunction, scheme: Optional[QuadratureScheme] = None) -> PlaneFunction:
    """J+ or J- of h as a lazily evaluated function on the target side."""
    _, target = _source_target(sign)

    def evaluate(x: np.ndarray, y: np.ndarray) -> np.ndarray:
        x, y = np.broadcast_arrays(x, y)
        points = np.stack([x.reshape(-1), y.reshape(-1)], -1)
        return intertwine_J_points(sign, h, points, scheme).reshape(x.shape)

    return PlaneFunction(side=target, evaluator=evaluate, kind="lazy", decay_p=0)


def j_decay_constant(sign: Sign, h: PlaneFunction, points: np.ndarray,
                     scheme: Optional[QuadratureScheme] = None) -> float:
    """Smallest C with |J h(x)| <= C delta(x)^(-1/2) = C / |x| on the sampled points."""
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    values = np.abs(intertwine_J_points(sign, h, points, scheme))
    return float(np.max(values * np.hypot(points[:, 0], points[:, 1])))


# ---------------------------------------------------------------------------
# Spectral multipliers and inverse intertwiners
# ---------------------------------------------------------------------------

def apply_c_inverse(H: SpectralFunction, sign: Sign) -> SpectralFunction:
    """Multiply the j-th coefficient at mu by 1/c^(j)(mu); even K-types vanish at mu = 0."""
    return H.with_coeffs(H.coeffs * c_table(sign, H.grid).reciprocals)


def apply_c(H: SpectralFunction, sign: Sign) -> SpectralFunction:
    """
    Multiply the j-th coefficient at mu by c^(j)(mu).

    At the even-j pole mu = 0 the value 0 is assigned: on the symmetric grid
    the odd 1/mu singularity then cancels in every mu-integral, which is the
    principal-value reading of the product.
    """
    values = np.where(c_table(sign, H.grid).poles, 0.0, c_table(sign, H.grid).values)
    return H.with_coeffs(H.coeffs * values)


def intertwine_I(sign: Sign, h: PlaneFunction, grid: Optional[SpectralGrid] = None,
                 scheme: Optional[QuadratureScheme] = None) -> PlaneFunction:
    """
    I = inverse_fourier_A . (1/c) . fourier_A, a right inverse of J.

    I+ maps upper-side functions to the lower side, I- the other way.
    """
    target, source = _source_target(sign)
    if h.side != source:
        raise ValidationError("I applied to a function on the wrong side", {"side": h.side})
    H = apply_c_inverse(fourier_A(h, grid, scheme), sign)
    return inverse_fourier_A(H.with_coeffs(H.coeffs, side=target), scheme)


def roundtrip_error(sign: Sign, h: PlaneFunction, grid: Optional[SpectralGrid] = None,
                    scheme: Optional[QuadratureScheme] = None, n_u: int = 64, n_theta: int = 32) -> float:
    """
    Relative L2 distance between J I h and h, sampled on a log-polar grid
    covering the u-range of h with weight r^2.
    """
    scheme = scheme or QuadratureScheme()
    inverse = intertwine_I(sign, h, grid, scheme)
    lo, hi = max(h.u_range[0], -scheme.radius), min(h.u_range[1], scheme.radius)
    U, T = np.meshgrid(np.linspace(lo, hi, n_u), 2.0 * math.pi * np.arange(n_theta) / n_theta, indexing="ij")
    ox, oy = model_direction(h.side, T)
    r = np.exp(U)
    points = np.stack([r * ox, r * oy], axis=-1).reshape(-1, 2)
    back = intertwine_J_points(sign, inverse, points, scheme).reshape(U.shape)
    original = h.evaluate(r * ox, r * oy)
    weight = r ** 2
    error = float(np.sum(weight * np.abs(back - original) ** 2))
    norm = float(np.sum(weight * np.abs(original) ** 2))
    logger.debug(f"roundtrip J.I on {points.shape[0]} points")
    return math.sqrt(error / norm) if norm > 0 else math.sqrt(error)


# ---------------------------------------------------------------------------
# Normalized involution W
# ---------------------------------------------------------------------------

def w_scalars(side: Side, grid: SpectralGrid) -> np.ndarray:
    """
    w_j(mu) = i^(+-(j - j0)) c^(j)(mu) / c^(j0)(mu) with j0 the lowest K-type of
    the parity of j; + and c+ on the upper side, - and c- on the lower side.
    """
    sign: Sign = "plus" if side == "upper" else "minus"
    orientation = 1.0 if side == "upper" else -1.0
    out = np.empty((grid.n_mu, 2 * grid.jmax + 1), dtype=complex)
    for k, j in enumerate(grid.js):
        j0 = abs(int(j)) % 2
        phase = np.exp(0.5j * math.pi * orientation * (abs(int(j)) - j0))
        out[:, k] = phase * c_ratio(sign, int(j), grid.mu)
    return out


def normalized_W(H: SpectralFunction) -> SpectralFunction:
    """(W H)_j(mu) = w_j(mu) H_j(-mu): G-equivariant, unitary, involutive, W(0) = id."""
    return H.with_coeffs(w_scalars(H.side, H.grid) * H.coeffs[::-1])


def symmetric_part(H: SpectralFunction) -> SpectralFunction:
    return H.with_coeffs(0.5 * (H.coeffs + normalized_W(H).coeffs))


def antisymmetric_part(H: SpectralFunction) -> SpectralFunction:
    return H.with_coeffs(0.5 * (H.coeffs - normalized_W(H).coeffs))


# ---------------------------------------------------------------------------
# Matrix coefficients
# ---------------------------------------------------------------------------

def matrix_coefficient(X: SpectralFunction, Y: SpectralFunction, g: GroupElement,
                       scheme: Optional[QuadratureScheme] = None) -> np.ndarray:
    """
    <X(mu), g^-1 Y(mu)>_{L2(K)} for every mu-node, where (g^-1 phi)(x) = phi(g x).

    With g = k1 a k2 this equals <k2 X, a^-1 (k1^-1 Y)>. The rotations act on
    coefficients by phases; the diagonal part is integrated over K with the
    log-tangent rule adapted to a.
    """
    if X.side != Y.side or X.grid != Y.grid:
        raise ValidationError("matrix coefficients need spectral data on one grid and side")
    scheme = scheme or QuadratureScheme()
    factors = cartan(g)
    left = k_rotate(X, factors.phi2).coeffs
    right = k_rotate(Y, -factors.phi1).coeffs
    t = factors.t
    theta, weights = log_tangent_rule(t, scheme.matrix_log_step, scheme.k_log_radius)
    sin, cos = np.sin(theta), np.cos(theta)
    if X.side == "upper":
        rho2 = np.exp(2 * t) * cos ** 2 + np.exp(-2 * t) * sin ** 2
        moved = np.arctan2(np.exp(-t) * sin, np.exp(t) * cos)
        degree = -1.0 - 1j * X.mu
    else:
        rho2 = np.exp(2 * t) * sin ** 2 + np.exp(-2 * t) * cos ** 2
        moved = np.arctan2(np.exp(t) * sin, np.exp(-t) * cos)
        degree = -1.0 + 1j * X.mu
    log_rho = 0.5 * np.log(rho2)
    js = X.js
    base = np.exp(1j * np.multiply.outer(js, theta))
    shifted = np.exp(1j * np.multiply.outer(js, moved))
    out = np.empty(X.grid.n_mu, dtype=complex)
    for start in range(0, X.grid.n_mu, MU_CHUNK):
        block = slice(start, start + MU_CHUNK)
        a_vals = left[block] @ base
        b_vals = (right[block] @ shifted) * np.exp(np.multiply.outer(degree[block], log_rho))
        out[block] = (np.conj(a_vals) * b_vals) @ weights
    return out


def matrix_coefficient_direct(X: SpectralFunction, Y: SpectralFunction, g: GroupElement,
                              index: int) -> complex:
    """
    Reference value at one mu-node through extend_homogeneous, act_G_left and
    restriction to the circle.
    """
    phi = extend_homogeneous(complex(Y.mu[index]), Y.at(index), Y.side)
    moved = restrict_to_circle(act_G_left(g.inverse(), phi), Y.grid.jmax, oversample=8)
    return X.at(index).inner(moved)
