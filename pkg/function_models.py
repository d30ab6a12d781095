"""
Function Models Module

Concrete realizations of functions on G/N+ and G/N- (plane models) and on
the Levi subgroup L = diag(a, 1/a), together with the actions of G and L:
- PlaneFunction: closed-form atoms, sampled log-polar grids and lazy compositions
- LeviFunction: functions of (sign, s = log|a|) on both components of L
- Left G-action, right L-action, L-module action and the action of test functions on G
- Xi, norm and Harish-Chandra seminorms on G/N, and the L2 inner product

Plane model conventions: the upper side G/N+ is identified with the first
column of g, the lower side G/N- with the second column. A point is written
r * omega(theta) with omega = (cos, sin) on the upper side and (-sin, cos) on
the lower side, so that k_theta e1 and k_theta e2 both sit at angle theta.
The profile of h is P(u, theta) = r h(r omega(theta)), u = log r; grids
store its K-coefficients P_j(u) on a uniform u-grid.
"""

import csv
import json
import logging
import math
from typing import Any, Callable, Dict, List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.interpolate import CubicSpline

from exceptions import DivergenceWarning, TruncationWarning, ValidationError
from group_core import (
    GroupConvolution,
    cartan_parameter,
    inverse_matrices,
    weighted_nodes,
)
from models import GroupElement, KSeries, QuadratureScheme, SeminormEstimate, Side
from utils import dump_json, flag, gauss_legendre

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi
GAUSSIAN_REACH = 8.0
EVAL_CHUNK = 2_000_000

PlaneEvaluator = Callable[[np.ndarray, np.ndarray], np.ndarray]
LeviEvaluator = Callable[[float, np.ndarray], np.ndarray]


# ---------------------------------------------------------------------------
# Plane model geometry
# ---------------------------------------------------------------------------

def model_direction(side: Side, theta: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Unit vector at model angle theta: k_theta e1 (upper) or k_theta e2 (lower)."""
    theta = np.asarray(theta, dtype=float)
    if side == "upper":
        return np.cos(theta), np.sin(theta)
    return -np.sin(theta), np.cos(theta)


def model_polar(side: Side, x: np.ndarray, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """(u, theta) = (log r, model angle in [0, 2pi)) of plane points."""
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    with np.errstate(divide="ignore"):
        u = np.log(np.hypot(x, y))
    theta = np.arctan2(y, x) if side == "upper" else np.arctan2(-x, y)
    return u, np.mod(theta, TWO_PI)


def _as_points(point: Union[Tuple[float, float], np.ndarray]) -> Tuple[np.ndarray, np.ndarray]:
    arr = np.asarray(point, dtype=float)
    if arr.shape[-1] != 2:
        raise ValidationError("plane points need two coordinates", {"shape": arr.shape})
    if np.any(np.hypot(arr[..., 0], arr[..., 1]) == 0.0):
        raise ValidationError("the origin is not a point of G/N")
    return arr[..., 0], arr[..., 1]


def _coefficient_interpolator(u_nodes: np.ndarray, coeffs: np.ndarray) -> Callable[[np.ndarray], np.ndarray]:
    """u -> P_j(u) by cubic splines in u, zero outside the node range."""
    real = CubicSpline(u_nodes, coeffs.real, axis=0)
    imag = CubicSpline(u_nodes, coeffs.imag, axis=0)
    lo, hi = float(u_nodes[0]), float(u_nodes[-1])

    def interpolate(u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        inside = (u >= lo) & (u <= hi)
        clipped = np.clip(np.where(np.isfinite(u), u, lo), lo, hi)
        values = real(clipped) + 1j * imag(clipped)
        return np.where(inside[..., None], values, 0.0)

    return interpolate


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------

class PlaneFunction(BaseModel):
    """
    A function on the plane model of G/N+ or G/N- (or of the row model of
    N+\\G or N-\\G when coset is "left").

    Attributes:
        side (Side): which unipotent subgroup
        evaluator (PlaneEvaluator): vectorized (x, y) -> complex
        kind (str): "atom", "grid" or "lazy"
        coset (str): "right" for G/N (column model), "left" for N\\G (row model)
        u_range (Tuple[float, float]): u = log r interval outside which h is negligible
        decay_p (Optional[int]): declared Harish-Chandra exponent
        descriptor (Optional[Dict]): JSON description of closed-form atoms
        u_nodes, coeffs (Optional[np.ndarray]): grid data P_j(u_k)
    """
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    side: Side
    evaluator: PlaneEvaluator
    kind: Literal["atom", "grid", "lazy"] = "lazy"
    coset: Literal["right", "left"] = "right"
    u_range: Tuple[float, float] = (-12.0, 12.0)
    decay_p: Optional[int] = None
    descriptor: Optional[Dict[str, Any]] = None
    u_nodes: Optional[np.ndarray] = None
    coeffs: Optional[np.ndarray] = None

    def __call__(self, point: Union[Tuple[float, float], np.ndarray]) -> np.ndarray:
        x, y = _as_points(point)
        return self.evaluate(x, y)

    def evaluate(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return np.asarray(self.evaluator(np.asarray(x, dtype=float), np.asarray(y, dtype=float)),
                          dtype=complex)

    def profile(self, u: np.ndarray, theta: np.ndarray) -> np.ndarray:
        """P(u, theta) = r h(r omega(theta)) with r = e^u."""
        u, theta = np.broadcast_arrays(np.asarray(u, dtype=float), np.asarray(theta, dtype=float))
        ox, oy = model_direction(self.side, theta)
        r = np.exp(u)
        return r * self.evaluate(r * ox, r * oy)

    @property
    def is_grid(self) -> bool:
        return self.kind == "grid"

    @property
    def jmax(self) -> Optional[int]:
        return None if self.coeffs is None else (self.coeffs.shape[1] - 1) // 2

    def lazy(self, evaluator: PlaneEvaluator, **update: Any) -> "PlaneFunction":
        """A derived function sharing side, coset and decay data."""
        fields = {"side": self.side, "coset": self.coset, "u_range": self.u_range,
                  "decay_p": self.decay_p}
        fields.update(update)
        return PlaneFunction(evaluator=evaluator, kind="lazy", **fields)


class LeviFunction(BaseModel):
    """
    A function on L = {diag(a, 1/a)}, a in R^x, in the coordinates
    (sign(a), s = log|a|). Haar measure is ds on each component.

    Attributes:
        evaluator (LeviEvaluator): (sign, s array) -> complex array
        support (Tuple[float, float]): s-interval carrying the function
        signs (Tuple[float, ...]): components where the function may be nonzero
        smoothness (Optional[int]): declared number of continuous derivatives
        descriptor (Optional[Dict]): JSON description of closed-form instances
    """
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    evaluator: LeviEvaluator
    support: Tuple[float, float] = (-12.0, 12.0)
    signs: Tuple[float, ...] = (1.0,)
    smoothness: Optional[int] = None
    descriptor: Optional[Dict[str, Any]] = None

    def evaluate(self, sign: float, s: np.ndarray) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        if float(sign) not in self.signs:
            return np.zeros(s.shape, dtype=complex)
        return np.asarray(self.evaluator(float(sign), s), dtype=complex)

    def __call__(self, ell: GroupElement) -> complex:
        sign, s = levi_coordinates(ell)
        return complex(self.evaluate(sign, np.asarray(s)))

    def nodes(self, scheme: QuadratureScheme) -> List[Tuple[float, np.ndarray, np.ndarray]]:
        """(sign, s-nodes, weight * value) per component, Gauss-Legendre on the support."""
        s, w = gauss_legendre(scheme.levi_nodes, *self.support)
        return [(sign, s, w * self.evaluate(sign, s)) for sign in self.signs]

    def star(self) -> "LeviFunction":
        """f*(l) = conj f(l^-1); l^-1 has the same sign and s -> -s."""
        return LeviFunction(evaluator=lambda sign, s: np.conj(self.evaluate(sign, -np.asarray(s))),
                            support=(-self.support[1], -self.support[0]), signs=self.signs,
                            smoothness=self.smoothness)

    def scaled(self, factor: complex) -> "LeviFunction":
        return self.model_copy(update={"evaluator": lambda sign, s: factor * self.evaluate(sign, s),
                                       "descriptor": None})

    @classmethod
    def zero(cls) -> "LeviFunction":
        return cls(evaluator=lambda sign, s: np.zeros(np.shape(s), dtype=complex),
                   support=(-1.0, 1.0), descriptor={"kind": "zero"})

    @classmethod
    def gaussian(cls, center: float = 0.0, width: float = 0.5, mass: complex = 1.0,
                 signs: Tuple[float, ...] = (1.0,)) -> "LeviFunction":
        """mass / (width sqrt(2 pi)) exp(-(s - center)^2 / 2 width^2) on each listed component."""
        if width <= 0:
            raise ValidationError("width must be positive", {"width": width})
        norm = mass / (width * math.sqrt(TWO_PI))

        def evaluate(sign: float, s: np.ndarray) -> np.ndarray:
            return norm * np.exp(-0.5 * ((np.asarray(s) - center) / width) ** 2)

        return cls(evaluator=evaluate,
                   support=(center - GAUSSIAN_REACH * width, center + GAUSSIAN_REACH * width),
                   signs=tuple(sorted(signs)), smoothness=None,
                   descriptor={"kind": "gaussian", "center": center, "width": width,
                               "mass": mass, "signs": list(signs)})

    @classmethod
    def from_samples(cls, s_nodes: np.ndarray, values: Dict[float, np.ndarray]) -> "LeviFunction":
        """Cubic-spline interpolant of samples on a uniform s-grid, per component."""
        s_nodes = np.asarray(s_nodes, dtype=float)
        splines = {float(sign): _coefficient_interpolator(s_nodes, np.asarray(v, dtype=complex)[:, None])
                   for sign, v in values.items()}

        def evaluate(sign: float, s: np.ndarray) -> np.ndarray:
            return splines[sign](np.asarray(s, dtype=float))[..., 0]

        return cls(evaluator=evaluate, support=(float(s_nodes[0]), float(s_nodes[-1])),
                   signs=tuple(sorted(splines)), smoothness=2)


def levi_coordinates(ell: GroupElement) -> Tuple[float, float]:
    """(sign, s) of a diagonal element diag(a, 1/a); rejects anything else."""
    a, b, c, _ = ell.entries
    if abs(b) > 1e-12 or abs(c) > 1e-12:
        raise ValidationError("not an element of the Levi subgroup", {"entries": ell.entries})
    return math.copysign(1.0, a), math.log(abs(a))


def convolve_L(f1: LeviFunction, f2: LeviFunction, scheme: QuadratureScheme) -> LeviFunction:
    """(f1 * f2)(l) = integral over L of f1(m) f2(m^-1 l) dm."""
    nodes = f1.nodes(scheme)

    def evaluate(sign: float, s: np.ndarray) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        total = np.zeros(s.shape, dtype=complex)
        for sign1, s1, weighted in nodes:
            shifted = f2.evaluate(sign1 * sign, np.subtract.outer(s, s1))
            total += shifted @ weighted
        return total

    signs = tuple(sorted({a * b for a in f1.signs for b in f2.signs}))
    return LeviFunction(evaluator=evaluate,
                        support=(f1.support[0] + f2.support[0], f1.support[1] + f2.support[1]),
                        signs=signs)


# ---------------------------------------------------------------------------
# Constructors
# ---------------------------------------------------------------------------

def _coefficient_items(coeffs: Union[KSeries, Dict[int, complex]]) -> List[Tuple[int, complex]]:
    if isinstance(coeffs, KSeries):
        return [(int(j), complex(c)) for j, c in zip(coeffs.js, coeffs.coeffs) if c != 0]
    return [(int(j), complex(c)) for j, c in coeffs.items() if c != 0]


def _angular_sum(items: List[Tuple[int, complex]], theta: np.ndarray) -> np.ndarray:
    total = np.zeros(np.shape(theta), dtype=complex)
    for j, c in items:
        total += c * np.exp(1j * j * theta)
    return total


def gaussian_bump(side: Side, coeffs: Union[KSeries, Dict[int, complex]], u_center: float = 0.0,
                  width: float = 0.5, normalized: bool = False) -> PlaneFunction:
    """
    Log-polar Gaussian r^-1 exp(-(u - u0)^2 / 2 width^2) sum_j a_j e^{ij theta}.

    Its L2 norm squared is 2 pi width sqrt(pi) sum_j |a_j|^2; with
    normalized=True the coefficients are rescaled to unit norm.
    """
    items = _coefficient_items(coeffs)
    if not items:
        raise ValidationError("a bump needs at least one nonzero coefficient")
    if normalized:
        scale = 1.0 / math.sqrt(TWO_PI * width * math.sqrt(math.pi) * sum(abs(c) ** 2 for _, c in items))
        items = [(j, c * scale) for j, c in items]

    def evaluate(x: np.ndarray, y: np.ndarray) -> np.ndarray:
        u, theta = model_polar(side, x, y)
        return np.exp(-u - 0.5 * ((u - u_center) / width) ** 2) * _angular_sum(items, theta)

    descriptor = {"kind": "gaussian_bump", "side": side, "u_center": u_center, "width": width,
                  "coeffs": {str(j): [c.real, c.imag] for j, c in items}}
    return PlaneFunction(side=side, evaluator=evaluate, kind="atom",
                         u_range=(u_center - GAUSSIAN_REACH * width, u_center + GAUSSIAN_REACH * width),
                         decay_p=8, descriptor=descriptor)


def homogeneous_atom(mu: complex, coeffs: Union[KSeries, Dict[int, complex]], side: Side,
                     window: Optional[Tuple[float, float]] = None) -> PlaneFunction:
    """
    r^(-1 - i mu) (upper) or r^(-1 + i mu) (lower) times sum_j c_j e^{ij theta},
    optionally multiplied by the radial window exp(-(u - u0)^2 / 2 sigma^2).
    """
    items = _coefficient_items(coeffs)
    mu = complex(mu)
    exponent = -1.0 - 1j * mu if side == "upper" else -1.0 + 1j * mu

    def evaluate(x: np.ndarray, y: np.ndarray) -> np.ndarray:
        u, theta = model_polar(side, x, y)
        radial = np.exp(exponent * u)
        if window is not None:
            radial = radial * np.exp(-0.5 * ((u - window[0]) / window[1]) ** 2)
        return radial * _angular_sum(items, theta)

    if window is None:
        u_range, decay = (-12.0, 12.0), (0 if mu.imag == 0 else None)
    else:
        u_range = (window[0] - GAUSSIAN_REACH * window[1], window[0] + GAUSSIAN_REACH * window[1])
        decay = 8
    descriptor = {"kind": "homogeneous", "side": side, "mu": [mu.real, mu.imag],
                  "coeffs": {str(j): [c.real, c.imag] for j, c in items},
                  "window": None if window is None else list(window)}
    return PlaneFunction(side=side, evaluator=evaluate, kind="atom", u_range=u_range,
                         decay_p=decay, descriptor=descriptor)


def xi_plane(side: Side = "upper") -> PlaneFunction:
    """Xi_{G/N} as a plane function, r^-1."""
    return homogeneous_atom(0.0, {0: 1.0}, side)


def grid_function(side: Side, u_nodes: np.ndarray, coeffs: np.ndarray,
                  decay_p: Optional[int] = None, coset: str = "right") -> PlaneFunction:
    """Grid function from K-coefficients P_j(u_k) of its profile, j = -J..J."""
    u_nodes = np.asarray(u_nodes, dtype=float)
    coeffs = np.asarray(coeffs, dtype=complex)
    if coeffs.ndim != 2 or coeffs.shape[0] != u_nodes.size or coeffs.shape[1] % 2 == 0:
        raise ValidationError("grid coefficients must have shape (len(u_nodes), 2 jmax + 1)",
                              {"shape": coeffs.shape, "nodes": u_nodes.size})
    jmax = (coeffs.shape[1] - 1) // 2
    js = np.arange(-jmax, jmax + 1)
    interpolate = _coefficient_interpolator(u_nodes, coeffs)

    def evaluate(x: np.ndarray, y: np.ndarray) -> np.ndarray:
        x, y = np.broadcast_arrays(x, y)
        flat_x, flat_y = x.reshape(-1), y.reshape(-1)
        out = np.empty(flat_x.size, dtype=complex)
        step = max(1, EVAL_CHUNK // js.size)
        for start in range(0, flat_x.size, step):
            u, theta = model_polar(side, flat_x[start:start + step], flat_y[start:start + step])
            values = interpolate(u)
            phases = np.exp(1j * np.multiply.outer(theta, js))
            out[start:start + step] = np.sum(values * phases, axis=-1) * np.exp(-np.clip(u, -700, 700))
        return out.reshape(x.shape)

    return PlaneFunction(side=side, evaluator=evaluate, kind="grid", coset=coset,
                         u_range=(float(u_nodes[0]), float(u_nodes[-1])), decay_p=decay_p,
                         u_nodes=u_nodes, coeffs=coeffs)


def u_grid(scheme: QuadratureScheme) -> np.ndarray:
    """Uniform u-grid on [-radius, radius] with the scheme's log step."""
    half = int(round(scheme.radius / scheme.log_step))
    return scheme.log_step * np.arange(-half, half + 1, dtype=float)


def materialize(h: PlaneFunction, scheme: Optional[QuadratureScheme] = None, jmax: int = 16,
                oversample: int = 2) -> PlaneFunction:
    """
    Sample h on the log-polar grid of the scheme and keep K-types |j| <= jmax.

    The angular analysis uses oversample * (2 jmax + 2) equispaced model angles.
    """
    scheme = scheme or QuadratureScheme()
    nodes = u_grid(scheme)
    if h.is_grid and h.jmax == jmax and h.u_nodes.size == nodes.size and np.allclose(h.u_nodes, nodes):
        return h
    n_theta = oversample * (2 * jmax + 2)
    theta = TWO_PI * np.arange(n_theta) / n_theta
    samples = h.profile(nodes[:, None], theta[None, :])
    spectrum = np.fft.fft(samples, axis=1) / n_theta
    js = np.arange(-jmax, jmax + 1)
    logger.debug(f"materialized {h.kind} function on {nodes.size} x {n_theta} nodes")
    return grid_function(h.side, nodes, spectrum[:, js % n_theta], decay_p=h.decay_p, coset=h.coset)


def shifted_coefficients(h: PlaneFunction, sign: float, s: float) -> np.ndarray:
    """Profile coefficients of h . diag(sign e^s, sign e^-s) on the grid of h."""
    if not h.is_grid:
        raise ValidationError("shifted_coefficients needs a grid function")
    direction = 1.0 if h.side == "upper" else -1.0
    js = np.arange(-h.jmax, h.jmax + 1)
    parity = np.where(js % 2 == 0, 1.0, sign)
    return _coefficient_interpolator(h.u_nodes, h.coeffs)(h.u_nodes - direction * s) * parity


# ---------------------------------------------------------------------------
# Actions
# ---------------------------------------------------------------------------

def act_G_left(g: GroupElement, h: PlaneFunction) -> PlaneFunction:
    """(g . h)(x) = h(g^-1 x) on the column model."""
    if h.coset != "right":
        raise ValidationError("left translation acts on functions on G/N")
    inv = g.inverse().matrix
    spread = float(cartan_parameter(g.matrix))

    def evaluate(x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return h.evaluate(inv[0, 0] * x + inv[0, 1] * y, inv[1, 0] * x + inv[1, 1] * y)

    return h.lazy(evaluate, u_range=(h.u_range[0] - spread, h.u_range[1] + spread))


def act_L_right(ell: GroupElement, h: PlaneFunction) -> PlaneFunction:
    """
    (h . l)(x) = delta(l)^(-1/2) h(x l^-1) for l = diag(a, 1/a).

    Upper model: |a|^-1 h(x / a). Lower model: |a| h(a x).
    """
    sign, s = levi_coordinates(ell)
    a = sign * math.exp(s)
    if h.side == "upper":
        def evaluate(x: np.ndarray, y: np.ndarray) -> np.ndarray:
            return h.evaluate(x / a, y / a) / abs(a)
        shift = s
    else:
        def evaluate(x: np.ndarray, y: np.ndarray) -> np.ndarray:
            return abs(a) * h.evaluate(a * x, a * y)
        shift = -s
    return h.lazy(evaluate, u_range=(h.u_range[0] + shift, h.u_range[1] + shift))


def act_L_module(h: PlaneFunction, f: LeviFunction, scheme: Optional[QuadratureScheme] = None,
                 jmax: int = 16) -> PlaneFunction:
    """
    (h . f)(x) = integral over L of f(l) (h . l)(x) dl.

    Computed on the profile coefficients of h: the right L-action shifts
    P_j(u) by s and multiplies odd K-types by the sign of a.
    """
    scheme = scheme or QuadratureScheme()
    grid = h if h.is_grid else materialize(h, scheme, jmax)
    direction = 1.0 if grid.side == "upper" else -1.0
    interpolate = _coefficient_interpolator(grid.u_nodes, grid.coeffs)
    js = np.arange(-grid.jmax, grid.jmax + 1)
    result = np.zeros_like(grid.coeffs)
    for sign, s, weighted in f.nodes(scheme):
        parity = np.where(js % 2 == 0, 1.0, sign)
        shifted = interpolate(np.subtract.outer(grid.u_nodes, direction * s))
        result += np.einsum("ukj,k->uj", shifted, weighted) * parity
    peak = float(np.max(np.abs(result))) if result.size else 0.0
    edge = float(max(np.max(np.abs(result[0])), np.max(np.abs(result[-1])))) if result.size else 0.0
    if peak > 0 and edge > 1e-10 * peak:
        flag("L-module action leaves the u-grid", TruncationWarning, ratio=edge / peak)
    return grid_function(grid.side, grid.u_nodes, result, decay_p=grid.decay_p, coset=grid.coset)


def act_Sc_G(phi: Callable[[np.ndarray], np.ndarray], h: PlaneFunction,
             scheme: QuadratureScheme) -> PlaneFunction:
    """
    (phi h)(x) = integral over G of phi(g) h(g^-1 x) dg on G/N, and
    (h phi)(y) = integral over G of phi(g) h(y g^-1) dg on the row model of N\\G.

    phi is a vectorized function on arrays of matrices; its support box comes
    from phi.iwasawa_box() when available. The result is evaluated lazily,
    one Haar-node sum per point.
    """
    mats, weights, values = weighted_nodes(phi, scheme, prune=True)
    coeffs = weights * values
    inverses = inverse_matrices(mats)
    if h.coset == "left":
        inverses = np.swapaxes(inverses, -1, -2)
    spread = float(np.max(cartan_parameter(mats))) if mats.size else 0.0
    logger.debug(f"act_Sc_G with {coeffs.size} active Haar nodes")

    def evaluate(x: np.ndarray, y: np.ndarray) -> np.ndarray:
        x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        points = np.stack([x.reshape(-1), y.reshape(-1)], axis=-1)
        out = np.zeros(points.shape[0], dtype=complex)
        if coeffs.size == 0:
            return out.reshape(x.shape)
        step = max(1, EVAL_CHUNK // coeffs.size)
        for start in range(0, points.shape[0], step):
            moved = np.einsum("nij,mj->nmi", inverses, points[start:start + step])
            out[start:start + step] = coeffs @ h.evaluate(moved[..., 0], moved[..., 1])
        return out.reshape(x.shape)

    return h.lazy(evaluate, u_range=(h.u_range[0] - spread, h.u_range[1] + spread))


def convolve_G(phi1: Any, phi2: Any, scheme: QuadratureScheme) -> GroupConvolution:
    """(phi1 * phi2)(g) = integral over G of phi1(h) phi2(h^-1 g) dh, as a lazy integrand."""
    return GroupConvolution(first=phi1, second=phi2, scheme=scheme)


# ---------------------------------------------------------------------------
# Row models
# ---------------------------------------------------------------------------

def invert_cosets(h: PlaneFunction) -> PlaneFunction:
    """
    Pull a function on N\\G back to G/N along g -> g^-1.

    N+\\G is modeled by the second row of g and N-\\G by the first row. For
    x the first (second) column of g the matching row of g^-1 is R x with
    R = [[0, -1], [1, 0]] (upper) or R^-1 (lower).
    """
    if h.coset != "left":
        raise ValidationError("invert_cosets expects a function on N\\G")
    if h.side == "upper":
        def evaluate(x: np.ndarray, y: np.ndarray) -> np.ndarray:
            return h.evaluate(-y, x)
    else:
        def evaluate(x: np.ndarray, y: np.ndarray) -> np.ndarray:
            return h.evaluate(y, -x)
    return h.lazy(evaluate, coset="right")


def as_row_function(h: PlaneFunction) -> PlaneFunction:
    """Inverse of invert_cosets: the function on N\\G whose pullback is h."""
    if h.coset != "right":
        raise ValidationError("as_row_function expects a function on G/N")
    if h.side == "upper":
        def evaluate(x: np.ndarray, y: np.ndarray) -> np.ndarray:
            return h.evaluate(y, -x)
    else:
        def evaluate(x: np.ndarray, y: np.ndarray) -> np.ndarray:
            return h.evaluate(-y, x)
    return h.lazy(evaluate, coset="left")


def star(h: PlaneFunction) -> PlaneFunction:
    """h*(g) = conj h(g^-1), exchanging the row and column models."""
    moved = invert_cosets(h) if h.coset == "left" else as_row_function(h)
    return moved.lazy(lambda x, y: np.conj(moved.evaluate(x, y)))


# ---------------------------------------------------------------------------
# Xi, norms and seminorms on G/N
# ---------------------------------------------------------------------------

def xi_gmodn(point: Union[Tuple[float, float], np.ndarray], side: Side = "upper") -> np.ndarray:
    """Xi_{G/N}(r omega) = r^-1 on either side."""
    x, y = _as_points(point)
    return 1.0 / np.hypot(x, y)


def norm_gmodn(point: Union[Tuple[float, float], np.ndarray], side: Side = "upper") -> np.ndarray:
    """|x| = max(r, 1/r), the norm of the Iwasawa a-part."""
    x, y = _as_points(point)
    r = np.hypot(x, y)
    return np.maximum(r, 1.0 / r)


def seminorm_from_ratio(u: np.ndarray, ratio: np.ndarray, p: int, radius: float) -> SeminormEstimate:
    value = float(np.max(ratio))
    outer = np.abs(u) >= radius - 1.0
    inner_max = float(np.max(ratio[~outer])) if np.any(~outer) else 0.0
    outer_max = float(np.max(ratio[outer])) if np.any(outer) else 0.0
    boundary_ratio = outer_max / inner_max if inner_max > 0 else (math.inf if outer_max > 0 else 0.0)
    divergent = boundary_ratio > 1.0 + 1e-9
    if divergent:
        flag("seminorm grows toward the sampling boundary", DivergenceWarning,
             p=p, boundary_ratio=boundary_ratio)
    return SeminormEstimate(value=value, p=p, divergent=divergent, boundary_ratio=boundary_ratio)


def hc_seminorm(h: PlaneFunction, p: int, scheme: Optional[QuadratureScheme] = None) -> SeminormEstimate:
    """
    Sampled sup of |h(x)| (1 + log|x|)^p / Xi(x).

    In log-polar coordinates this is |P(u, theta)| (1 + |u|)^p. The estimate
    is flagged divergent when the outermost unit band of the u-grid beats the
    interior supremum.
    """
    if p < 0:
        raise ValidationError("seminorm exponent must be nonnegative", {"p": p})
    scheme = scheme or QuadratureScheme()
    u = u_grid(scheme)
    theta = TWO_PI * np.arange(scheme.theta_nodes) / scheme.theta_nodes
    values = np.abs(h.profile(u[:, None], theta[None, :])).max(axis=1)
    return seminorm_from_ratio(u, values * (1.0 + np.abs(u)) ** p, p, scheme.radius)


def hc_seminorm_first_order(h: PlaneFunction, p: int,
                            scheme: Optional[QuadratureScheme] = None) -> SeminormEstimate:
    """
    First-order seminorm: the larger of the seminorms of dP/du (the A-direction)
    and dP/dtheta (the K-direction), both by central differences.
    """
    if p < 0:
        raise ValidationError("seminorm exponent must be nonnegative", {"p": p})
    scheme = scheme or QuadratureScheme()
    u = u_grid(scheme)
    theta = TWO_PI * np.arange(scheme.theta_nodes) / scheme.theta_nodes
    du, dtheta = 1e-4, 1e-4
    U, T = u[:, None], theta[None, :]
    along_a = (h.profile(U + du, T) - h.profile(U - du, T)) / (2 * du)
    along_k = (h.profile(U, T + dtheta) - h.profile(U, T - dtheta)) / (2 * dtheta)
    values = np.maximum(np.abs(along_a), np.abs(along_k)).max(axis=1)
    return seminorm_from_ratio(u, values * (1.0 + np.abs(u)) ** p, p, scheme.radius)


def l2_inner(h1: PlaneFunction, h2: PlaneFunction, scheme: Optional[QuadratureScheme] = None) -> complex:
    """
    L2 inner product over the plane, conjugate-linear in h1.

    Lebesgue measure is r^2 du dtheta, so the integral is the trapezoid sum
    of conj(P1) P2 over the common u-range and equispaced model angles.
    """
    if h1.side != h2.side or h1.coset != h2.coset:
        raise ValidationError("inner product needs functions on the same model",
                              {"sides": (h1.side, h2.side)})
    scheme = scheme or QuadratureScheme()
    lo = max(h1.u_range[0], h2.u_range[0], -scheme.radius)
    hi = min(h1.u_range[1], h2.u_range[1], scheme.radius)
    if hi <= lo:
        return 0j
    n = max(2, int(math.ceil((hi - lo) / scheme.log_step)) + 1)
    u = np.linspace(lo, hi, n)
    weights = np.full(n, (hi - lo) / (n - 1))
    weights[0] = weights[-1] = 0.5 * weights[0]
    theta = TWO_PI * np.arange(scheme.theta_nodes) / scheme.theta_nodes
    U, T = u[:, None], theta[None, :]
    integrand = np.mean(np.conj(h1.profile(U, T)) * h2.profile(U, T), axis=1) * TWO_PI
    peak = float(np.max(np.abs(integrand)))
    edge = float(max(abs(integrand[0]), abs(integrand[-1])))
    if peak > 0 and edge > 1e-10 * peak:
        flag("inner product integrand not negligible at the u-range ends", TruncationWarning,
             ratio=edge / peak)
    return complex(np.dot(weights, integrand))


def l2_norm(h: PlaneFunction, scheme: Optional[QuadratureScheme] = None) -> float:
    return math.sqrt(max(l2_inner(h, h, scheme).real, 0.0))


# ---------------------------------------------------------------------------
# Import / export
# ---------------------------------------------------------------------------

def export_grid_csv(h: PlaneFunction, path: str, oversample: int = 2) -> None:
    """Write profile samples P(u, theta) of a grid function as rows u, theta, re, im."""
    if not h.is_grid:
        raise ValidationError("only grid functions can be exported as CSV")
    n_theta = oversample * (2 * h.jmax + 2)
    theta = TWO_PI * np.arange(n_theta) / n_theta
    samples = h.coeffs @ np.exp(1j * np.multiply.outer(np.arange(-h.jmax, h.jmax + 1), theta))
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["u", "theta", "re", "im"])
        for i, u in enumerate(h.u_nodes):
            for k, th in enumerate(theta):
                writer.writerow([repr(float(u)), repr(float(th)),
                                 repr(float(samples[i, k].real)), repr(float(samples[i, k].imag))])
    logger.info(f"exported grid function to {path}")


def import_grid_csv(path: str, side: Side, jmax: Optional[int] = None) -> PlaneFunction:
    """Read rows u, theta, re, im written by export_grid_csv."""
    rows: Dict[float, Dict[float, complex]] = {}
    with open(path, newline="") as handle:
        for row in csv.DictReader(handle):
            rows.setdefault(float(row["u"]), {})[float(row["theta"])] = complex(float(row["re"]), float(row["im"]))
    if not rows:
        raise ValidationError("empty grid file", {"path": path})
    u_nodes = np.array(sorted(rows))
    n_theta = len(rows[u_nodes[0]])
    jmax = n_theta // 4 - 1 if jmax is None else jmax
    samples = np.array([[rows[u][th] for th in sorted(rows[u])] for u in u_nodes])
    spectrum = np.fft.fft(samples, axis=1) / n_theta
    js = np.arange(-jmax, jmax + 1)
    return grid_function(side, u_nodes, spectrum[:, js % n_theta])


def atom_to_json(h: PlaneFunction) -> str:
    if h.descriptor is None:
        raise ValidationError("only closed-form atoms have JSON descriptors", {"kind": h.kind})
    return dump_json(h.descriptor)


def atom_from_json(text: str) -> PlaneFunction:
    payload = json.loads(text)
    coeffs = {int(j): complex(v[0], v[1]) for j, v in payload.get("coeffs", {}).items()}
    if payload.get("kind") == "gaussian_bump":
        return gaussian_bump(payload["side"], coeffs, payload["u_center"], payload["width"])
    if payload.get("kind") == "homogeneous":
        window = payload.get("window")
        return homogeneous_atom(complex(*payload["mu"]), coeffs, payload["side"],
                                None if window is None else tuple(window))
    raise ValidationError("unknown atom descriptor", {"kind": payload.get("kind")})
