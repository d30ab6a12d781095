"""
Group Structure Module

Structure theory of G = SL(2,R) used by every other module:
- Iwasawa decompositions G = K A N+ and G = K A N-
- Cartan decomposition G = K A K and the group norm
- Modular functions delta+ and delta-
- The Harish-Chandra Xi-function
- Haar integration in Iwasawa, N- L N+ and Cartan coordinates

Haar measure is normalized as dp dq dr / |p| in the matrix entries
[[p, q], [r, s]]. In Iwasawa coordinates g = k_theta a_t n_x this is
e^{2t} dtheta dt dx, in N- L N+ coordinates it is delta+(l) dnbar dl dn and
on bi-K-invariant functions it is 4 pi^2 sinh(2t) dt.

Batch helpers work on arrays of shape (..., 2, 2); the GroupElement
operations are thin wrappers around them.
"""

import logging
import math
from typing import Any, Callable, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PrivateAttr

from exceptions import QuadratureUnderresolvedWarning, SupportOverflowError, TruncationWarning, ValidationError
from models import CartanFactors, GroupElement, IwasawaFactors, QuadratureScheme, Side
from utils import flag, gauss_legendre, log_tangent_rule

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi
BOUNDARY_RATIO = 1e-10
SUPPORT_THRESHOLD = 1e-13

GroupFunction = Callable[[np.ndarray], np.ndarray]


# ---------------------------------------------------------------------------
# Batch matrix constructors
# ---------------------------------------------------------------------------

def rotations(theta: np.ndarray) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    c, s = np.cos(theta), np.sin(theta)
    return np.stack([np.stack([c, -s], -1), np.stack([s, c], -1)], -2)


def diagonals(t: np.ndarray) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    zero = np.zeros_like(t)
    return np.stack([np.stack([np.exp(t), zero], -1), np.stack([zero, np.exp(-t)], -1)], -2)


def upper_unipotents(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    one, zero = np.ones_like(x), np.zeros_like(x)
    return np.stack([np.stack([one, x], -1), np.stack([zero, one], -1)], -2)


def lower_unipotents(y: np.ndarray) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    one, zero = np.ones_like(y), np.zeros_like(y)
    return np.stack([np.stack([one, zero], -1), np.stack([y, one], -1)], -2)


def levi_elements(sign: np.ndarray, s: np.ndarray) -> np.ndarray:
    """diag(sign e^s, sign e^-s)."""
    s = np.asarray(s, dtype=float)
    sign = np.broadcast_to(np.asarray(sign, dtype=float), s.shape)
    zero = np.zeros_like(s)
    return np.stack([np.stack([sign * np.exp(s), zero], -1),
                     np.stack([zero, sign * np.exp(-s)], -1)], -2)


def inverse_matrices(g: np.ndarray) -> np.ndarray:
    out = np.empty_like(g)
    out[..., 0, 0] = g[..., 1, 1]
    out[..., 1, 1] = g[..., 0, 0]
    out[..., 0, 1] = -g[..., 0, 1]
    out[..., 1, 0] = -g[..., 1, 0]
    return out


def from_iwasawa(theta: np.ndarray, t: np.ndarray, x: np.ndarray, side: Side = "upper") -> np.ndarray:
    unipotent = upper_unipotents(x) if side == "upper" else lower_unipotents(x)
    return rotations(theta) @ diagonals(t) @ unipotent


def iwasawa_coordinates(g: np.ndarray, side: Side = "upper") -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(theta, t, x) with g = k_theta a_t n_x; theta in [0, 2pi)."""
    g = np.asarray(g, dtype=float)
    if side == "upper":
        p, r = g[..., 0, 0], g[..., 1, 0]
        alpha = np.hypot(p, r)
        theta = np.arctan2(r, p)
        x = (np.cos(theta) * g[..., 0, 1] + np.sin(theta) * g[..., 1, 1]) / alpha
        return np.mod(theta, TWO_PI), np.log(alpha), x
    if side == "lower":
        q, s = g[..., 0, 1], g[..., 1, 1]
        rho = np.hypot(q, s)
        theta = np.arctan2(-q, s)
        t = -np.log(rho)
        y = np.exp(t) * (-np.sin(theta) * g[..., 0, 0] + np.cos(theta) * g[..., 1, 0])
        return np.mod(theta, TWO_PI), t, y
    raise ValidationError(f"unknown side {side!r}")


def nln_coordinates(g: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """(y, sign, s, x) with g = nbar_y diag(sign e^s, sign e^-s) n_x; needs g[0,0] != 0."""
    g = np.asarray(g, dtype=float)
    a = g[..., 0, 0]
    with np.errstate(divide="ignore", invalid="ignore"):
        return g[..., 1, 0] / a, np.sign(a), np.log(np.abs(a)), g[..., 0, 1] / a


def from_nln(y: np.ndarray, sign: np.ndarray, s: np.ndarray, x: np.ndarray) -> np.ndarray:
    return lower_unipotents(y) @ levi_elements(sign, s) @ upper_unipotents(x)


# ---------------------------------------------------------------------------
# Decompositions, modular functions, norm
# ---------------------------------------------------------------------------

def iwasawa(g: GroupElement, side: Side = "upper") -> IwasawaFactors:
    """
    Iwasawa factorization g = k a n.

    Args:
        g (GroupElement): element to factor
        side (Side): "upper" for n in N+, "lower" for n in N-

    Returns:
        IwasawaFactors: rotation, positive diagonal and unipotent factors
    """
    theta, t, x = (float(v) for v in iwasawa_coordinates(g.matrix, side))
    n = GroupElement.upper_unipotent(x) if side == "upper" else GroupElement.lower_unipotent(x)
    return IwasawaFactors(k=GroupElement.rotation(theta), a=GroupElement.diagonal(math.exp(t)),
                          n=n, side=side, theta=theta, t=t, x=x)


def cartan(g: GroupElement) -> CartanFactors:
    """
    Cartan factorization g = k1 a k2 with a = diag(sigma, 1/sigma), sigma >= 1.

    The rotation factors are made unique up to the stabilizer of a by
    requiring the angle of k1 to lie in [0, pi).
    """
    u, sigma, _ = np.linalg.svd(g.matrix)
    phi1 = math.atan2(u[1, 0], u[0, 0]) % math.pi
    if phi1 >= math.pi:
        # -0.0 % pi rounds up to pi
        phi1 = 0.0
    t = math.log(sigma[0])
    k1 = rotations(phi1)
    k2 = diagonals(-t) @ k1.T @ g.matrix
    phi2 = math.atan2(k2[1, 0], k2[0, 0]) % TWO_PI
    return CartanFactors(k1=GroupElement.rotation(phi1), a=GroupElement.diagonal(math.exp(t)),
                         k2=GroupElement.rotation(phi2), phi1=phi1, t=t, phi2=phi2)


def cartan_parameter(g: np.ndarray) -> np.ndarray:
    """Batch version of cartan(g).t: log of the largest singular value."""
    g = np.asarray(g, dtype=float)
    frob2 = np.sum(g ** 2, axis=(-2, -1))
    # sigma^2 + sigma^-2 = |g|_F^2 for det g = 1
    return 0.5 * np.arccosh(np.maximum(frob2 / 2.0, 1.0))


def modular_delta(g: GroupElement, side: Side = "upper") -> float:
    """delta+(g) = |g e1|^2 and delta-(g) = |g e2|^2 via the Iwasawa a-part."""
    return float(delta_batch(g.matrix, side))


def delta_batch(g: np.ndarray, side: Side = "upper") -> np.ndarray:
    column = 0 if side == "upper" else 1
    return g[..., 0, column] ** 2 + g[..., 1, column] ** 2


def group_norm(g: GroupElement) -> float:
    """max(sigma, 1/sigma) for the Cartan a-part, i.e. the spectral norm."""
    return float(math.exp(cartan_parameter(g.matrix)))


# ---------------------------------------------------------------------------
# Xi-function
# ---------------------------------------------------------------------------

def _xi_of_t(t: np.ndarray, side: Side, step: float, radius: float) -> np.ndarray:
    t = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.empty_like(t)
    for i, ti in enumerate(t):
        theta, weights = log_tangent_rule(float(ti), step, radius)
        c2, s2 = np.cos(theta) ** 2, np.sin(theta) ** 2
        if side == "upper":
            sq = np.exp(2 * ti) * c2 + np.exp(-2 * ti) * s2
        else:
            sq = np.exp(2 * ti) * s2 + np.exp(-2 * ti) * c2
        out[i] = np.sum(weights / np.sqrt(sq))
    return out


def xi_diagonal(t: np.ndarray, scheme: QuadratureScheme, side: Side = "upper") -> np.ndarray:
    """Xi(a_t) for an array of t."""
    return _xi_of_t(t, side, scheme.k_log_step, scheme.k_log_radius)


def xi(g: GroupElement, scheme: Optional[QuadratureScheme] = None, side: Side = "upper") -> float:
    """
    Harish-Chandra Xi-function (1/2pi) * integral over K of delta(gk)^(-1/2).

    The integral is reduced to the Cartan a-part by bi-K-invariance and
    evaluated with the log-tangent K-rule. A second evaluation at twice the
    step raises QuadratureUnderresolvedWarning when the two disagree.

    Args:
        g (GroupElement): group element
        scheme (QuadratureScheme): quadrature parameters
        side (Side): use delta+ ("upper") or delta- ("lower")

    Returns:
        float: Xi(g)
    """
    scheme = scheme or QuadratureScheme()
    t = cartan(g).t
    value = float(_xi_of_t(t, side, scheme.k_log_step, scheme.k_log_radius)[0])
    check = float(_xi_of_t(t, side, 2 * scheme.k_log_step, scheme.k_log_radius)[0])
    if abs(value - check) > scheme.tolerance * value:
        flag("Xi quadrature under-resolved", QuadratureUnderresolvedWarning,
             t=t, shift=abs(value - check))
    return value


def spherical_average(g1: GroupElement, g2: GroupElement, scheme: QuadratureScheme) -> float:
    """(1/2pi) * integral over K of Xi(g1 k g2) dk with Gauss-Legendre K-nodes."""
    theta, weights = gauss_legendre(scheme.k_nodes, 0.0, TWO_PI)
    mats = g1.matrix @ rotations(theta) @ g2.matrix
    values = xi_diagonal(cartan_parameter(mats), scheme)
    return float(np.dot(weights, values) / TWO_PI)


def xi_decay_constant(ts: Sequence[float], scheme: QuadratureScheme) -> float:
    """Smallest C with Xi(a_t) <= C (1 + t) e^-t on the sampled t."""
    ts = np.asarray(ts, dtype=float)
    return float(np.max(xi_diagonal(ts, scheme) * np.exp(ts) / (1.0 + ts)))


# ---------------------------------------------------------------------------
# Haar integration
# ---------------------------------------------------------------------------

class IwasawaBox(BaseModel):
    """
    Integration box in Iwasawa coordinates (theta, t, x).

    With scaled=True the x-range is read in xi = e^t x (e^-t y on the lower
    side), the coordinate in which a_t n_x = [[e^t, xi], [0, e^-t]]. Haar
    measure there is e^t dtheta dt dxi (e^-t on the lower side).
    """
    model_config = ConfigDict(frozen=True)

    theta: Tuple[float, float] = (0.0, TWO_PI)
    t: Tuple[float, float]
    x: Tuple[float, float]
    compact: bool = False
    scaled: bool = False


class NLNBox(BaseModel):
    """Integration box in N- L N+ coordinates, one per sign component of L."""
    model_config = ConfigDict(frozen=True)

    y: Tuple[float, float]
    s: Tuple[float, float]
    x: Tuple[float, float]
    signs: Tuple[float, ...] = (1.0,)
    compact: bool = False


def haar_density(t: np.ndarray) -> np.ndarray:
    """Density of Haar measure against dtheta dt dx in Iwasawa coordinates."""
    return np.exp(2.0 * np.asarray(t, dtype=float))


def box_matrices(box: IwasawaBox, theta: np.ndarray, t: np.ndarray, x: np.ndarray,
                 side: Side = "upper") -> np.ndarray:
    """Matrices at box coordinates, undoing the xi scaling of scaled boxes."""
    if box.scaled:
        x = x * np.exp(-t if side == "upper" else t)
    return from_iwasawa(theta, t, x, side)


def _angular_arc(theta: np.ndarray, significant: np.ndarray, cell: float) -> Tuple[float, float]:
    idx = np.flatnonzero(significant)
    if idx.size == 0:
        return 0.0, TWO_PI
    angles = np.sort(theta[idx])
    gaps = np.diff(np.concatenate([angles, [angles[0] + TWO_PI]]))
    k = int(np.argmax(gaps))
    if gaps[k] <= 3 * cell:
        return 0.0, TWO_PI
    start = angles[(k + 1) % angles.size]
    end = angles[k] if k + 1 < angles.size else angles[k]
    if end < start:
        end += TWO_PI
    return start - cell, end + cell


def detect_iwasawa_box(phi: GroupFunction, scheme: QuadratureScheme, coarse: int = 97) -> IwasawaBox:
    """
    Bounding box of the region where |phi| exceeds 1e-13 of its peak, found on
    a coarse global grid. Raises TruncationWarning when the region reaches
    the truncation radius.
    """
    radius = scheme.radius
    theta = np.linspace(0.0, TWO_PI, 64, endpoint=False)
    t = np.linspace(-radius, radius, coarse)
    x = np.linspace(-radius, radius, coarse)
    T, TT, X = np.meshgrid(theta, t, x, indexing="ij")
    values = np.abs(phi(from_iwasawa(T, TT, X * np.exp(-TT))))
    peak = float(values.max())
    if peak == 0.0:
        return IwasawaBox(t=(-1.0, 1.0), x=(-1.0, 1.0))
    mask = values > SUPPORT_THRESHOLD * peak
    dt = t[1] - t[0]
    t_idx = np.flatnonzero(mask.any(axis=(0, 2)))
    x_idx = np.flatnonzero(mask.any(axis=(0, 1)))
    if t_idx[0] == 0 or t_idx[-1] == t.size - 1 or x_idx[0] == 0 or x_idx[-1] == x.size - 1:
        flag("integrand significant at the truncation radius", TruncationWarning, radius=radius)
    arc = _angular_arc(theta, mask.any(axis=(1, 2)), theta[1] - theta[0])
    return IwasawaBox(theta=arc,
                      t=(max(-radius, t[t_idx[0]] - dt), min(radius, t[t_idx[-1]] + dt)),
                      x=(max(-radius, x[x_idx[0]] - dt), min(radius, x[x_idx[-1]] + dt)), scaled=True)


def _boundary_check(phi: GroupFunction, box: IwasawaBox, peak: float) -> None:
    if box.compact or peak == 0.0:
        return
    theta = np.linspace(box.theta[0], box.theta[1], 16)
    inner = np.linspace(0.0, 1.0, 16)
    faces = []
    for t_edge in box.t:
        T, X = np.meshgrid(theta, box.x[0] + inner * (box.x[1] - box.x[0]), indexing="ij")
        faces.append(phi(box_matrices(box, T, np.full_like(T, t_edge), X)))
    for x_edge in box.x:
        T, TT = np.meshgrid(theta, box.t[0] + inner * (box.t[1] - box.t[0]), indexing="ij")
        faces.append(phi(box_matrices(box, T, TT, np.full_like(T, x_edge))))
    edge = max(float(np.max(np.abs(f))) for f in faces)
    if edge > BOUNDARY_RATIO * peak:
        flag("integrand not negligible on the box boundary", TruncationWarning,
             ratio=edge / peak)


def integrate_G(phi: GroupFunction, scheme: QuadratureScheme,
                box: Optional[IwasawaBox] = None) -> complex:
    """
    Haar integral of phi over G in Iwasawa coordinates.

    Args:
        phi: vectorized function of an array of matrices (..., 2, 2)
        scheme (QuadratureScheme): Gauss-Legendre node counts
        box (Optional[IwasawaBox]): integration box; taken from phi.iwasawa_box()
            when phi provides one, otherwise detected on a coarse grid

    Returns:
        complex: the integral
    """
    mats, weights, values = weighted_nodes(phi, scheme, box)
    logger.debug(f"integrate_G on {values.size} nodes")
    return complex(np.sum(weights * values))


def haar_nodes(box: IwasawaBox, scheme: QuadratureScheme,
               side: Side = "upper") -> Tuple[np.ndarray, np.ndarray]:
    """
    Flattened tensor Gauss-Legendre nodes (n, 2, 2) and Haar weights (n,) on a box.

    With side="lower" the box is read in the coordinates g = k_theta a_t nbar_y,
    where Haar measure is e^{-2t} dtheta dt dy.
    """
    theta, wth = gauss_legendre(scheme.k_nodes, *box.theta)
    t, wt = gauss_legendre(scheme.t_nodes, *box.t)
    x, wx = gauss_legendre(scheme.x_nodes, *box.x)
    T, TT, X = np.meshgrid(theta, t, x, indexing="ij")
    sign = 1.0 if side == "upper" else -1.0
    density = haar_density(sign * t)
    if box.scaled:
        density = density * np.exp(-sign * t)
    weights = np.einsum("i,j,k->ijk", wth, wt * density, wx)
    return box_matrices(box, T, TT, X, side).reshape(-1, 2, 2), weights.reshape(-1)


def weighted_nodes(phi: GroupFunction, scheme: QuadratureScheme,
                   box: Optional[IwasawaBox] = None,
                   prune: bool = False) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Haar nodes on the support box of phi with the values of phi there.

    With prune=True nodes where |weight * phi| is below 1e-16 of the largest
    contribution are dropped, which keeps nested quadratures affordable.
    """
    if box is None:
        box = phi.iwasawa_box() if hasattr(phi, "iwasawa_box") else detect_iwasawa_box(phi, scheme)
    mats, weights = haar_nodes(box, scheme)
    values = np.asarray(phi(mats), dtype=complex)
    _boundary_check(phi, box, float(np.max(np.abs(values))) if values.size else 0.0)
    if prune and values.size:
        contribution = np.abs(weights * values)
        keep = contribution > 1e-16 * contribution.max()
        mats, weights, values = mats[keep], weights[keep], values[keep]
    return mats, weights, values


def integrate_NLN(phi: GroupFunction, scheme: QuadratureScheme,
                  box: Optional[NLNBox] = None) -> complex:
    """
    Integral of phi(nbar l n) delta+(l) over N- x L x N+.

    Agrees with integrate_G for integrable phi: the complement of the open
    cell N- L N+ has measure zero.
    """
    if box is None:
        if not hasattr(phi, "nln_box"):
            raise ValidationError("integrate_NLN needs an explicit box for this integrand")
        box = phi.nln_box()
    y, wy = gauss_legendre(scheme.x_nodes, *box.y)
    s, ws = gauss_legendre(scheme.t_nodes, *box.s)
    x, wx = gauss_legendre(scheme.x_nodes, *box.x)
    Y, S, X = np.meshgrid(y, s, x, indexing="ij")
    weights = np.einsum("i,j,k->ijk", wy, ws * np.exp(2.0 * s), wx)
    total = 0j
    for sign in box.signs:
        values = np.asarray(phi(from_nln(Y, sign, S, X)), dtype=complex)
        total += np.sum(weights * values)
    return complex(total)


def integrate_bi_invariant(profile: Callable[[np.ndarray], np.ndarray], radius: float,
                           scheme: QuadratureScheme) -> float:
    """Integral over G of a bi-K-invariant function F(k1 a_t k2) = profile(t)."""
    panels = max(1, int(math.ceil(radius / 2.0)))
    total = 0.0
    for i in range(panels):
        t, w = gauss_legendre(scheme.t_nodes, radius * i / panels, radius * (i + 1) / panels)
        total += float(np.dot(w, profile(t) * np.sinh(2.0 * t)))
    return 4.0 * math.pi ** 2 * total


def square_integrability_profile(radii: Sequence[float], scheme: QuadratureScheme,
                                 p: float = 4.0) -> List[float]:
    """Integral of Xi(g)^2 (1 + log|g|)^-p over the Cartan ball of each radius."""
    def profile(t: np.ndarray) -> np.ndarray:
        return xi_diagonal(t, scheme) ** 2 * (1.0 + t) ** (-p)
    return [integrate_bi_invariant(profile, float(r), scheme) for r in radii]


# ---------------------------------------------------------------------------
# Test bumps and random elements
# ---------------------------------------------------------------------------

def iwasawa_box_from_points(points: np.ndarray, scale: float, compact: bool) -> IwasawaBox:
    """Padded Iwasawa bounding box of sampled support points."""
    theta, t, x = iwasawa_coordinates(points)
    x = x * np.exp(t)
    pad_t = 0.1 * (np.ptp(t) + scale)
    pad_x = 0.1 * (np.ptp(x) + scale)
    arc = _angular_arc(theta, np.ones_like(theta, dtype=bool), 0.05 + 0.1 * np.ptp(t))
    return IwasawaBox(theta=arc, t=(t.min() - pad_t, t.max() + pad_t),
                      x=(x.min() - pad_x, x.max() + pad_x), compact=compact, scaled=True)


def nln_box_from_points(points: np.ndarray, scale: float, compact: bool) -> NLNBox:
    """Padded N- L N+ bounding box of sampled support points."""
    if np.min(np.abs(points[..., 0, 0])) < 1e-6:
        raise SupportOverflowError("support meets the complement of the open cell",
                                   {"min_entry": float(np.min(np.abs(points[..., 0, 0])))})
    y, sign, s, x = nln_coordinates(points)
    pads = [0.1 * (np.ptp(v) + scale) for v in (y, s, x)]
    return NLNBox(y=(y.min() - pads[0], y.max() + pads[0]),
                  s=(s.min() - pads[1], s.max() + pads[1]),
                  x=(x.min() - pads[2], x.max() + pads[2]),
                  signs=tuple(sorted(set(float(v) for v in sign))),
                  compact=compact)


def _sl2_exp(X: np.ndarray) -> np.ndarray:
    """exp of traceless 2x2 matrices in closed form."""
    d = -(X[..., 0, 0] * X[..., 1, 1] - X[..., 0, 1] * X[..., 1, 0])
    root = np.sqrt(d.astype(complex))
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.where(np.abs(root) > 1e-12, np.sinh(root) / np.where(root == 0, 1, root), 1.0)
    out = np.cosh(root)[..., None, None] * np.eye(2) + ratio[..., None, None] * X
    return out.real


class GroupBump(BaseModel):
    """
    Smooth bump phi(g) = mass * psi(|c^-1 g d^-1 - I|_F / width) on G.

    psi(r) = exp(-1/(1 - r^2)) for r < 1 ("compact") or exp(-r^2) ("gaussian").
    Left and right translates are bumps of the same kind with moved centers,
    and the support box is computed from sampled points of the support.
    """
    model_config = ConfigDict(frozen=True)

    left: GroupElement = Field(default_factory=GroupElement.identity)
    right: GroupElement = Field(default_factory=GroupElement.identity)
    width: float = Field(default=0.5, gt=0)
    kind: str = "compact"
    mass: float = 1.0

    def _distance(self, g: np.ndarray) -> np.ndarray:
        local = self.left.inverse().matrix @ g @ self.right.inverse().matrix
        return np.sqrt(np.sum((local - np.eye(2)) ** 2, axis=(-2, -1))) / self.width

    def __call__(self, g: np.ndarray) -> np.ndarray:
        r = self._distance(np.asarray(g, dtype=float))
        if self.kind == "gaussian":
            return self.mass * np.exp(-r ** 2)
        inside = r < 1.0
        safe = np.where(inside, r, 0.0)
        return self.mass * np.where(inside, np.exp(-1.0 / (1.0 - safe ** 2)), 0.0)

    @property
    def is_compact(self) -> bool:
        return self.kind == "compact"

    @property
    def support_scale(self) -> float:
        return self.width

    def reach(self) -> float:
        return 1.0 if self.kind == "compact" else math.sqrt(-math.log(SUPPORT_THRESHOLD))

    def support_points(self, resolution: int = 15) -> np.ndarray:
        """Matrices covering the support, c exp(X) d with X in a box of sl2."""
        span = 1.2 * self.reach() * self.width
        grid = np.linspace(-span, span, resolution)
        A, B, C = np.meshgrid(grid, grid, grid, indexing="ij")
        X = np.stack([np.stack([A, B], -1), np.stack([C, -A], -1)], -2).reshape(-1, 2, 2)
        points = self.left.matrix @ _sl2_exp(X) @ self.right.matrix
        return points[self._distance(points) <= 1.0 * self.reach()]

    def iwasawa_box(self) -> IwasawaBox:
        return iwasawa_box_from_points(self.support_points(), self.width, self.kind == "compact")

    def nln_box(self) -> NLNBox:
        return nln_box_from_points(self.support_points(), self.width, self.kind == "compact")

    def translated(self, left: Optional[GroupElement] = None,
                   right: Optional[GroupElement] = None) -> "GroupBump":
        """g -> phi(g0 g) for left=g0 and g -> phi(g g0) for right=g0."""
        update = {}
        if left is not None:
            update["left"] = left.inverse() @ self.left
        if right is not None:
            update["right"] = self.right @ right.inverse()
        return self.model_copy(update=update)

    def normalized(self, scheme: QuadratureScheme) -> "GroupBump":
        total = integrate_G(self.model_copy(update={"mass": 1.0}), scheme).real
        return self.model_copy(update={"mass": 1.0 / total})


class GroupConvolution(BaseModel):
    """
    (phi1 * phi2)(g) = integral over G of phi1(h) phi2(h^-1 g) dh.

    The inner integral runs over the pruned Haar nodes of phi1, computed
    once per instance.
    """
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    first: Any
    second: Any
    scheme: QuadratureScheme
    _nodes: Any = PrivateAttr(default=None)

    @property
    def is_compact(self) -> bool:
        return self.first.is_compact and self.second.is_compact

    @property
    def support_scale(self) -> float:
        return self.first.support_scale + self.second.support_scale

    def _quadrature(self) -> Tuple[np.ndarray, np.ndarray]:
        if self._nodes is None:
            mats, weights, values = weighted_nodes(self.first, self.scheme, prune=True)
            self._nodes = (inverse_matrices(mats), weights * values)
        return self._nodes

    def __call__(self, g: np.ndarray) -> np.ndarray:
        g = np.asarray(g, dtype=float)
        flat = g.reshape(-1, 2, 2)
        inverses, coeffs = self._quadrature()
        out = np.empty(flat.shape[0], dtype=complex)
        chunk = max(1, 2_000_000 // max(1, coeffs.size))
        for start in range(0, flat.shape[0], chunk):
            block = flat[start:start + chunk]
            out[start:start + chunk] = coeffs @ self.second(inverses[:, None] @ block[None])
        return out.reshape(g.shape[:-2])

    def support_points(self) -> np.ndarray:
        first = self.first.support_points()
        second = self.second.support_points()
        first = first[::max(1, first.shape[0] // 200)]
        second = second[::max(1, second.shape[0] // 200)]
        return (first[:, None] @ second[None]).reshape(-1, 2, 2)

    def iwasawa_box(self) -> IwasawaBox:
        return iwasawa_box_from_points(self.support_points(), self.support_scale, self.is_compact)

    def nln_box(self) -> NLNBox:
        return nln_box_from_points(self.support_points(), self.support_scale, self.is_compact)


def random_group_matrices(rng: np.random.Generator, size: int, scale: float = 1.0) -> np.ndarray:
    """k a_t k' with uniform angles and |t| drawn from a half-normal of the given scale."""
    phi1 = rng.uniform(0.0, TWO_PI, size)
    phi2 = rng.uniform(0.0, TWO_PI, size)
    t = np.abs(rng.normal(0.0, scale, size))
    return rotations(phi1) @ diagonals(t) @ rotations(phi2)


def random_group_element(rng: np.random.Generator, scale: float = 1.0) -> GroupElement:
    return GroupElement.from_matrix(random_group_matrices(rng, 1, scale)[0])
