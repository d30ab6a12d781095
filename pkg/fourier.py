"""
Fourier Transform Module

Fourier transform along A on the plane models, realizing C(G/N) as
Schwartz functions of mu with values in functions on K:
- fourier_A / inverse_fourier_A between plane functions and SpectralFunctions
- extend_homogeneous and restriction to the unit circle for the spaces V(mu)
- Parity split, K-rotation and L-phases acting on spectral data
- Closed-form spectra of log-polar Gaussians and CSV export

Normalization: with P_j(u) the K-coefficients of the profile r h(r omega),
the upper transform is H_j(mu) = int P_j(u) e^{i mu u} du and the lower one
uses e^{-i mu u}. Then |h|^2 = sum_j int |H_j(mu)|^2 dmu, the element
diag(e^t, e^-t) acts by e^{i mu t}, and H(mu) restricts a function
homogeneous of degree -1 - i mu (upper) or -1 + i mu (lower).
"""

import csv
import logging
import math
from typing import Callable, Dict, Optional, Tuple, Union

import numpy as np

from exceptions import GridResolutionWarning, ValidationError
from function_models import (
    PlaneFunction,
    grid_function,
    homogeneous_atom,
    levi_coordinates,
    materialize,
    model_direction,
    u_grid,
)
from models import GroupElement, KSeries, QuadratureScheme, Side, SpectralFunction, SpectralGrid
from utils import flag

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi
TAIL_RATIO = 1e-8


def _direction(side: Side) -> float:
    return 1.0 if side == "upper" else -1.0


def _trapezoid_weights(nodes: np.ndarray) -> np.ndarray:
    weights = np.full(nodes.size, nodes[1] - nodes[0])
    weights[0] = weights[-1] = 0.5 * weights[0]
    return weights


def check_resolution(H: SpectralFunction) -> Tuple[float, float]:
    """
    Relative size of the coefficients at |j| = Jmax and at |mu| = M.

    Raises GridResolutionWarning when either exceeds 1e-8.
    """
    peak = float(np.max(np.abs(H.coeffs))) if H.coeffs.size else 0.0
    if peak == 0.0:
        return 0.0, 0.0
    j_tail = float(max(np.max(np.abs(H.coeffs[:, 0])), np.max(np.abs(H.coeffs[:, -1])))) / peak
    mu_tail = float(max(np.max(np.abs(H.coeffs[0])), np.max(np.abs(H.coeffs[-1])))) / peak
    if H.grid.jmax > 0 and j_tail > TAIL_RATIO:
        flag("K-type tail not resolved", GridResolutionWarning, jmax=H.grid.jmax, ratio=j_tail)
    if mu_tail > TAIL_RATIO:
        flag("spectral tail not resolved", GridResolutionWarning, mu_max=H.grid.mu_max, ratio=mu_tail)
    return j_tail, mu_tail


def fourier_A(h: PlaneFunction, grid: Optional[SpectralGrid] = None,
              scheme: Optional[QuadratureScheme] = None) -> SpectralFunction:
    """
    Fourier transform of h along A on the real mu-grid.

    Args:
        h (PlaneFunction): Harish-Chandra class function on G/N
        grid (SpectralGrid): mu-grid and K-type cutoff
        scheme (QuadratureScheme): log-polar sampling of h

    Returns:
        SpectralFunction: H_j(mu) for |j| <= Jmax on the grid nodes
    """
    grid = grid or SpectralGrid()
    if h.coset != "right":
        raise ValidationError("fourier_A acts on functions on G/N")
    sampled = materialize(h, scheme, grid.jmax, grid.oversample)
    u = sampled.u_nodes
    kernel = np.exp(1j * _direction(h.side) * np.multiply.outer(grid.mu, u))
    coeffs = kernel @ (_trapezoid_weights(u)[:, None] * sampled.coeffs)
    H = SpectralFunction(side=h.side, grid=grid, coeffs=coeffs)
    check_resolution(H)
    logger.debug(f"fourier_A on {u.size} u-nodes and {grid.n_mu} mu-nodes")
    return H


def inverse_fourier_A(H: SpectralFunction, scheme: Optional[QuadratureScheme] = None) -> PlaneFunction:
    """P_j(u) = (1/2pi) int H_j(mu) e^{-+ i mu u} dmu, returned as a grid function."""
    scheme = scheme or QuadratureScheme()
    u = u_grid(scheme)
    kernel = np.exp(-1j * _direction(H.side) * np.multiply.outer(u, H.mu))
    coeffs = kernel @ (H.grid.mu_weights[:, None] * H.coeffs) / TWO_PI
    return grid_function(H.side, u, coeffs, decay_p=8)


def extend_homogeneous(mu: complex, c: KSeries, side: Side) -> PlaneFunction:
    """The element of V(mu) whose restriction to the unit circle is c."""
    return homogeneous_atom(mu, c, side)


def restrict_to_circle(h: PlaneFunction, jmax: int, oversample: int = 2) -> KSeries:
    """K-coefficients of h on the unit circle, in the model angle."""
    n_theta = oversample * (2 * jmax + 2)
    theta = TWO_PI * np.arange(n_theta) / n_theta
    x, y = model_direction(h.side, theta)
    return KSeries.from_samples(h.evaluate(x, y), jmax)


def spectral_slice(H: SpectralFunction, index: int) -> PlaneFunction:
    """The homogeneous function H(mu_index) in V(mu_index)."""
    return extend_homogeneous(complex(H.mu[index]), H.at(index), H.side)


def parity_split(H: SpectralFunction) -> Tuple[SpectralFunction, SpectralFunction]:
    """(even, odd) parts; even K-types carry the even principal series."""
    even = (H.js % 2 == 0)[None, :]
    return H.with_coeffs(np.where(even, H.coeffs, 0)), H.with_coeffs(np.where(even, 0, H.coeffs))


def k_rotate(H: SpectralFunction, alpha: float) -> SpectralFunction:
    """Spectral image of left translation by k_alpha: H_j -> e^{-ij alpha} H_j."""
    return H.with_coeffs(H.coeffs * np.exp(-1j * alpha * H.js)[None, :])


def act_L_spectral(H: SpectralFunction, ell: GroupElement) -> SpectralFunction:
    """Spectral image of the right L-action: sign^j e^{i mu s} for l = diag(sign e^s, sign e^-s)."""
    sign, s = levi_coordinates(ell)
    parity = np.where(H.js % 2 == 0, 1.0, sign)
    return H.with_coeffs(H.coeffs * np.exp(1j * s * H.mu)[:, None] * parity[None, :])


def spectral_norm(H: SpectralFunction) -> float:
    """L2 norm of spectral data; equals the plane L2 norm of its inverse transform."""
    return H.norm()


def gaussian_spectrum(side: Side, coeffs: Union[KSeries, Dict[int, complex]], u_center: float,
                      width: float, grid: SpectralGrid) -> SpectralFunction:
    """
    Closed-form transform of the log-polar Gaussian built by gaussian_bump:
    a_j width sqrt(2pi) e^{+- i mu u0} e^{-width^2 mu^2 / 2}.
    """
    items = coeffs.coeffs if isinstance(coeffs, KSeries) else None
    vector = np.zeros(2 * grid.jmax + 1, dtype=complex)
    if items is not None:
        vector[:] = items
    else:
        for j, c in coeffs.items():
            if abs(j) > grid.jmax:
                raise ValidationError("K-type outside the grid", {"j": j, "jmax": grid.jmax})
            vector[j + grid.jmax] = c
    mu = grid.mu
    radial = width * math.sqrt(TWO_PI) * np.exp(1j * _direction(side) * mu * u_center - 0.5 * (width * mu) ** 2)
    return SpectralFunction(side=side, grid=grid, coeffs=np.outer(radial, vector))


def separable_spectrum(side: Side, grid: SpectralGrid, radial: Callable[[np.ndarray], np.ndarray],
                       coeffs: Union[KSeries, Dict[int, complex]]) -> SpectralFunction:
    """H_j(mu) = radial(mu) c_j."""
    vector = np.zeros(2 * grid.jmax + 1, dtype=complex)
    if isinstance(coeffs, KSeries):
        vector[:] = coeffs.coeffs
    else:
        for j, c in coeffs.items():
            vector[j + grid.jmax] = c
    return SpectralFunction(side=side, grid=grid,
                            coeffs=np.outer(np.asarray(radial(grid.mu), dtype=complex), vector))


def export_spectral_csv(H: SpectralFunction, path: str) -> None:
    """Rows mu, j, re, im for every grid node and K-type."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["mu", "j", "re", "im"])
        for i, mu in enumerate(H.mu):
            for k, j in enumerate(H.js):
                value = H.coeffs[i, k]
                writer.writerow([repr(float(mu)), int(j), repr(float(value.real)), repr(float(value.imag))])
    logger.info(f"exported spectral function to {path}")


def import_spectral_csv(path: str, side: Side) -> SpectralFunction:
    """Read a file written by export_spectral_csv; the grid is inferred from the rows."""
    values: Dict[Tuple[float, int], complex] = {}
    with open(path, newline="") as handle:
        for row in csv.DictReader(handle):
            values[(float(row["mu"]), int(row["j"]))] = complex(float(row["re"]), float(row["im"]))
    if not values:
        raise ValidationError("empty spectral file", {"path": path})
    mus = sorted({mu for mu, _ in values})
    jmax = max(abs(j) for _, j in values)
    grid = SpectralGrid(jmax=jmax, dmu=mus[1] - mus[0], mu_max=mus[-1])
    coeffs = np.zeros((grid.n_mu, 2 * jmax + 1), dtype=complex)
    for (mu, j), value in values.items():
        coeffs[int(round((mu + grid.mu_max) / grid.dmu)), j + jmax] = value
    return SpectralFunction(side=side, grid=grid, coeffs=coeffs)
