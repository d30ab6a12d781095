"""
Data Models Module

This module defines Pydantic models for the structured data passed between
the library modules: group elements and their factorizations, quadrature
schemes and spectral grids, K-series and spectral functions, bump data for
the unit construction, verification reports and the suite configuration.
"""

import math
from typing import Any, Dict, List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from exceptions import ValidationError

Side = Literal["upper", "lower"]
Parity = Literal["even", "odd"]

DET_TOLERANCE = 1e-12
DET_RENORMALIZE = 1e-8


class GroupElement(BaseModel):
    """
    Element of SL(2,R) stored as a row-major 2x2 matrix.

    Attributes:
        entries (Tuple[float, float, float, float]): (a, b, c, d) of [[a, b], [c, d]]

    Inputs with |det - 1| < 1e-8 are rescaled by 1/sqrt(det); anything
    further from the group is rejected.
    """
    model_config = ConfigDict(frozen=True)

    entries: Tuple[float, float, float, float]

    @model_validator(mode="before")
    @classmethod
    def _normalize_determinant(cls, data: Any) -> Any:
        if isinstance(data, dict):
            entries = data.get("entries")
        else:
            entries = data
            data = {"entries": entries}
        values = np.asarray(entries, dtype=float).reshape(-1)
        if values.size != 4 or not np.all(np.isfinite(values)):
            raise ValidationError("a group element needs four finite entries",
                                  {"entries": list(np.atleast_1d(values))})
        det = values[0] * values[3] - values[1] * values[2]
        if abs(det - 1.0) > DET_TOLERANCE:
            if abs(det - 1.0) >= DET_RENORMALIZE:
                raise ValidationError(f"determinant {det!r} is not 1",
                                      {"determinant": float(det)})
            values = values / math.sqrt(det)
        data["entries"] = tuple(float(v) for v in values)
        return data

    @classmethod
    def from_matrix(cls, matrix: np.ndarray) -> "GroupElement":
        return cls(entries=tuple(np.asarray(matrix, dtype=float).reshape(4)))

    @classmethod
    def identity(cls) -> "GroupElement":
        return cls(entries=(1.0, 0.0, 0.0, 1.0))

    @classmethod
    def rotation(cls, theta: float) -> "GroupElement":
        c, s = math.cos(theta), math.sin(theta)
        return cls(entries=(c, -s, s, c))

    @classmethod
    def diagonal(cls, alpha: float) -> "GroupElement":
        return cls(entries=(alpha, 0.0, 0.0, 1.0 / alpha))

    @classmethod
    def upper_unipotent(cls, x: float) -> "GroupElement":
        return cls(entries=(1.0, x, 0.0, 1.0))

    @classmethod
    def lower_unipotent(cls, y: float) -> "GroupElement":
        return cls(entries=(1.0, 0.0, y, 1.0))

    @property
    def matrix(self) -> np.ndarray:
        return np.array(self.entries, dtype=float).reshape(2, 2)

    def inverse(self) -> "GroupElement":
        a, b, c, d = self.entries
        return GroupElement(entries=(d, -b, -c, a))

    def __matmul__(self, other: "GroupElement") -> "GroupElement":
        return GroupElement.from_matrix(self.matrix @ other.matrix)


class IwasawaFactors(BaseModel):
    """
    Factorization g = k a n with n unipotent of the declared side.

    Attributes:
        k, a, n (GroupElement): rotation, positive diagonal, unipotent factor
        side (Side): "upper" for N+, "lower" for N-
        theta, t, x (float): coordinates k = k_theta, a = diag(e^t, e^-t), n = n_x
    """
    model_config = ConfigDict(frozen=True)

    k: GroupElement
    a: GroupElement
    n: GroupElement
    side: Side
    theta: float
    t: float
    x: float

    @property
    def product(self) -> np.ndarray:
        return self.k.matrix @ self.a.matrix @ self.n.matrix


class CartanFactors(BaseModel):
    """Factorization g = k1 a k2 with a = diag(e^t, e^-t), t >= 0."""
    model_config = ConfigDict(frozen=True)

    k1: GroupElement
    a: GroupElement
    k2: GroupElement
    phi1: float
    t: float
    phi2: float

    @property
    def product(self) -> np.ndarray:
        return self.k1.matrix @ self.a.matrix @ self.k2.matrix


class QuadratureScheme(BaseModel):
    """
    Quadrature parameters shared by every numerical operation.

    Attributes:
        k_nodes (int): Gauss-Legendre nodes on the K-angle
        t_nodes, x_nodes (int): Gauss-Legendre nodes on A and N boxes
        levi_nodes (int): Gauss-Legendre nodes on Levi boxes
        radius (float): truncation radius of noncompact log coordinates
        line_step (float): trapezoid step in tau = asinh(s) for line integrals
        line_padding (float): tau-margin added beyond the reach of the integrand
        log_step (float): spacing of the u = log r grid of plane functions
        theta_nodes (int): angular nodes for plane integrals
        k_log_step, k_log_radius (float): log-tangent K-rule for Xi
        matrix_log_step (float): log-tangent K-rule for matrix coefficients
        tolerance (float): refinement tolerance for underresolution flags
    """
    model_config = ConfigDict(frozen=True, extra="forbid")

    k_nodes: int = Field(default=64, gt=0)
    t_nodes: int = Field(default=64, gt=0)
    x_nodes: int = Field(default=64, gt=0)
    levi_nodes: int = Field(default=64, gt=0)
    radius: float = Field(default=12.0, gt=0)
    line_step: float = Field(default=1.0 / 32.0, gt=0)
    line_padding: float = Field(default=0.5, ge=0)
    log_step: float = Field(default=0.05, gt=0)
    theta_nodes: int = Field(default=128, gt=0)
    k_log_step: float = Field(default=0.2, gt=0)
    k_log_radius: float = Field(default=36.0, gt=0)
    matrix_log_step: float = Field(default=0.02, gt=0)
    tolerance: float = Field(default=1e-8, gt=0)

    def coarse(self) -> "QuadratureScheme":
        """Half-resolution copy used by --coarse runs and spot checks."""
        return self.model_copy(update={
            "k_nodes": max(8, self.k_nodes // 2),
            "t_nodes": max(8, self.t_nodes // 2),
            "x_nodes": max(8, self.x_nodes // 2),
            "levi_nodes": max(8, self.levi_nodes // 2),
            "line_step": self.line_step * 2,
            "log_step": self.log_step * 2,
            "theta_nodes": max(16, self.theta_nodes // 2),
            "matrix_log_step": self.matrix_log_step * 2,
        })


class SpectralGrid(BaseModel):
    """
    Uniform mu-grid symmetric about 0 together with the K-type cutoff.

    Attributes:
        jmax (int): K-types |j| <= jmax are kept
        dmu (float): spacing of the mu-grid
        mu_max (float): cutoff M, nodes run over [-M, M]
        oversample (int): angular nodes are oversample * (2 jmax + 2)
    """
    model_config = ConfigDict(frozen=True, extra="forbid")

    jmax: int = Field(default=16, ge=0)
    dmu: float = Field(default=0.05, gt=0)
    mu_max: float = Field(default=20.0, gt=0)
    oversample: int = Field(default=2, ge=1)

    @model_validator(mode="after")
    def _check_grid(self) -> "SpectralGrid":
        steps = self.mu_max / self.dmu
        if abs(steps - round(steps)) > 1e-9 * max(1.0, steps):
            raise ValidationError("mu_max must be a multiple of dmu",
                                  {"mu_max": self.mu_max, "dmu": self.dmu})
        return self

    @property
    def n_mu(self) -> int:
        return 2 * int(round(self.mu_max / self.dmu)) + 1

    @property
    def mu(self) -> np.ndarray:
        half = int(round(self.mu_max / self.dmu))
        return self.dmu * np.arange(-half, half + 1, dtype=float)

    @property
    def mu_weights(self) -> np.ndarray:
        weights = np.full(self.n_mu, self.dmu)
        weights[0] = weights[-1] = 0.5 * self.dmu
        return weights

    @property
    def js(self) -> np.ndarray:
        return np.arange(-self.jmax, self.jmax + 1)

    @property
    def n_theta(self) -> int:
        return self.oversample * (2 * self.jmax + 2)

    @property
    def zero_index(self) -> int:
        return self.n_mu // 2


class KSeries(BaseModel):
    """
    Fourier coefficients of a function on K = SO(2).

    Attributes:
        jmax (int): truncation order
        coeffs (np.ndarray): complex coefficients c_j for j = -jmax..jmax
    """
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    jmax: int = Field(ge=0)
    coeffs: np.ndarray

    @field_validator("coeffs", mode="before")
    @classmethod
    def _as_complex(cls, value: Any) -> np.ndarray:
        return np.asarray(value, dtype=complex).reshape(-1)

    @model_validator(mode="after")
    def _check_length(self) -> "KSeries":
        if self.coeffs.size != 2 * self.jmax + 1:
            raise ValidationError("coefficient vector does not match jmax",
                                  {"jmax": self.jmax, "size": int(self.coeffs.size)})
        return self

    @classmethod
    def basis(cls, jmax: int, j: int) -> "KSeries":
        coeffs = np.zeros(2 * jmax + 1, dtype=complex)
        coeffs[j + jmax] = 1.0
        return cls(jmax=jmax, coeffs=coeffs)

    @classmethod
    def from_samples(cls, samples: np.ndarray, jmax: int) -> "KSeries":
        """Coefficients from values at equispaced angles 2*pi*k/len(samples)."""
        samples = np.asarray(samples, dtype=complex)
        if samples.size < 2 * jmax + 1:
            raise ValidationError("too few samples for the requested jmax",
                                  {"samples": int(samples.size), "jmax": jmax})
        spectrum = np.fft.fft(samples) / samples.size
        js = np.arange(-jmax, jmax + 1)
        return cls(jmax=jmax, coeffs=spectrum[js % samples.size])

    @property
    def js(self) -> np.ndarray:
        return np.arange(-self.jmax, self.jmax + 1)

    def evaluate(self, theta: np.ndarray) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        phases = np.exp(1j * np.multiply.outer(theta, self.js))
        return phases @ self.coeffs

    def even(self) -> "KSeries":
        return KSeries(jmax=self.jmax, coeffs=np.where(self.js % 2 == 0, self.coeffs, 0))

    def odd(self) -> "KSeries":
        return KSeries(jmax=self.jmax, coeffs=np.where(self.js % 2 != 0, self.coeffs, 0))

    def inner(self, other: "KSeries") -> complex:
        """L2(K) inner product normalized so that e^{ij theta} are orthonormal."""
        return complex(np.vdot(self.coeffs, other.coeffs))


class SpectralFunction(BaseModel):
    """
    A function of mu with values in K-series, sampled on a SpectralGrid.

    Attributes:
        side (Side): plane model whose Fourier transform produced the data
        grid (SpectralGrid): mu-grid and K-type cutoff
        coeffs (np.ndarray): array of shape (n_mu, 2 jmax + 1)
    """
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    side: Side
    grid: SpectralGrid
    coeffs: np.ndarray

    @field_validator("coeffs", mode="before")
    @classmethod
    def _as_complex(cls, value: Any) -> np.ndarray:
        return np.asarray(value, dtype=complex)

    @model_validator(mode="after")
    def _check_shape(self) -> "SpectralFunction":
        expected = (self.grid.n_mu, 2 * self.grid.jmax + 1)
        if self.coeffs.shape != expected:
            raise ValidationError("spectral coefficients do not match the grid",
                                  {"expected": expected, "shape": self.coeffs.shape})
        return self

    @classmethod
    def zeros(cls, side: Side, grid: SpectralGrid) -> "SpectralFunction":
        return cls(side=side, grid=grid,
                   coeffs=np.zeros((grid.n_mu, 2 * grid.jmax + 1), dtype=complex))

    @property
    def mu(self) -> np.ndarray:
        return self.grid.mu

    @property
    def js(self) -> np.ndarray:
        return self.grid.js

    def with_coeffs(self, coeffs: np.ndarray, side: Optional[Side] = None) -> "SpectralFunction":
        return SpectralFunction(side=side or self.side, grid=self.grid, coeffs=coeffs)

    def at(self, index: int) -> KSeries:
        return KSeries(jmax=self.grid.jmax, coeffs=self.coeffs[index])

    def flipped(self) -> "SpectralFunction":
        """Values at -mu."""
        return self.with_coeffs(self.coeffs[::-1])

    def norm(self) -> float:
        weights = self.grid.mu_weights[:, None]
        return float(np.sqrt(np.sum(weights * np.abs(self.coeffs) ** 2)))

    def inner(self, other: "SpectralFunction") -> complex:
        weights = self.grid.mu_weights[:, None]
        return complex(np.sum(weights * np.conj(self.coeffs) * other.coeffs))

    def __add__(self, other: "SpectralFunction") -> "SpectralFunction":
        return self.with_coeffs(self.coeffs + other.coeffs)

    def __sub__(self, other: "SpectralFunction") -> "SpectralFunction":
        return self.with_coeffs(self.coeffs - other.coeffs)

    def scaled(self, factor: complex) -> "SpectralFunction":
        return self.with_coeffs(factor * self.coeffs)


class BumpSpec(BaseModel):
    """
    Cutoff data for the unit construction: u on G, vbar on N-, v on N+.

    Attributes:
        u_center (GroupElement): center of the bump u on G
        u_width (float): Frobenius-distance radius of the support of u
        v_center, v_width (float): center and half-width of v on N+
        vbar_center, vbar_width (float): center and half-width of vbar on N-
    """
    model_config = ConfigDict(frozen=True)

    u_center: GroupElement = Field(default_factory=GroupElement.identity)
    u_width: float = Field(default=0.5, gt=0)
    v_center: float = 0.0
    v_width: float = Field(default=1.0, gt=0)
    vbar_center: float = 0.0
    vbar_width: float = Field(default=1.0, gt=0)


class SeminormEstimate(BaseModel):
    """
    Sampled Harish-Chandra seminorm.

    Attributes:
        value (float): supremum over the sample grid
        p (int): logarithmic weight exponent
        divergent (bool): boundary values grow, so the supremum is not trustworthy
        boundary_ratio (float): largest boundary value over interior supremum
    """
    value: float
    p: int
    divergent: bool = False
    boundary_ratio: float = 0.0


class CheckResult(BaseModel):
    """
    One verification check.

    Attributes:
        name (str): check name, unique within a suite
        anchor (str): short quotation locating the identity being verified
        residual_sup (float): largest residual over the samples
        residual_l2 (float): root-mean-square residual
        tolerance (float): scaled pass threshold
        samples (int): number of sample points
        grid_params (Dict): effective numerical parameters
        passed (bool): residual_sup <= tolerance
    """
    name: str
    anchor: str
    residual_sup: float
    residual_l2: float
    tolerance: float
    samples: int
    grid_params: Dict[str, Any] = Field(default_factory=dict)
    passed: bool

    def to_report_dict(self) -> Dict[str, Any]:
        return {
            "test-name": self.name,
            "anchor": self.anchor,
            "grid-params": self.grid_params,
            "residual-sup": self.residual_sup,
            "residual-l2": self.residual_l2,
            "tolerance": self.tolerance,
            "samples": self.samples,
            "pass": self.passed,
        }


class WaveConditionReport(BaseModel):
    """Outcome of the vanishing-order hypothesis check for a wave packet."""
    order_first: int
    order_second: int
    branch: str
    seminorm: SeminormEstimate
    passed: bool


class SuiteConfig(BaseModel):
    """
    Effective configuration of one verification run.

    Attributes:
        suite (str): suite name
        quadrature (QuadratureScheme): quadrature overrides
        grid (SpectralGrid): spectral grid overrides
        tolerance_scale (float): multiplies every check tolerance
        json_path (Optional[str]): where the JSON report goes (stdout if None)
        csv_path (Optional[str]): optional CSV summary path
        seed (int): random seed for sampled points
        coarse (bool): run with the half-resolution scheme
    """
    model_config = ConfigDict(extra="forbid")

    suite: Literal["group-core", "frobenius", "intertwiner", "wave-packet",
                   "second-adjoint", "all"] = "all"
    quadrature: QuadratureScheme = Field(default_factory=QuadratureScheme)
    grid: SpectralGrid = Field(default_factory=SpectralGrid)
    tolerance_scale: float = Field(default=1.0, gt=0)
    json_path: Optional[str] = None
    csv_path: Optional[str] = None
    seed: int = 42
    coarse: bool = False

    def effective_scheme(self) -> QuadratureScheme:
        return self.quadrature.coarse() if self.coarse else self.quadrature


class SuiteReport(BaseModel):
    """All checks of one run plus the configuration that produced them."""
    suite: str
    seed: int
    config: Dict[str, Any]
    checks: List[CheckResult]

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def to_report_dict(self) -> Dict[str, Any]:
        return {
            "suite": self.suite,
            "seed": self.seed,
            "config": self.config,
            "pass": self.passed,
            "checks": [c.to_report_dict() for c in sorted(self.checks, key=lambda c: c.name)],
        }
