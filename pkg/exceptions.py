"""
Custom Exceptions Module

This module defines the exceptions and warning categories raised by the
harmonic-analysis library. Errors stop a computation; warnings flag a
numerical result that was produced but should not be trusted blindly
(truncated domains, under-resolved quadrature, coarse spectral grids).
"""

from typing import Any, Dict, Optional


class HarmonicAnalysisError(Exception):
    """
    Base exception class for all library errors.

    Attributes:
        message: Error message describing what went wrong
        details: Extra context (offending values, tolerances) for debugging
    """
    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}


class ValidationError(HarmonicAnalysisError):
    """
    Exception raised when an input does not satisfy an operation's precondition.
    Examples are a matrix whose determinant is not 1, the origin passed to a
    plane-model function, or a non-diagonal element passed as a Levi element.
    """
    pass


class PoleError(HarmonicAnalysisError):
    """
    Exception raised when a meromorphic function is evaluated at a pole.
    Covers the Gamma function at nonpositive integers and the c-function
    at even K-types and μ = 0.
    """
    pass


class SupportOverflowError(HarmonicAnalysisError):
    """
    Exception raised when a compactly supported bump does not fit inside
    the quadrature box it is integrated over.
    """
    pass


class HypothesisViolationError(HarmonicAnalysisError):
    """
    Exception raised when spectral data does not vanish at μ = 0 to the order
    required for its wave packet to be a Harish-Chandra function.
    """
    pass


class ConfigError(HarmonicAnalysisError):
    """
    Exception raised for unknown or malformed configuration keys.
    The command line maps it to exit code 2.
    """
    pass


class NumericalWarning(UserWarning):
    """Base category for numerical quality flags."""
    pass


class TruncationWarning(NumericalWarning):
    """Integrand is still significant on the boundary of the truncated domain."""
    pass


class QuadratureUnderresolvedWarning(NumericalWarning):
    """Refining the quadrature moved the value by more than the tolerance."""
    pass


class GridResolutionWarning(NumericalWarning):
    """Spectral coefficients have not decayed at |j| = Jmax or |μ| = M."""
    pass


class DivergenceWarning(NumericalWarning):
    """Integrand tail decays too slowly for the integral to converge."""
    pass
