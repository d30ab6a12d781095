"""Hypothesis strategies for group elements and K-type coefficients."""

import math

import numpy as np
from hypothesis import strategies as st

from group_core import diagonals, rotations
from models import GroupElement

angles = st.floats(min_value=0.0, max_value=2 * math.pi, allow_nan=False)
cartan_ts = st.floats(min_value=0.0, max_value=2.0, allow_nan=False)


@st.composite
def group_elements(draw, t_max: float = 2.0) -> GroupElement:
    """k_phi1 a_t k_phi2 with t in [0, t_max]."""
    phi1, phi2 = draw(angles), draw(angles)
    t = draw(st.floats(min_value=0.0, max_value=t_max, allow_nan=False))
    matrix = rotations(np.array(phi1)) @ diagonals(np.array(t)) @ rotations(np.array(phi2))
    return GroupElement.from_matrix(matrix)


@st.composite
def k_series_coeffs(draw, jmax: int = 4) -> dict:
    """Sparse K-type coefficients with at least one nonzero entry."""
    parts = st.floats(min_value=-1.0, max_value=1.0, allow_nan=False)
    js = draw(st.lists(st.integers(-jmax, jmax), min_size=1, max_size=3, unique=True))
    coeffs = {j: complex(draw(parts), draw(parts)) for j in js}
    if all(abs(c) < 1e-3 for c in coeffs.values()):
        coeffs[js[0]] = 1.0
    return coeffs
