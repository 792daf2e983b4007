"""Closed-form singly-constrained lower bounds on EOF, tangle and concurrence.

Each bound is a scalar function of one operational constraint value on
[0, 3/2]: either the transpose negativity ``n_T`` or the flip-map constraint
``n_phi``.  All functions accept floats or numpy arrays.
"""

from __future__ import annotations

import enum

import numpy as np

from .errors import DomainError
from .measures import MeasurePoint

LOG2_3 = np.log2(3.0)
_EDGE = 1e-12  # clamp for radicands that vanish at the domain edges


class Measure(enum.Enum):
    EOF = "eof"
    TANGLE = "tangle"
    CONCURRENCE = "concurrence"


class Constraint(enum.Enum):
    NT = "nt"
    NPHI = "nphi"


def _check_domain(x) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if np.any(arr < -_EDGE) or np.any(arr > 1.5 + _EDGE):
        raise DomainError(f"constraint value outside [0, 3/2]: {x}")
    return np.clip(arr, 0.0, 1.5)


def _scalarize(x, out):
    return float(out) if np.isscalar(x) or np.asarray(x).ndim == 0 else out


def binary_entropy(p):
    """H2(p) = -p log2 p - (1-p) log2 (1-p), with 0 log 0 = 0."""
    arr = np.clip(np.asarray(p, dtype=float), 0.0, 1.0)
    inner = np.where((arr > 0) & (arr < 1), arr, 0.5)
    out = np.where(
        (arr > 0) & (arr < 1),
        -inner * np.log2(inner) - (1 - inner) * np.log2(1 - inner),
        0.0,
    )
    return _scalarize(p, out)


def eof_bound_phi(n_phi):
    """EOF lower bound H2((1 + sqrt(1 - 4 n_phi^2 / 9)) / 2)."""
    x = _check_domain(n_phi)
    s = np.sqrt(np.clip(1.0 - 4.0 * x * x / 9.0, 0.0, None))
    return _scalarize(n_phi, binary_entropy((1.0 + s) / 2.0))


def gamma_of_nt(n_t):
    """gamma = (sqrt(2 n_T + 1) + sqrt(3(3 - 2 n_T)))^2 / 16, in [1/4, 1]."""
    x = _check_domain(n_t)
    out = (np.sqrt(2 * x + 1) + np.sqrt(np.clip(3 * (3 - 2 * x), 0.0, None))) ** 2 / 16.0
    return _scalarize(n_t, out)


def htilde_nt(n_t):
    """Constrained EOF minimum H2(gamma) + (1 - gamma) log2 3 (not convexified)."""
    g = gamma_of_nt(n_t)
    out = binary_entropy(g) + (1.0 - np.asarray(g)) * LOG2_3
    return _scalarize(n_t, out)


def eof_bound_nt(n_t):
    """EOF lower bound from n_T: H2(gamma)+(1-gamma)log2 3 on [0,1], then the
    chord (n_T - 3/2) log2 3 + 2 on [1, 3/2]."""
    x = _check_domain(n_t)
    low = htilde_nt(np.minimum(x, 1.0))
    high = (x - 1.5) * LOG2_3 + 2.0
    return _scalarize(n_t, np.where(x <= 1.0, low, high))


def tangle_bound_phi(n_phi):
    """Tangle lower bound (4/9) n_phi^2."""
    x = _check_domain(n_phi)
    return _scalarize(n_phi, 4.0 * x * x / 9.0)


def tangle_tilde_nt(n_t):
    """Constrained tangle minimum (9 + 4 n_T^2 + sqrt(3(3+4n_T-4n_T^2))(2n_T-3))/12."""
    x = _check_domain(n_t)
    rad = np.clip(3.0 * (3.0 + 4.0 * x - 4.0 * x * x), 0.0, None)
    out = (9.0 + 4.0 * x * x + np.sqrt(rad) * (2.0 * x - 3.0)) / 12.0
    return _scalarize(n_t, np.clip(out, 0.0, None))


def tangle_bound_nt(n_t):
    """Tangle lower bound from n_T: the constrained minimum on [0,1], then the
    chord (4/3) n_T - 1/2 on [1, 3/2]."""
    x = _check_domain(n_t)
    out = np.where(x <= 1.0, tangle_tilde_nt(np.minimum(x, 1.0)), 4.0 * x / 3.0 - 0.5)
    return _scalarize(n_t, out)


def conc_bound_phi(n_phi):
    """Concurrence lower bound (2/3) n_phi = sqrt of the tangle bound."""
    x = _check_domain(n_phi)
    return _scalarize(n_phi, 2.0 * x / 3.0)


def conc_bound_nt(n_t):
    """Concurrence lower bound sqrt(2/3) n_T (chord of the concave minimum)."""
    x = _check_domain(n_t)
    return _scalarize(n_t, np.sqrt(2.0 / 3.0) * x)


_PHI_BOUNDS = {
    Measure.EOF: eof_bound_phi,
    Measure.TANGLE: tangle_bound_phi,
    Measure.CONCURRENCE: conc_bound_phi,
}
_NT_BOUNDS = {
    Measure.EOF: eof_bound_nt,
    Measure.TANGLE: tangle_bound_nt,
    Measure.CONCURRENCE: conc_bound_nt,
}


def bound_value(measure: Measure, constraint: Constraint, x):
    """Dispatch to the bound for ``measure`` under ``constraint``."""
    table = _PHI_BOUNDS if constraint is Constraint.NPHI else _NT_BOUNDS
    return table[measure](x)


def better_constraint(measure: Measure, point: MeasurePoint) -> Constraint:
    """Which single constraint gives the larger bound at a plane point.

    Returns NPHI only when the flip-map bound strictly exceeds the n_T bound;
    ties within 1e-12 report NT.  The region boundary itself is resolution
    data, emitted separately by the comparison grid.
    """
    phi_b = _PHI_BOUNDS[measure](point.n_hat_phi)
    nt_b = _NT_BOUNDS[measure](point.n_t)
    return Constraint.NPHI if phi_b - nt_b > 1e-12 else Constraint.NT


def comparison_grid(measure: Measure, resolution: int):
    """Label every node of a resolution^2 grid over [0,3/2]^2 with the better
    constraint; returns (xs, ys, labels) with labels[i, j] in {"NT", "NPHI"}."""
    if resolution < 2:
        raise DomainError("resolution must be >= 2")
    xs = np.linspace(0.0, 1.5, resolution)
    ys = np.linspace(0.0, 1.5, resolution)
    phi_b = _PHI_BOUNDS[measure](xs)[:, None]
    nt_b = _NT_BOUNDS[measure](ys)[None, :]
    labels = np.where(phi_b - nt_b > 1e-12, "NPHI", "NT")
    return xs, ys, labels
