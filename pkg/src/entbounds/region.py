"""Geometry of the pure-state region in the constraint plane, and the
closed-form solutions of the three pure-state constraint equations.

A 4xN pure state with sorted Schmidt coefficients mu satisfies

    ((sqrt(mu1)+sqrt(mu2)+sqrt(mu3)+sqrt(mu4))^2 - 1)/2 = n_T
    3 sqrt((mu1+mu4)(mu2+mu3))                          = n_phi
    mu1+mu2+mu3+mu4                                     = 1

Given (n_T, n_phi, mu4) these can be solved in closed form; there are two
distinct solution branches (the other two follow by exchanging mu2 and mu3,
which leaves the constraints invariant).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError
from .measures import MeasurePoint

RESIDUAL_TOL = 1e-8
ORDER_TOL = 1e-9


# ---------------------------------------------------------------------------
# boundaries
# ---------------------------------------------------------------------------

def lower_boundary(n_phi):
    """Smallest attainable n_T at fixed n_phi: the line n_T = n_phi / 3."""
    x = _domain(n_phi)
    out = x / 3.0
    return float(out) if np.isscalar(n_phi) or np.asarray(n_phi).ndim == 0 else out


def upper_boundary(n_phi):
    """Largest attainable n_T at fixed n_phi.

    Attained by Schmidt vectors with three equal trailing coefficients,
    (alpha - beta/2, beta/2, beta/2, beta/2).
    """
    x = _domain(n_phi)
    s = np.sqrt(np.clip(1.0 - 4.0 * x * x / 9.0, 0.0, None))
    inner = np.clip(4.0 * x * x / 3.0 + 2.0 * s - 2.0, 0.0, None)
    out = 0.75 * (1.0 - s + np.sqrt(inner))
    return float(out) if np.isscalar(n_phi) or np.asarray(n_phi).ndim == 0 else out


def _domain(x) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if np.any(arr < -1e-12) or np.any(arr > 1.5 + 1e-12):
        raise DomainError(f"n_phi outside [0, 3/2]: {x}")
    return np.clip(arr, 0.0, 1.5)


@dataclass(frozen=True)
class RegionBoundary:
    """Lower and upper boundary curves n_T(n_phi) of a plane region."""

    lower: Callable
    upper: Callable
    domain: tuple = (0.0, 1.5)

    def upper_inverse(self, n_t: float) -> float:
        """Leftmost n_phi whose upper boundary reaches n_t (bisection).

        Requires the upper boundary to be nondecreasing, which holds for the
        pure-state region.
        """
        lo, hi = self.domain
        if n_t <= self.upper(lo):
            return lo
        if n_t >= self.upper(hi):
            return hi
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if self.upper(mid) < n_t:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)


def pure_state_region() -> RegionBoundary:
    """The attainable region of 4xN pure states in the constraint plane."""
    return RegionBoundary(lower=lower_boundary, upper=upper_boundary)


def in_pure_region(point: MeasurePoint, tol: float = 1e-9) -> bool:
    """True iff lower(n_phi) - tol <= n_t <= upper(n_phi) + tol."""
    return bool(
        lower_boundary(point.n_hat_phi) - tol
        <= point.n_t
        <= upper_boundary(point.n_hat_phi) + tol
    )


def boundary_table(resolution: int):
    """Sampled boundary curves: (n_phi nodes, lower values, upper values)."""
    if resolution < 2:
        raise DomainError("resolution must be >= 2")
    xs = np.linspace(0.0, 1.5, resolution)
    return xs, lower_boundary(xs), upper_boundary(xs)


# ---------------------------------------------------------------------------
# constraint solutions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BranchSolution:
    """One closed-form solution candidate of the constraint equations."""

    mu: np.ndarray
    branch: int            # 1 (upper sign) or 2 (lower sign)
    valid: bool
    residuals: tuple       # (n_T, n_phi, normalization) absolute residuals
    reason: str | None = None  # set when invalid


def _radicand_g0(n_t, mu4):
    """mu1-independent part of the closed-form radicand (mu2 - mu3)^2."""
    root = np.sqrt(np.clip(mu4 * (2.0 * n_t + 1.0), 0.0, None))
    return (
        1.0
        + 8.0 * (n_t + mu4) * root
        - 4.0 * n_t * (n_t + 4.0 * mu4)
        - 3.0 * mu4 * (mu4 + 2.0)
    )


def _radicand_g1(mu1, n_t, mu4):
    """mu1-dependent part subtracted from g0 to give (mu2 - mu3)^2.

    Algebraically identical to g0 - R^2 (2 beta - R^2) with
    R = sqrt(2 n_T + 1) - sqrt(mu1) - sqrt(mu4) and beta = 1 - mu1 - mu4.
    """
    sig = np.sqrt(np.clip(2.0 * n_t + 1.0, 0.0, None))
    r4 = np.sqrt(np.clip(mu4, 0.0, None))
    cross = np.sqrt(np.clip(mu4 * (2.0 * n_t + 1.0), 0.0, None))
    m1 = np.clip(mu1, 0.0, None)
    return (
        3.0 * m1 ** 2
        - 8.0 * m1 ** 1.5 * (sig - r4)
        + 2.0 * m1 * (3.0 + 8.0 * n_t - 8.0 * cross + 5.0 * mu4)
        + 8.0 * np.sqrt(m1) * (r4 * (1.0 - 2.0 * cross + mu4) - n_t * (sig - 3.0 * r4))
    )


def branch_mu_margin(n_t, n_phi, mu4, sign):
    """Vectorized branch evaluation: candidate mu (..., 4) plus a feasibility
    margin that is >= 0 exactly when the candidate is a valid sorted Schmidt
    vector solving all three constraints.

    ``sign`` is +1 for branch 1 and -1 for branch 2.
    """
    n_t, n_phi, mu4 = np.broadcast_arrays(
        *(np.asarray(v, dtype=float) for v in (n_t, n_phi, mu4))
    )
    s = np.sqrt(np.clip(1.0 - 4.0 * n_phi ** 2 / 9.0, 0.0, None))
    alpha = 0.5 * (1.0 + sign * s)
    beta = 1.0 - alpha
    mu1 = alpha - mu4
    mu1c = np.clip(mu1, 0.0, None)
    sig = np.sqrt(2.0 * n_t + 1.0)
    r = sig - np.sqrt(mu1c) - np.sqrt(np.clip(mu4, 0.0, None))
    quad = 2.0 * beta - r * r
    # product form of g0 - g1: algebraically identical, free of the
    # cancellation the expanded grouping suffers near feasibility edges
    rad = r * r * quad
    d = np.sqrt(np.clip(rad, 0.0, None))
    mu2 = beta / 2.0 + d / 2.0
    mu3 = beta / 2.0 - d / 2.0
    mu = np.stack([mu1, mu2, mu3, mu4], axis=-1)
    margin = np.minimum.reduce([mu1 - mu2, mu3 - mu4, r, quad, mu1, mu4 + 0.0])
    return mu, margin


def constraint_residuals(mu, n_t, n_phi):
    """Absolute residuals of the three constraint equations, vectorized."""
    m = np.clip(np.asarray(mu, dtype=float), 0.0, None)
    r_t = np.abs((np.sqrt(m).sum(axis=-1) ** 2 - 1.0) / 2.0 - n_t)
    prod = np.clip((m[..., 0] + m[..., 3]) * (m[..., 1] + m[..., 2]), 0.0, None)
    r_phi = np.abs(3.0 * np.sqrt(prod) - n_phi)
    r_norm = np.abs(np.asarray(mu).sum(axis=-1) - 1.0)
    return r_t, r_phi, r_norm


def solve_constraints(n_t: float, n_phi: float, mu4: float) -> list:
    """Both closed-form branches at (n_T, n_phi, mu4); invalid branches carry
    a reason code instead of raising.

    Candidates are canonicalized so mu2 >= mu3 (a constraint-invariant
    exchange); a branch is valid only if the full vector is descending,
    in range, and reproduces the constraints within 1e-8.
    """
    if not (0.0 <= n_t <= 1.5 + 1e-12 and 0.0 <= n_phi <= 1.5 + 1e-12):
        raise DomainError(f"constraints outside [0, 3/2]: n_t={n_t}, n_phi={n_phi}")
    if not (-1e-12 <= mu4 <= 0.25 + 1e-12):
        raise DomainError(f"mu4={mu4} outside [0, 1/4]")

    out = []
    for branch, sign in ((1, 1.0), (2, -1.0)):
        s = np.sqrt(max(0.0, 1.0 - 4.0 * n_phi ** 2 / 9.0))
        alpha = 0.5 * (1.0 + sign * s)
        beta = 1.0 - alpha
        mu1 = alpha - mu4
        reason = None
        if mu1 < -ORDER_TOL:
            reason = "range violation"
        sig = np.sqrt(2.0 * n_t + 1.0)
        r = sig - np.sqrt(max(mu1, 0.0)) - np.sqrt(max(mu4, 0.0))
        beta_quad = 2.0 * beta - r * r
        rad = r * r * beta_quad  # == g0 - g1, in cancellation-free form
        if reason is None and (rad < -1e-10 or r < -ORDER_TOL):
            reason = "complex value"
        d = np.sqrt(max(rad, 0.0))
        mu2, mu3 = beta / 2.0 + d / 2.0, beta / 2.0 - d / 2.0
        if mu2 < mu3:  # canonical order within the invariant exchange
            mu2, mu3 = mu3, mu2
        mu = np.array([mu1, mu2, mu3, mu4])
        if reason is None and (np.any(mu < -ORDER_TOL) or np.any(mu > 1 + ORDER_TOL)):
            reason = "range violation"
        if reason is None and not (
            mu1 >= mu2 - ORDER_TOL and mu3 >= mu4 - ORDER_TOL
        ):
            reason = "ordering violation"
        res = tuple(float(v) for v in constraint_residuals(mu, n_t, n_phi))
        if reason is None and max(res) > RESIDUAL_TOL:
            reason = "residual failure"
        out.append(
            BranchSolution(
                mu=np.clip(mu, 0.0, 1.0) if reason is None else mu,
                branch=branch,
                valid=reason is None,
                residuals=res,
                reason=reason,
            )
        )
    return out


def feasible_mu4_scan(point: MeasurePoint, steps: int = 101) -> list:
    """Evaluate both branches on a uniform mu4 grid over [0, 1/4]; return the
    valid ones as (mu4, BranchSolution) pairs."""
    if steps < 2:
        raise DomainError("steps must be >= 2")
    found = []
    for mu4 in np.linspace(0.0, 0.25, steps):
        for sol in solve_constraints(point.n_t, point.n_hat_phi, float(mu4)):
            if sol.valid:
                found.append((float(mu4), sol))
    return found
