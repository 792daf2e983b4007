"""Predicted spectrum of the flip-mapped Schmidt-aligned pure state.

For an even-dimensional DxD pure state whose B-side Schmidt basis equals the
angular-momentum basis, the mapped operator decomposes (after a permutation)
into a zero block, 2x2 blocks labelled by admissible index pairs, and one
DxD block R with R_jk = -sqrt(mu_j mu_k)(1 - delta_jk)(1 - delta_{j,D-k+1}).
The full D^2 spectrum is therefore:

  * D(D+1)/2 zeros,
  * mu_p + mu_q for each admissible pair (p, q),
  * the D/2 roots of a monic polynomial r_D(z), at most one of them negative
    (exactly one when every coefficient is nonzero).
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import NamedTuple

import numpy as np

from .errors import ConvergenceFailure, DomainError, OddDimension
from .linalg import hermitian_eig
from .measures import aligned_pure_state, apply_phi_B
from .states import SchmidtVector


class AdmissiblePair(NamedTuple):
    p: int  # 1-based, p < q
    q: int


def _check_dim(d: int) -> None:
    if d < 4 or d % 2 != 0:
        raise OddDimension(f"need an even dimension >= 4, got {d}")


def _mu_array(mu, d: int) -> np.ndarray:
    arr = mu.mu if isinstance(mu, SchmidtVector) else np.asarray(mu, dtype=float)
    if arr.shape != (d,):
        raise DomainError(f"need {d} Schmidt coefficients, got shape {arr.shape}")
    return arr


def admissible_pairs(d: int) -> list:
    """All index pairs (p, q), p < q, with q != p and q != D - p + 1.

    There are exactly D(D-2)/2 of them.
    """
    _check_dim(d)
    return [
        AdmissiblePair(p, q)
        for p, q in combinations(range(1, d + 1), 2)
        if q != d - p + 1
    ]


def _pairwise_admissible(indices, d: int) -> bool:
    for a, b in combinations(indices, 2):
        if b == a or b == d - a + 1:
            return False
    return True


def admissible_sum(n: int, mu, d: int | None = None) -> float:
    """Sum of n-fold products of Schmidt coefficients over strictly increasing,
    pairwise admissible index sets."""
    arr = mu.mu if isinstance(mu, SchmidtVector) else np.asarray(mu, dtype=float)
    d = len(arr) if d is None else d
    _check_dim(d)
    if not 1 <= n <= d // 2:
        raise DomainError(f"n={n} outside [1, D/2]")
    total = 0.0
    for idx in combinations(range(1, d + 1), n):
        if _pairwise_admissible(idx, d):
            total += float(np.prod([arr[i - 1] for i in idx]))
    return total


def pair_product(mu, d: int | None = None) -> float:
    """The invariant I = prod_{j=1}^{D/2} (mu_j + mu_{D-j+1})."""
    arr = mu.mu if isinstance(mu, SchmidtVector) else np.asarray(mu, dtype=float)
    d = len(arr) if d is None else d
    _check_dim(d)
    return float(np.prod([arr[j] + arr[d - 1 - j] for j in range(d // 2)]))


def r_poly_coeffs(d: int, mu) -> np.ndarray:
    """Monic coefficients (highest power first) of the degree-D/2 polynomial

        r_D(z) = z^(D/2) + sum_{t=0}^{D/2-2} t (-1)^t S_{t+1} z^(D/2-t-1)
                 - (D/2 - 1) (-1)^(D/2) I.

    The t = 0 term vanishes, so the z^(D/2-1) coefficient is always zero.
    """
    _check_dim(d)
    arr = _mu_array(mu, d)
    half = d // 2
    coeffs = np.zeros(half + 1)
    coeffs[0] = 1.0
    for t in range(0, half - 1):
        s_val = admissible_sum(t + 1, arr, d)
        coeffs[t + 1] = t * (-1) ** t * s_val
    coeffs[half] += -(half - 1) * (-1) ** half * pair_product(arr, d)
    return coeffs


def _poly_eval(coeffs: np.ndarray, z: float) -> float:
    out = 0.0
    for c in coeffs:
        out = out * z + c
    return out


def r_roots(d: int, mu) -> np.ndarray:
    """All D/2 roots of r_D (ascending).  They are eigenvalues of a Hermitian
    block, hence real; the single negative root (when present) is re-certified
    by bisection after the companion-matrix solve."""
    coeffs = r_poly_coeffs(d, mu)
    roots = np.roots(coeffs)
    if np.any(np.abs(roots.imag) > 1e-7):
        raise ConvergenceFailure(f"complex roots from companion solve: {roots}")
    roots = np.sort(roots.real)
    if roots[0] < -1e-12:
        roots[0] = _bisect_root(coeffs, roots[0])
    return roots


def _bisect_root(coeffs: np.ndarray, approx: float) -> float:
    """Refine an isolated real root by bisection around the companion estimate."""
    delta = max(1e-9, 1e-6 * abs(approx))
    lo, hi = approx - delta, approx + delta
    flo, fhi = _poly_eval(coeffs, lo), _poly_eval(coeffs, hi)
    grow = 0
    while flo * fhi > 0 and grow < 60:
        delta *= 2.0
        lo, hi = approx - delta, approx + delta
        flo, fhi = _poly_eval(coeffs, lo), _poly_eval(coeffs, hi)
        grow += 1
    if flo * fhi > 0:
        return approx  # double root; companion value is the best available
    for _ in range(90):
        mid = 0.5 * (lo + hi)
        fm = _poly_eval(coeffs, mid)
        if fm == 0.0:
            return mid
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class SpectrumSummary:
    """Complete predicted spectrum of the mapped aligned state (D^2 values)."""

    dim: int
    zero_count: int
    pair_eigenvalues: np.ndarray
    r_roots: np.ndarray

    def all_eigenvalues(self) -> np.ndarray:
        return np.sort(
            np.concatenate(
                [np.zeros(self.zero_count), self.pair_eigenvalues, self.r_roots]
            )
        )

    def negative_count(self, tol: float = 1e-10) -> int:
        return int((self.all_eigenvalues() < -tol).sum())


def predicted_spectrum(d: int, mu) -> SpectrumSummary:
    """Assemble the full predicted D^2 spectrum from the closed forms."""
    arr = _mu_array(mu, d)
    pairs = admissible_pairs(d)
    pair_vals = np.array([arr[p - 1] + arr[q - 1] for p, q in pairs])
    roots = r_roots(d, arr)
    summary = SpectrumSummary(
        dim=d,
        zero_count=d * (d + 1) // 2,
        pair_eigenvalues=pair_vals,
        r_roots=roots,
    )
    total = summary.zero_count + len(pair_vals) + len(roots)
    if total != d * d:
        raise ConvergenceFailure(f"spectrum bookkeeping error: {total} != {d * d}")
    return summary


def verify_against_direct(mu, d: int) -> float:
    """Max |predicted - direct| eigenvalue discrepancy for the aligned state.

    Constructs the aligned DxD pure state explicitly, applies the flip map on
    subsystem B, diagonalizes and compares against the closed-form spectrum.
    """
    arr = _mu_array(mu, d)
    rho = aligned_pure_state(arr).density_matrix()
    direct = hermitian_eig(apply_phi_B(rho)).eigenvalues
    predicted = predicted_spectrum(d, arr).all_eigenvalues()
    return float(np.abs(np.sort(direct) - predicted).max())
