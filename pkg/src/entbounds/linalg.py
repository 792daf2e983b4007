"""Dense complex linear algebra for small bipartite operators.

Matrices are plain ``numpy.ndarray`` objects in row-major layout; everything
here is a pure function.  Sizes never exceed a few tens of rows (4xN states
with N <= 6 at desk scale), so the LAPACK dense paths are used throughout.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NotHermitian, NotSquare

HERMITICITY_TOL = 1e-10


def _as_matrix(a) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2:
        raise NotSquare(f"expected a 2-d matrix, got shape {a.shape}")
    return a


def _require_square(a: np.ndarray) -> np.ndarray:
    a = _as_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise NotSquare(f"expected a square matrix, got shape {a.shape}")
    return a


def is_hermitian(a, tol: float = HERMITICITY_TOL) -> bool:
    """True if ``max|a - a^dag| <= tol`` (requires a square matrix)."""
    a = _as_matrix(a)
    if a.shape[0] != a.shape[1]:
        return False
    return float(np.abs(a - a.conj().T).max()) <= tol


def is_unitary(a, tol: float = HERMITICITY_TOL) -> bool:
    """True if ``a^dag a = I`` within tol."""
    a = _as_matrix(a)
    if a.shape[0] != a.shape[1]:
        return False
    return float(np.abs(a.conj().T @ a - np.eye(a.shape[0])).max()) <= tol


@dataclass(frozen=True)
class HermitianSpectrum:
    """Eigendecomposition of a Hermitian matrix.

    ``eigenvalues`` are sorted in descending order and ``eigenvectors``
    holds the matching orthonormal eigenvectors as columns, so that
    ``A = V diag(w) V^dag``.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def hermitian_eig(a, tol: float = HERMITICITY_TOL) -> HermitianSpectrum:
    """Eigendecomposition of a Hermitian matrix, eigenvalues descending.

    Raises NotSquare / NotHermitian when the input fails the preconditions.
    """
    a = _require_square(a)
    dev = float(np.abs(a - a.conj().T).max()) if a.size else 0.0
    if dev > tol:
        raise NotHermitian(f"max|a - a^dag| = {dev:.3e} exceeds tol {tol:.1e}")
    w, v = np.linalg.eigh(a)
    order = np.argsort(w)[::-1]
    return HermitianSpectrum(eigenvalues=w[order], eigenvectors=v[:, order])


def trace_norm(a) -> float:
    """Trace norm ``Tr sqrt(a a^dag)``, i.e. the sum of singular values.

    Hermitian inputs take the eigenvalue fast path; the general case falls
    back to singular values via the eigenvalues of ``a^dag a``.
    """
    a = _require_square(a)
    if is_hermitian(a):
        return float(np.abs(np.linalg.eigvalsh(a)).sum())
    s2 = np.linalg.eigvalsh(a.conj().T @ a)
    return float(np.sqrt(np.clip(s2, 0.0, None)).sum())


def kron(a, b) -> np.ndarray:
    """Tensor (Kronecker) product of two matrices."""
    return np.kron(_as_matrix(a), _as_matrix(b))


def _check_bipartite(rho: np.ndarray, dim_a: int, dim_b: int) -> None:
    n = dim_a * dim_b
    if rho.shape != (n, n):
        raise DimensionMismatch(
            f"state of shape {rho.shape} does not match dims {dim_a}x{dim_b}"
        )


def partial_transpose(rho, dim_a: int, dim_b: int, subsystem: str = "A") -> np.ndarray:
    """Partial transpose of a bipartite operator on subsystem 'A' or 'B'."""
    rho = _as_matrix(rho)
    _check_bipartite(rho, dim_a, dim_b)
    t = rho.reshape(dim_a, dim_b, dim_a, dim_b)
    if subsystem == "A":
        t = t.transpose(2, 1, 0, 3)
    elif subsystem == "B":
        t = t.transpose(0, 3, 2, 1)
    else:
        raise ValueError(f"subsystem must be 'A' or 'B', got {subsystem!r}")
    return t.reshape(dim_a * dim_b, dim_a * dim_b)


def partial_trace(rho, dim_a: int, dim_b: int, keep: str = "A") -> np.ndarray:
    """Trace out one subsystem of a bipartite operator, keeping 'A' or 'B'."""
    rho = _as_matrix(rho)
    _check_bipartite(rho, dim_a, dim_b)
    t = rho.reshape(dim_a, dim_b, dim_a, dim_b)
    if keep == "A":
        return np.trace(t, axis1=1, axis2=3)
    if keep == "B":
        return np.trace(t, axis1=0, axis2=2)
    raise ValueError(f"keep must be 'A' or 'B', got {keep!r}")
