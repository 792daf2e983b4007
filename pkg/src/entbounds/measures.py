"""Entanglement quantities: the flip-map negativity, the transpose negativity,
and the pure-state closed forms on Schmidt coefficients.

The positive (not completely positive) map used throughout is

    Phi(sigma) = Tr(sigma) I - sigma - V sigma^T V^dag,

where V is the spin-flip unitary of the angular-momentum basis,
``<j,m|V|j,m'> = (-1)^(j-m) delta_{m,-m'}``.  V exists with V^T = -V only in
even dimension, which is why every flip-map operation rejects odd dimensions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, DomainError, OddDimension, WrongLength
from .linalg import is_unitary, partial_trace, partial_transpose, trace_norm
from .states import (
    DensityMatrix,
    PureState,
    SchmidtVector,
    haar_random_pure_batch,
    schmidt_coefficients_batch,
)

_POSITIVE = 1e-300


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AngularMomentumBasis:
    """Unitary relabeling from the computational basis to the |j,m> ordering.

    The default identity basis takes computational index l = 1..D as |j,m>
    with m descending, which is the ordering the flip unitary assumes.
    """

    dim: int
    unitary: np.ndarray

    def __post_init__(self):
        if self.dim % 2 != 0:
            raise OddDimension(f"basis dimension {self.dim} must be even")
        u = np.asarray(self.unitary, dtype=complex)
        if u.shape != (self.dim, self.dim):
            raise DimensionMismatch(f"unitary shape {u.shape} for dim {self.dim}")
        if not is_unitary(u, 1e-10):
            raise DomainError("basis matrix is not unitary within 1e-10")
        object.__setattr__(self, "unitary", u)

    @classmethod
    def identity(cls, dim: int) -> "AngularMomentumBasis":
        return cls(dim, np.eye(dim, dtype=complex))


@dataclass(frozen=True)
class MeasurePoint:
    """A state's coordinates in the constraint plane, both in [0, 3/2]."""

    n_hat_phi: float
    n_t: float

    def __post_init__(self):
        for name, v in (("n_hat_phi", self.n_hat_phi), ("n_t", self.n_t)):
            if not -1e-9 <= v <= 1.5 + 1e-9:
                raise DomainError(f"{name} = {v} outside [0, 3/2]")


# ---------------------------------------------------------------------------
# the flip map
# ---------------------------------------------------------------------------

def v_matrix(d: int) -> np.ndarray:
    """Spin-flip unitary V with entries (-1)^(l-1) on the antidiagonal.

    Unitary and skew-symmetric (V^T = -V) for even d.
    """
    if d % 2 != 0 or d < 2:
        raise OddDimension(f"flip unitary needs an even dimension >= 2, got {d}")
    v = np.zeros((d, d), dtype=complex)
    for l in range(1, d + 1):
        v[l - 1, d - l] = (-1) ** (l - 1)
    return v


def _flip_unitary(d: int, basis: AngularMomentumBasis | None) -> np.ndarray:
    """V conjugated into the caller's basis: W = U V U^T (still skew, unitary)."""
    v = v_matrix(d)
    if basis is None:
        return v
    if basis.dim != d:
        raise DimensionMismatch(f"basis dim {basis.dim} != operator dim {d}")
    u = basis.unitary
    return u @ v @ u.T


def phi_map(sigma, basis: AngularMomentumBasis | None = None) -> np.ndarray:
    """Phi(sigma) = Tr(sigma) I - sigma - V sigma^T V^dag on one subsystem."""
    sigma = np.asarray(sigma, dtype=complex)
    if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got {sigma.shape}")
    d = sigma.shape[0]
    w = _flip_unitary(d, basis)
    return np.trace(sigma) * np.eye(d) - sigma - w @ sigma.T @ w.conj().T


def apply_phi_B(rho: DensityMatrix, basis: AngularMomentumBasis | None = None) -> np.ndarray:
    """(I tensor Phi) rho = Tr_B(rho) tensor I_B - rho - (I tensor V) rho^T_B (I tensor V^dag).

    Positive semidefinite (within -1e-9) on separable inputs; a negative
    eigenvalue certifies entanglement.
    """
    da, db = rho.dim_a, rho.dim_b
    if db % 2 != 0:
        raise OddDimension(f"dim B = {db} is odd; the flip map needs even dimension")
    w = _flip_unitary(db, basis)
    m = rho.matrix
    t1 = np.kron(partial_trace(m, da, db, keep="A"), np.eye(db))
    rtb = partial_transpose(m, da, db, subsystem="B")
    iw = np.kron(np.eye(da), w)
    return t1 - m - iw @ rtb @ iw.conj().T


def phi_negativity(rho: DensityMatrix, basis: AngularMomentumBasis | None = None) -> float:
    """Flip-map negativity n_Phi = D(D-1)/4 * [ ||(I x Phi) rho|| / (dimB - 2) - 1 ].

    ``D = min(dimA, dimB)``.  The denominator equals the trace of the mapped
    operator for any unit-trace separable input, so the measure is zero on
    separable states, nonnegative everywhere, and convex in rho.  For square
    states (dimA = dimB = D) this is exactly the D-dependent normalization
    n_Phi = D(D-1)/4 * [||.||/(D-2) - 1].
    """
    mapped = apply_phi_B(rho, basis)
    d = min(rho.dim_a, rho.dim_b)
    return d * (d - 1) / 4.0 * (trace_norm(mapped) / (rho.dim_b - 2) - 1.0)


def negativity(rho: DensityMatrix) -> float:
    """Transpose negativity n_T = (||rho^T_A|| - 1) / 2."""
    pt = partial_transpose(rho.matrix, rho.dim_a, rho.dim_b, subsystem="A")
    return (trace_norm(pt) - 1.0) / 2.0


# ---------------------------------------------------------------------------
# pure-state closed forms (functions of the sorted Schmidt coefficients)
# ---------------------------------------------------------------------------

def _mu_array(mu, length: int | None = None) -> np.ndarray:
    arr = mu.mu if isinstance(mu, SchmidtVector) else np.asarray(mu, dtype=float)
    if length is not None and arr.shape[-1] != length:
        raise WrongLength(f"need {length} Schmidt coefficients, got {arr.shape[-1]}")
    return arr


def pure_negativity(mu) -> float:
    """n_T of a pure state: ((sum_i sqrt(mu_i))^2 - 1) / 2."""
    arr = _mu_array(mu)
    out = (np.sqrt(np.clip(arr, 0.0, None)).sum(axis=-1) ** 2 - 1.0) / 2.0
    return float(out) if np.isscalar(out) or out.ndim == 0 else out

def nhat_phi(mu) -> float:
    """Flip-map constraint value 3*sqrt((mu1+mu4)(mu2+mu3)) for sorted length-4 mu.

    An upper bound (numerically supported, unproven) on the flip-map
    negativity of the corresponding pure state; exact when the B-side
    Schmidt basis coincides with the angular-momentum basis.
    """
    arr = _mu_array(mu, length=4)
    prod = (arr[..., 0] + arr[..., 3]) * (arr[..., 1] + arr[..., 2])
    out = 3.0 * np.sqrt(np.clip(prod, 0.0, None))
    return float(out) if np.isscalar(out) or out.ndim == 0 else out


def eof_pure(mu) -> float:
    """Entropy of entanglement H(mu) = -sum_i mu_i log2 mu_i (0 log 0 = 0)."""
    arr = np.clip(_mu_array(mu), 0.0, 1.0)
    terms = np.where(arr > _POSITIVE, -arr * np.log2(np.where(arr > 0, arr, 1.0)), 0.0)
    out = terms.sum(axis=-1)
    return float(out) if np.isscalar(out) or out.ndim == 0 else out


def tangle_pure(mu) -> float:
    """Tangle of a pure state: 2(1 - |mu|^2) = 4 sum_{i<j} mu_i mu_j."""
    arr = _mu_array(mu)
    out = 2.0 * (1.0 - (arr ** 2).sum(axis=-1))
    return float(out) if np.isscalar(out) or out.ndim == 0 else out


def concurrence_pure(mu) -> float:
    """Concurrence of a pure state: the square root of the tangle."""
    out = np.sqrt(np.clip(tangle_pure(mu), 0.0, None))
    return float(out) if np.isscalar(out) or out.ndim == 0 else out


def measure_point(mu) -> MeasurePoint:
    """Map a length-4 Schmidt vector to its (n_hat_phi, n_T) plane point."""
    arr = _mu_array(mu, length=4)
    if arr.ndim != 1:
        raise WrongLength("measure_point takes a single Schmidt vector")
    return MeasurePoint(n_hat_phi=float(nhat_phi(arr)), n_t=float(pure_negativity(arr)))


# ---------------------------------------------------------------------------
# Schmidt-aligned pure states
# ---------------------------------------------------------------------------

def aligned_pure_state(mu, dim_b: int | None = None) -> PureState:
    """Pure DxN state whose B-side Schmidt basis is the first D basis vectors."""
    arr = _mu_array(mu)
    d = arr.shape[-1]
    n = d if dim_b is None else dim_b
    if n < d:
        raise DimensionMismatch(f"need dim_b >= {d}, got {n}")
    amps = np.zeros(d * n, dtype=complex)
    for i in range(d):
        amps[i * n + i] = np.sqrt(max(arr[i], 0.0))
    amps /= np.linalg.norm(amps)
    return PureState(d, n, amps)


def phi_image_aligned(mu, dim_b: int | None = None) -> np.ndarray:
    """(I tensor Phi) of a Schmidt-aligned pure DxN state, on the Schmidt block.

    This is the operator whose nonzero spectrum depends on the Schmidt
    coefficients only (D^2 eigenvalues; the rest of the DxN space is null):
    the flip pairs index i with D+1-i inside the D-dimensional block carrying
    the state.  For N = D it coincides with ``apply_phi_B`` of the aligned
    state; its trace norm is 2[1 + sqrt((mu1+mu4)(mu2+mu3))] for D = 4.
    """
    arr = _mu_array(mu)
    d = arr.shape[-1]
    if d % 2 != 0:
        raise OddDimension(f"need even Schmidt length, got {d}")
    n = d if dim_b is None else dim_b
    if n < d:
        raise DimensionMismatch(f"need dim_b >= {d}, got {n}")
    root = np.sqrt(np.clip(arr, 0.0, None))
    op = np.zeros((d * n, d * n), dtype=complex)
    for i in range(d):
        for j in range(d):
            op[i * n + j, i * n + j] += arr[i]
            op[i * n + i, j * n + j] -= root[i] * root[j]
            sign = (-1) ** (i + j)  # == (-1)^((i+1)+(j+1)) for 1-based labels
            op[i * n + (d - 1 - j), j * n + (d - 1 - i)] -= sign * root[i] * root[j]
    return op


# ---------------------------------------------------------------------------
# batched Haar sampling of the constraint gap (histogram pipeline)
# ---------------------------------------------------------------------------

def gap_sample(count: int, seed: int, chunk: int = 8192) -> dict:
    """Sample ``count`` Haar-random 4x4 pure states and return the gap data.

    For each sample: the sorted Schmidt coefficients, the closed-form
    constraint value ``nhat``, and the flip-map negativity ``nphi`` evaluated
    in the fixed identity angular-momentum basis.  The returned ``diff``
    array holds nhat - nphi, the quantity whose nonnegativity is the
    numerically supported conjecture behind the flip-map constraint.
    """
    if count < 1:
        raise DomainError("count must be >= 1")
    rng = np.random.default_rng(seed)
    v4 = v_matrix(4)
    eye4 = np.eye(4)
    nhat_parts = []
    nphi_parts = []
    done = 0
    while done < count:
        m = min(chunk, count - done)
        states = haar_random_pure_batch(4, 4, m, rng)
        mu = schmidt_coefficients_batch(states, 4, 4)
        nhat_parts.append(3.0 * np.sqrt((mu[:, 0] + mu[:, 3]) * (mu[:, 1] + mu[:, 2])))

        t = np.einsum("ni,nj->nij", states, states.conj()).reshape(m, 4, 4, 4, 4)
        tr_b = np.einsum("nabcb->nac", t)
        term1 = np.einsum("nac,bd->nabcd", tr_b, eye4)
        rtb = t.transpose(0, 1, 4, 3, 2)
        term3 = np.einsum("be,naecf,df->nabcd", v4, rtb, v4.conj())
        mapped = (term1 - t - term3).reshape(m, 16, 16)
        tn = np.abs(np.linalg.eigvalsh(mapped)).sum(axis=1)
        nphi_parts.append(3.0 * (tn / 2.0 - 1.0))
        done += m
    nhat = np.concatenate(nhat_parts)
    nphi = np.concatenate(nphi_parts)
    return {"nhat": nhat, "nphi": nphi, "diff": nhat - nphi}
