"""Bipartite quantum states: construction, Schmidt decomposition, sampling.

Random sampling uses ``numpy.random.Generator`` seeded with PCG64, which has
stable cross-platform output, so every sampled figure is reproducible
bit-for-bit from its seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionMismatch,
    DomainError,
    NotNormalized,
    ParseError,
)
from .linalg import hermitian_eig

NORM_TOL = 1e-10


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SchmidtVector:
    """Ordered Schmidt coefficients mu_1 >= ... >= mu_D >= 0 with sum 1.

    Ordering and normalization are validated at construction; violations
    raise instead of being silently repaired.  Use :meth:`sorted` when the
    caller wants explicit descending reordering first.
    """

    mu: np.ndarray

    def __init__(self, mu):
        mu = np.asarray(mu, dtype=float).copy()
        if mu.ndim != 1 or len(mu) < 1:
            raise DomainError("Schmidt vector must be a 1-d sequence")
        if np.any(mu < -NORM_TOL) or np.any(mu > 1 + NORM_TOL):
            raise DomainError(f"coefficients outside [0,1]: {mu}")
        if abs(mu.sum() - 1.0) > NORM_TOL:
            raise DomainError(f"coefficients sum to {mu.sum()}, expected 1")
        if np.any(np.diff(mu) > NORM_TOL):
            raise DomainError(f"coefficients not in descending order: {mu}")
        # canonicalize sub-tolerance float noise only; real violations raised above
        mu = np.sort(np.clip(mu, 0.0, 1.0))[::-1].copy()
        object.__setattr__(self, "mu", mu)
        self.mu.setflags(write=False)

    @classmethod
    def sorted(cls, values) -> "SchmidtVector":
        """Construct from unordered coefficients, sorting them first."""
        return cls(np.sort(np.asarray(values, dtype=float))[::-1])

    def __len__(self) -> int:
        return len(self.mu)

    def __iter__(self):
        return iter(self.mu)


@dataclass(frozen=True)
class PureState:
    """Bipartite pure state |psi> in the computational product basis."""

    dim_a: int
    dim_b: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if len(amps) != self.dim_a * self.dim_b:
            raise DimensionMismatch(
                f"{len(amps)} amplitudes for dims {self.dim_a}x{self.dim_b}"
            )
        nrm = float(np.linalg.norm(amps))
        if abs(nrm - 1.0) > NORM_TOL:
            raise NotNormalized(f"|psi| = {nrm}, expected 1")
        object.__setattr__(self, "amplitudes", amps)

    def density_matrix(self) -> "DensityMatrix":
        rho = np.outer(self.amplitudes, self.amplitudes.conj())
        return DensityMatrix(self.dim_a, self.dim_b, rho)


@dataclass(frozen=True)
class DensityMatrix:
    """Bipartite mixed state: Hermitian, unit trace, PSD within 1e-9."""

    dim_a: int
    dim_b: int
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        n = self.dim_a * self.dim_b
        if m.shape != (n, n):
            raise DimensionMismatch(
                f"matrix shape {m.shape} for dims {self.dim_a}x{self.dim_b}"
            )
        if float(np.abs(m - m.conj().T).max()) > NORM_TOL:
            raise DomainError("density matrix is not Hermitian within 1e-10")
        if abs(np.trace(m).real - 1.0) > NORM_TOL:
            raise DomainError(f"trace {np.trace(m).real}, expected 1")
        wmin = float(np.linalg.eigvalsh(m).min())
        if wmin < -1e-9:
            raise DomainError(f"minimum eigenvalue {wmin} below -1e-9")
        object.__setattr__(self, "matrix", m)


@dataclass(frozen=True)
class SchmidtDecomposition:
    coefficients: SchmidtVector
    basis_a: np.ndarray  # columns |a_i>
    basis_b: np.ndarray  # columns |b_i>
    swapped: bool = field(default=False)  # True when dims were swapped internally


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------

def schmidt_decompose(psi: PureState) -> SchmidtDecomposition:
    """Schmidt decomposition |psi> = sum_i sqrt(mu_i) |a_i>|b_i>.

    Computed by diagonalizing the reduced density operator on the smaller
    subsystem and projecting out the partner vectors.  Zero or degenerate
    coefficients get an arbitrary orthonormal completion; every downstream
    formula depends on the coefficients only.
    """
    swapped = psi.dim_a > psi.dim_b
    if swapped:
        m = psi.amplitudes.reshape(psi.dim_a, psi.dim_b).T
        da, db = psi.dim_b, psi.dim_a
    else:
        m = psi.amplitudes.reshape(psi.dim_a, psi.dim_b)
        da, db = psi.dim_a, psi.dim_b

    rho_a = m @ m.conj().T
    spec = hermitian_eig(rho_a, tol=1e-9)
    mu = np.clip(spec.eigenvalues, 0.0, 1.0)
    mu = mu / mu.sum()
    basis_a = spec.eigenvectors

    # |b_i> = <a_i|psi> / sqrt(mu_i); complete the zero block orthonormally
    basis_b = np.zeros((db, da), dtype=complex)
    for i in range(da):
        if mu[i] > 1e-14:
            vec = basis_a[:, i].conj() @ m
            basis_b[:, i] = vec / np.linalg.norm(vec)
    deficient = [i for i in range(da) if mu[i] <= 1e-14]
    if deficient:
        # orthonormal completion against the already-filled columns
        filled = [i for i in range(da) if mu[i] > 1e-14]
        q, _ = np.linalg.qr(
            np.concatenate(
                [basis_b[:, filled], np.eye(db, dtype=complex)], axis=1
            )
        )
        for k, i in enumerate(deficient):
            basis_b[:, i] = q[:, len(filled) + k]

    return SchmidtDecomposition(
        coefficients=SchmidtVector(mu),
        basis_a=basis_a,
        basis_b=basis_b,
        swapped=swapped,
    )


def haar_random_pure(dim_a: int, dim_b: int, seed: int) -> PureState:
    """Haar-random bipartite pure state (normalized complex Gaussian vector)."""
    if dim_a < 2 or dim_b < 2:
        raise DomainError("both dimensions must be >= 2")
    rng = np.random.default_rng(seed)
    return PureState(dim_a, dim_b, _gaussian_states(dim_a * dim_b, 1, rng)[0])


def haar_random_pure_batch(
    dim_a: int, dim_b: int, count: int, rng: np.random.Generator
) -> np.ndarray:
    """``count`` Haar-random state vectors as rows of a (count, dA*dB) array.

    The generator is owned by the caller; no global RNG state is touched.
    """
    if dim_a < 2 or dim_b < 2:
        raise DomainError("both dimensions must be >= 2")
    return _gaussian_states(dim_a * dim_b, count, rng)


def _gaussian_states(n: int, count: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal((count, n)) + 1j * rng.standard_normal((count, n))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def schmidt_coefficients_batch(states: np.ndarray, dim_a: int, dim_b: int) -> np.ndarray:
    """Descending Schmidt coefficients for a batch of pure-state rows."""
    m = states.reshape(-1, dim_a, dim_b)
    if dim_a <= dim_b:
        red = m @ m.conj().transpose(0, 2, 1)
    else:
        red = m.conj().transpose(0, 2, 1) @ m
    w = np.linalg.eigvalsh(red)[:, ::-1]
    w = np.clip(w, 0.0, 1.0)
    return w / w.sum(axis=1, keepdims=True)


def make_max_entangled(d: int, n: int | None = None) -> PureState:
    """Maximally entangled DxN state, all D Schmidt coefficients equal 1/D."""
    n = d if n is None else n
    if d > n:
        raise DimensionMismatch(f"need D <= N, got D={d}, N={n}")
    amps = np.zeros(d * n, dtype=complex)
    for i in range(d):
        amps[i * n + i] = 1.0 / np.sqrt(d)
    return PureState(d, n, amps)


def make_isotropic(d: int, fidelity: float) -> DensityMatrix:
    """Isotropic DxD state F*P+ + (1-F)(I-P+)/(D^2-1).

    ``P+`` is the maximally entangled projector and F its fidelity with the
    state, F in [0, 1].
    """
    if d < 2:
        raise DomainError("need D >= 2")
    if not 0.0 <= fidelity <= 1.0:
        raise DomainError(f"fidelity {fidelity} outside [0,1]")
    psi = make_max_entangled(d, d).amplitudes
    proj = np.outer(psi, psi.conj())
    rho = fidelity * proj + (1.0 - fidelity) * (np.eye(d * d) - proj) / (d * d - 1)
    return DensityMatrix(d, d, rho)


def make_product(state_a, state_b) -> PureState:
    """Product state |a> tensor |b| from two normalized factor vectors."""
    a = np.asarray(state_a, dtype=complex).reshape(-1)
    b = np.asarray(state_b, dtype=complex).reshape(-1)
    for v, name in ((a, "A"), (b, "B")):
        if abs(np.linalg.norm(v) - 1.0) > NORM_TOL:
            raise NotNormalized(f"factor {name} is not normalized")
    return PureState(len(a), len(b), np.kron(a, b))


# ---------------------------------------------------------------------------
# JSON serialization
# ---------------------------------------------------------------------------

def _pairs(z: np.ndarray) -> list:
    return [[float(c.real), float(c.imag)] for c in z.reshape(-1)]


def state_to_json(state) -> str:
    """Serialize a PureState or DensityMatrix to its JSON wire format."""
    if isinstance(state, PureState):
        doc = {
            "dimA": state.dim_a,
            "dimB": state.dim_b,
            "amplitudes": _pairs(state.amplitudes),
        }
    elif isinstance(state, DensityMatrix):
        doc = {
            "dimA": state.dim_a,
            "dimB": state.dim_b,
            "matrix": _pairs(state.matrix),  # row-major
        }
    else:
        raise TypeError(f"cannot serialize {type(state).__name__}")
    return json.dumps(doc)


def state_from_json(text: str):
    """Parse the JSON wire format back into a PureState or DensityMatrix."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    try:
        da, db = int(doc["dimA"]), int(doc["dimB"])
        if "amplitudes" in doc:
            z = np.array([complex(re, im) for re, im in doc["amplitudes"]])
            return PureState(da, db, z)
        if "matrix" in doc:
            z = np.array([complex(re, im) for re, im in doc["matrix"]])
            return DensityMatrix(da, db, z.reshape(da * db, da * db))
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed state document: {exc}") from exc
    raise ParseError("state document has neither 'amplitudes' nor 'matrix'")
