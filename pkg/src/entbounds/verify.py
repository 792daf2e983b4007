"""Invariant suites behind the ``verify`` CLI command.

Each suite returns a list of check dicts {name, passed, detail}; the CLI
renders them as JSON and maps any failure to a nonzero exit code.  The pytest
suite covers the same ground (and more) at fixed sample sizes; these runners
exist so a deployed install can re-verify itself from the command line.
"""

from __future__ import annotations

import numpy as np

from . import bounds, measures, region, spectrum
from .bounds import Measure
from .linalg import hermitian_eig, kron, partial_trace, partial_transpose, trace_norm
from .region import pure_state_region
from .states import (
    DensityMatrix,
    haar_random_pure_batch,
    make_product,
    schmidt_coefficients_batch,
)
from .surface import (
    build_bound_surface,
    build_gtilde,
    lower_convex_envelope,
    monotone_envelope,
    query_many,
)

SUITES = ("linalg", "measures", "bounds", "region", "surface", "spectrum", "all")


def _check(name, passed, detail=""):
    return {"name": name, "passed": bool(passed), "detail": str(detail)}


def _random_hermitian(rng, n):
    b = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return b + b.conj().T


def suite_linalg(samples: int, seed: int) -> list:
    rng = np.random.default_rng(seed)
    out = []
    worst_rec, worst_orth, worst_tr = 0.0, 0.0, 0.0
    for _ in range(max(samples // 100, 20)):
        n = int(rng.integers(2, 13))
        h = _random_hermitian(rng, n)
        spec = hermitian_eig(h)
        scale = max(float(np.linalg.norm(h)), 1e-30)
        worst_rec = max(worst_rec, float(np.linalg.norm(spec.reconstruct() - h)) / scale)
        v = spec.eigenvectors
        worst_orth = max(
            worst_orth, float(np.abs(v.conj().T @ v - np.eye(n)).max())
        )
        worst_tr = max(
            worst_tr, abs(spec.eigenvalues.sum() - np.trace(h).real)
        )
        if trace_norm(h) < abs(np.trace(h).real) - 1e-9:
            out.append(_check("trace_norm >= |trace|", False, f"violation at n={n}"))
    out.append(_check("eig reconstruction <= 1e-10 rel", worst_rec <= 1e-10, worst_rec))
    out.append(_check("eigenvector orthonormality <= 1e-10", worst_orth <= 1e-10, worst_orth))
    out.append(_check("eigenvalue sum matches trace", worst_tr <= 1e-9, worst_tr))

    a = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    b = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    x = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    y = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    mixed = np.abs(kron(a, b) @ kron(x, y) - kron(a @ x, b @ y)).max()
    out.append(_check("kron mixed-product identity", mixed <= 1e-10, mixed))

    ha, hb = _random_hermitian(rng, 3), _random_hermitian(rng, 4)
    err = np.abs(partial_trace(kron(ha, hb), 3, 4, "A") - ha * np.trace(hb)).max()
    out.append(_check("partial_trace of product", err <= 1e-12 * max(1, np.abs(ha).max() * 4), err))
    h = _random_hermitian(rng, 12)
    pt = partial_transpose(h, 3, 4, "A")
    out.append(
        _check(
            "partial_transpose preserves hermiticity+trace",
            np.abs(pt - pt.conj().T).max() <= 1e-12
            and abs(np.trace(pt) - np.trace(h)) <= 1e-12,
        )
    )
    out.append(
        _check(
            "partial_transpose involutive",
            np.abs(partial_transpose(pt, 3, 4, "A") - h).max() <= 1e-15,
        )
    )
    return out


def suite_measures(samples: int, seed: int) -> list:
    out = []
    gap = measures.gap_sample(samples, seed)
    out.append(
        _check(
            "constraint gap nonnegative on Haar samples",
            float(gap["diff"].min()) >= -1e-9,
            f"min diff {gap['diff'].min():.3e} over {samples}",
        )
    )

    rng = np.random.default_rng(seed + 1)
    worst = 0.0
    for n in (4, 6):
        mu = np.sort(rng.dirichlet(np.ones(4), size=max(samples // 200, 50)))[:, ::-1]
        for m in mu:
            closed = 2.0 * (1.0 + np.sqrt((m[0] + m[3]) * (m[1] + m[2])))
            direct = trace_norm(measures.phi_image_aligned(m, n))
            worst = max(worst, abs(direct - closed))
    out.append(_check("aligned trace-norm closed form (N=4,6)", worst <= 1e-9, worst))

    states = haar_random_pure_batch(4, 4, max(samples // 100, 50), rng)
    mus = schmidt_coefficients_batch(states, 4, 4)
    worst = 0.0
    for vec, m in zip(states, mus):
        rho = DensityMatrix(4, 4, np.outer(vec, vec.conj()))
        worst = max(worst, abs(measures.negativity(rho) - measures.pure_negativity(m)))
    out.append(_check("negativity matches pure closed form", worst <= 1e-9, worst))

    worst = -np.inf
    for _ in range(20):
        va, vb = haar_random_pure_batch(4, 4, 2, rng)
        ra = DensityMatrix(4, 4, np.outer(va, va.conj()))
        rb = DensityMatrix(4, 4, np.outer(vb, vb.conj()))
        for lam in np.linspace(0.1, 0.9, 9):
            mix = DensityMatrix(4, 4, lam * ra.matrix + (1 - lam) * rb.matrix)
            for f in (measures.negativity, measures.phi_negativity):
                gap_v = f(mix) - (lam * f(ra) + (1 - lam) * f(rb))
                worst = max(worst, gap_v)
    out.append(_check("negativities convex under mixing", worst <= 1e-9, worst))

    prod = make_product([1, 0, 0, 0], [0, 1, 0, 0]).density_matrix()
    out.append(
        _check(
            "product state has zero measures",
            abs(measures.negativity(prod)) <= 1e-9
            and abs(measures.phi_negativity(prod)) <= 1e-9,
        )
    )
    return out


def suite_bounds(samples: int, seed: int) -> list:
    out = []
    anchors = [
        ("eof_bound_nt(0) = 0", bounds.eof_bound_nt(0.0), 0.0),
        ("eof_bound_nt(3/2) = 2", bounds.eof_bound_nt(1.5), 2.0),
        ("tangle_bound_nt(3/2) = 3/2", bounds.tangle_bound_nt(1.5), 1.5),
        ("tangle_bound_phi(3/2) = 1", bounds.tangle_bound_phi(1.5), 1.0),
        ("conc_bound_nt(3/2) = sqrt(3/2)", bounds.conc_bound_nt(1.5), np.sqrt(1.5)),
        ("gamma(0) = 1", bounds.gamma_of_nt(0.0), 1.0),
        ("gamma(3/2) = 1/4", bounds.gamma_of_nt(1.5), 0.25),
    ]
    for name, got, want in anchors:
        out.append(_check(name, abs(got - want) <= 1e-12, got))
    knee_eof = abs(bounds.htilde_nt(1.0) - ((1.0 - 1.5) * np.log2(3.0) + 2.0))
    knee_tan = abs(bounds.tangle_tilde_nt(1.0) - (4.0 / 3.0 - 0.5))
    out.append(_check("eof branches agree at n_T=1", knee_eof <= 1e-12, knee_eof))
    out.append(_check("tangle branches agree at n_T=1", knee_tan <= 1e-12, knee_tan))

    grid = np.linspace(0.0, 1.5, max(samples, 1000))
    for name, fn in [
        ("eof_bound_phi", bounds.eof_bound_phi),
        ("eof_bound_nt", bounds.eof_bound_nt),
        ("tangle_bound_phi", bounds.tangle_bound_phi),
        ("tangle_bound_nt", bounds.tangle_bound_nt),
        ("conc_bound_phi", bounds.conc_bound_phi),
        ("conc_bound_nt", bounds.conc_bound_nt),
    ]:
        y = fn(grid)
        mono = float(np.min(np.diff(y)))
        second = float(np.min(np.diff(y, 2)))
        out.append(_check(f"{name} nondecreasing", mono >= -1e-12, mono))
        out.append(_check(f"{name} convex (2nd differences)", second >= -1e-9, second))

    rel = np.abs(
        np.asarray(bounds.conc_bound_phi(grid))
        - np.sqrt(np.asarray(bounds.tangle_bound_phi(grid)))
    ).max()
    out.append(_check("conc_bound_phi = sqrt(tangle_bound_phi)", rel <= 1e-12, rel))
    return out


def suite_region(samples: int, seed: int) -> list:
    out = []
    rng = np.random.default_rng(seed)
    n = max(samples, 1000)
    states = haar_random_pure_batch(4, 4, n, rng)
    mus = schmidt_coefficients_batch(states, 4, 4)
    nts = measures.pure_negativity(mus)
    nphis = measures.nhat_phi(mus)
    lo = region.lower_boundary(nphis)
    up = region.upper_boundary(nphis)
    out.append(
        _check(
            "Haar samples inside region",
            bool(np.all(nts >= lo - 1e-8) and np.all(nts <= up + 1e-8)),
            f"max below {float(np.max(lo - nts)):.2e}, max above {float(np.max(nts - up)):.2e}",
        )
    )

    worst = 0.0
    bad_res = 0
    for m, nt_v, nphi_v in zip(mus[: max(samples // 10, 100)], nts, nphis):
        sols = region.solve_constraints(float(nt_v), float(nphi_v), float(m[3]))
        best = np.inf
        for s in sols:
            if s.valid:
                if max(s.residuals) > 1e-8:
                    bad_res += 1
                best = min(best, float(np.abs(s.mu - m).max()))
        worst = max(worst, best)
    out.append(_check("constraint solutions recover samples <= 1e-6", worst <= 1e-6, worst))
    out.append(_check("accepted branch residuals <= 1e-8", bad_res == 0, bad_res))
    return out


def suite_spectrum(samples: int, seed: int) -> list:
    out = []
    rng = np.random.default_rng(seed)
    for d in (4, 6):
        worst = 0.0
        negs_ok = True
        zeros_ok = True
        for _ in range(max(samples // 100, 25)):
            mu = np.sort(rng.dirichlet(np.ones(d)))[::-1]
            worst = max(worst, spectrum.verify_against_direct(mu, d))
            summ = spectrum.predicted_spectrum(d, mu)
            zeros_ok &= summ.zero_count == d * (d + 1) // 2
            if np.all(mu > 0):
                negs_ok &= summ.negative_count() == 1
        out.append(_check(f"D={d} spectrum matches direct <= 1e-8", worst <= 1e-8, worst))
        out.append(_check(f"D={d} zero count = D(D+1)/2", zeros_ok))
        out.append(_check(f"D={d} exactly one negative eigenvalue", negs_ok))
    return out


def suite_surface(samples: int, seed: int) -> list:
    out = []
    reg = pure_state_region()
    nx = ny = 72
    g, coverage = build_gtilde(Measure.EOF, nx, ny, 51)
    out.append(
        _check(
            "gtilde coverage gaps <= 1%",
            coverage["fraction_undefined"] <= 0.01,
            coverage,
        )
    )
    mono = monotone_envelope(g, reg)
    delta = float(np.nanmax(np.abs(mono.values[g.mask] - g.values[g.mask])))
    out.append(_check("monotone pass is a no-op", delta <= 1e-9, delta))
    env = lower_convex_envelope(mono)
    dom = float(np.nanmin((g.values - env.values)[g.mask]))
    out.append(_check("envelope dominated by gtilde", dom >= -1e-9, dom))
    env2 = lower_convex_envelope(env)
    both = env.mask & env2.mask
    idem = float(np.nanmax(np.abs(env2.values[both] - env.values[both])))
    out.append(_check("envelope idempotent", idem <= 1e-9, idem))

    surf = build_bound_surface(Measure.EOF, nx, ny, 51)
    dmin = surf.provenance["min_forward_difference"]
    out.append(_check("surface monotone nondecreasing", dmin >= -1e-9, dmin))
    v00 = query_many(surf, np.array([0.0]), np.array([0.0]))[0]
    v11 = query_many(surf, np.array([1.5]), np.array([1.5]))[0]
    out.append(_check("surface corners (0, 2)", abs(v00) <= 1e-9 and abs(v11 - 2) <= 1e-6))

    rng = np.random.default_rng(seed)
    states = haar_random_pure_batch(4, 4, max(samples, 500), rng)
    mus = schmidt_coefficients_batch(states, 4, 4)
    qs = query_many(surf, measures.nhat_phi(mus), measures.pure_negativity(mus))
    slack = float(np.min(measures.eof_pure(mus) - qs))
    out.append(_check("surface below pure EOF within grid tolerance", slack >= -2e-2, slack))
    return out


_SUITE_FUNCS = {
    "linalg": suite_linalg,
    "measures": suite_measures,
    "bounds": suite_bounds,
    "region": suite_region,
    "surface": suite_surface,
    "spectrum": suite_spectrum,
}


def run_suite(name: str, samples: int = 10000, seed: int = 7) -> dict:
    """Run one named suite (or 'all'); returns the JSON-ready report."""
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}; choose from {SUITES}")
    names = list(_SUITE_FUNCS) if name == "all" else [name]
    checks = []
    for suite_name in names:
        for item in _SUITE_FUNCS[suite_name](samples, seed):
            item["suite"] = suite_name
            checks.append(item)
    return {
        "suite": name,
        "samples": samples,
        "seed": seed,
        "passed": all(c["passed"] for c in checks),
        "checks": checks,
    }
