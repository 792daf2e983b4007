"""Surface pipeline: grid minimization, monotone pass, convex envelope,
extension, query, persistence."""

import numpy as np
import pytest

from entbounds.bounds import (
    Measure,
    conc_bound_nt,
    conc_bound_phi,
    eof_bound_nt,
    eof_bound_phi,
    tangle_bound_nt,
    tangle_bound_phi,
    tangle_tilde_nt,
)
from entbounds.errors import DomainError, ParseError
from entbounds.measures import concurrence_pure, eof_pure, nhat_phi, pure_negativity, tangle_pure
from entbounds.region import RegionBoundary, pure_state_region
from entbounds.states import haar_random_pure_batch, schmidt_coefficients_batch
from entbounds.surface import (
    GridFunction2D,
    build_bound_surface,
    build_gtilde,
    diagonal_consistency,
    extend_monotone,
    load_surface,
    lower_convex_envelope,
    monotone_envelope,
    query,
    query_many,
    region_mask,
    save_surface,
)

NX = NY = 100
MU4_STEPS = 75
REGION = pure_state_region()


@pytest.fixture(scope="module")
def gtilde_eof():
    return build_gtilde(Measure.EOF, NX, NY, MU4_STEPS)


@pytest.fixture(scope="module")
def surface_eof():
    return build_bound_surface(Measure.EOF, NX, NY, MU4_STEPS)


def full_grid(xs, ys, values):
    return GridFunction2D(
        np.asarray(xs, float),
        np.asarray(ys, float),
        np.asarray(values, float),
        np.ones((len(xs), len(ys)), dtype=bool),
    )


class TestBuildGtilde:
    def test_coverage_complete(self, gtilde_eof):
        _, cov = gtilde_eof
        assert cov["undefined_cells"] == 0
        assert cov["fraction_undefined"] == 0.0
        assert cov["ordering_only_losses"] == 0

    def test_origin_and_corner(self, gtilde_eof):
        g, _ = gtilde_eof
        assert g.values[0, 0] == pytest.approx(0.0, abs=1e-12)
        assert g.values[-1, -1] == pytest.approx(2.0, abs=1e-9)

    def test_corner_values_other_measures(self):
        for measure, want in ((Measure.TANGLE, 1.5), (Measure.CONCURRENCE, np.sqrt(1.5))):
            g, cov = build_gtilde(measure, 24, 24, 31)
            assert cov["undefined_cells"] == 0
            assert g.values[-1, -1] == pytest.approx(want, abs=1e-9)

    def test_lower_boundary_matches_phi_bound(self, gtilde_eof):
        g, _ = gtilde_eof
        rm = region_mask(g.xs, g.ys, REGION)
        errs = []
        for i in range(g.nx):
            cols = np.flatnonzero(rm[i, :])
            if len(cols):
                errs.append(abs(g.values[i, cols[0]] - eof_bound_phi(g.xs[i])))
        assert max(errs) <= 2e-2

    def test_discretely_monotone(self, gtilde_eof):
        g, _ = gtilde_eof
        both_x = g.mask[1:, :] & g.mask[:-1, :]
        both_y = g.mask[:, 1:] & g.mask[:, :-1]
        dx = np.where(both_x, g.values[1:, :] - g.values[:-1, :], np.nan)
        dy = np.where(both_y, g.values[:, 1:] - g.values[:, :-1], np.nan)
        assert np.nanmin(dx) >= -1e-9
        assert np.nanmin(dy) >= -1e-9

    def test_grid_validation(self):
        with pytest.raises(DomainError):
            build_gtilde(Measure.EOF, 1, 10, 11)
        with pytest.raises(DomainError):
            build_gtilde(Measure.EOF, 10, 10, 1)

    def test_threads_reproduce_serial(self):
        serial, _ = build_gtilde(Measure.EOF, 36, 36, 31, threads=1)
        parallel, _ = build_gtilde(Measure.EOF, 36, 36, 31, threads=2)
        assert np.array_equal(serial.mask, parallel.mask)
        assert np.allclose(
            serial.values[serial.mask], parallel.values[parallel.mask], atol=0, rtol=0
        )


class TestMonotoneEnvelope:
    def test_fixed_point_on_real_minimum(self, gtilde_eof):
        g, _ = gtilde_eof
        out = monotone_envelope(g, REGION)
        delta = np.abs(out.values[g.mask] - g.values[g.mask]).max()
        assert delta <= 1e-9

    def test_synthetic_dip_replaced_by_boundary_value(self):
        xs = np.linspace(0.0, 1.5, 11)
        ys = np.linspace(0.0, 1.5, 11)
        vals = np.empty((11, 11))
        for j, y in enumerate(ys):
            vals[:, j] = y if y >= 0.6 else 1.2 - y  # dips toward the anchor
        g = full_grid(xs, ys, vals)
        region = RegionBoundary(
            lower=lambda x: np.asarray(x) * 0 + 0.6,
            upper=lambda x: np.asarray(x) * 0 + 10.0,
        )
        out = monotone_envelope(g, region)
        anchor_j = int(np.searchsorted(ys, 0.6))
        assert np.allclose(out.values[:, :anchor_j], ys[anchor_j])
        assert np.allclose(out.values[:, anchor_j:], vals[:, anchor_j:])


class TestLowerConvexEnvelope:
    def test_affine_unchanged(self):
        xs = np.linspace(0.0, 1.5, 12)
        ys = np.linspace(0.0, 1.5, 12)
        vals = 0.3 * xs[:, None] + 0.7 * ys[None, :] + 0.1
        env = lower_convex_envelope(full_grid(xs, ys, vals))
        assert np.abs(env.values[env.mask] - vals[env.mask]).max() <= 1e-9

    def test_1d_slice_reproduces_convexified_tangle_bound(self):
        ys = np.linspace(0.0, 1.5, 1000)
        xs = np.array([0.0, 1.5])
        vals = np.vstack([tangle_tilde_nt(ys), tangle_tilde_nt(ys)])
        env = lower_convex_envelope(full_grid(xs, ys, vals))
        assert np.abs(env.values[0] - tangle_bound_nt(ys)).max() <= 1e-3

    def test_dominance_and_idempotence(self, gtilde_eof):
        g, _ = gtilde_eof
        env = lower_convex_envelope(g)
        assert np.nanmin((g.values - env.values)[g.mask]) >= -1e-9
        env2 = lower_convex_envelope(env)
        both = env.mask & env2.mask
        assert np.abs(env2.values[both] - env.values[both]).max() <= 1e-9

    def test_monotone_input_gives_monotone_envelope(self):
        rng = np.random.default_rng(123)
        xs = np.linspace(0.0, 1.5, 20)
        ys = np.linspace(0.0, 1.5, 20)
        for _ in range(20):
            v = np.cumsum(np.cumsum(rng.random((20, 20)), axis=0), axis=1)
            v /= v.max()
            env = lower_convex_envelope(full_grid(xs, ys, v))
            vals = env.values
            assert np.nanmin(np.diff(vals, axis=0)) >= -1e-9
            assert np.nanmin(np.diff(vals, axis=1)) >= -1e-9

    def test_envelope_convex_along_grid_directions(self, gtilde_eof):
        # directional second differences are the discrete curvature test that
        # is exact for samples of a convex function (the 2x2 cross-difference
        # Hessian is not sign-definite on piecewise-linear data)
        g, _ = gtilde_eof
        env = lower_convex_envelope(monotone_envelope(g, REGION))
        v, mk = env.values, env.mask
        inner = np.zeros_like(mk)
        inner[1:-1, 1:-1] = mk[1:-1, 1:-1]
        for di in (-1, 0, 1):
            for dj in (-1, 0, 1):
                inner[1:-1, 1:-1] &= mk[1 + di : NX - 1 + di, 1 + dj : NY - 1 + dj]
        m = inner[1:-1, 1:-1]
        for d2 in (
            v[2:, 1:-1] - 2 * v[1:-1, 1:-1] + v[:-2, 1:-1],
            v[1:-1, 2:] - 2 * v[1:-1, 1:-1] + v[1:-1, :-2],
            v[2:, 2:] - 2 * v[1:-1, 1:-1] + v[:-2, :-2],
            v[2:, :-2] - 2 * v[1:-1, 1:-1] + v[:-2, 2:],
        ):
            assert float(np.min(d2[m])) >= -1e-9


def test_gtilde_hessian_negative_only_in_upper_right_corner():
    """The constrained minimum is non-convex in exactly one region, near the
    maximally entangled corner: strongly negative discrete-Hessian
    eigenvalues form a single connected cluster there.

    The -0.12 threshold separates the genuine O(0.3) negative region from
    sub-0.11 speckle noise (per-cell refinement error of order 1e-6 is
    amplified by 1/h^2 in the Hessian estimate).
    """
    from scipy import ndimage

    g, coverage = build_gtilde(Measure.EOF, 150, 150, 101)
    assert coverage["undefined_cells"] == 0  # full coverage at the default grid
    v, mk = g.values, g.mask
    nx, ny = v.shape
    h = g.xs[1] - g.xs[0]
    inner = np.zeros_like(mk)
    inner[1:-1, 1:-1] = mk[1:-1, 1:-1]
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            inner[1:-1, 1:-1] &= mk[1 + di : nx - 1 + di, 1 + dj : ny - 1 + dj]
    fxx = (v[2:, 1:-1] - 2 * v[1:-1, 1:-1] + v[:-2, 1:-1]) / h**2
    fyy = (v[1:-1, 2:] - 2 * v[1:-1, 1:-1] + v[1:-1, :-2]) / h**2
    fxy = (v[2:, 2:] - v[2:, :-2] - v[:-2, 2:] + v[:-2, :-2]) / (4 * h * h)
    tr, det = fxx + fyy, fxx * fyy - fxy * fxy
    mineig = np.where(
        inner[1:-1, 1:-1], tr / 2 - np.sqrt(np.clip(tr * tr / 4 - det, 0, None)), np.nan
    )
    neg = np.isfinite(mineig) & (mineig < -0.12)
    assert neg.sum() > 0
    assert np.nanmin(mineig) < -0.2
    idx = np.argwhere(neg)
    assert g.xs[idx[:, 0] + 1].min() >= 1.3
    assert g.ys[idx[:, 1] + 1].min() >= 1.2
    _, ncomp = ndimage.label(neg, structure=np.ones((3, 3), dtype=int))
    assert ncomp == 1


class TestExtendMonotone:
    def test_constancy_rules(self, surface_eof):
        g = surface_eof.grid
        rm = region_mask(g.xs, g.ys, REGION)
        # below the lower boundary: constant along n_T
        i = int(np.argmin(np.abs(g.xs - 1.2)))
        jlo = np.flatnonzero(rm[i, :])[0]
        assert np.allclose(np.diff(g.values[i, : jlo + 1]), 0.0)
        # left of the upper boundary: constant along n_phi
        j = int(np.argmin(np.abs(g.ys - 1.2)))
        ilo = np.flatnonzero(rm[:, j])[0]
        assert np.allclose(np.diff(g.values[: ilo + 1, j]), 0.0)

    def test_monotone_everywhere(self, surface_eof):
        v = surface_eof.grid.values
        assert float(np.min(np.diff(v, axis=0))) >= -1e-9
        assert float(np.min(np.diff(v, axis=1))) >= -1e-9

    def test_seam_derivative_jump_small_on_middle_band(self, surface_eof):
        g = surface_eof.grid
        rm = region_mask(g.xs, g.ys, REGION)
        h = g.xs[1] - g.xs[0]
        jumps = []
        for j in range(g.ny):
            if not 0.15 <= g.ys[j] <= 1.2:
                continue
            rows = np.flatnonzero(rm[:, j])
            if len(rows) < 4 or rows[0] == 0:
                continue
            ilo = rows[0]
            slope_in = (g.values[ilo + 1, j] - g.values[ilo, j]) / h
            slope_out = (g.values[ilo, j] - g.values[ilo - 1, j]) / h
            jumps.append(abs(slope_in - slope_out))
        # typical interior slope is ~1.3 (range 2 over width 1.5)
        assert max(jumps) <= 0.15

    def test_requires_region_cells(self):
        xs = np.linspace(0.0, 1.5, 8)
        g = GridFunction2D(xs, xs, np.full((8, 8), np.nan), np.zeros((8, 8), bool))
        with pytest.raises(DomainError):
            extend_monotone(g, REGION)


class TestBoundSurface:
    def test_corners(self, surface_eof):
        assert query(surface_eof, (0.0, 0.0)) == pytest.approx(0.0, abs=1e-9)
        assert query(surface_eof, (1.5, 1.5)) == pytest.approx(2.0, abs=1e-6)

    def test_upper_boundary_matches_nt_bound(self, surface_eof):
        g = surface_eof.grid
        rm = region_mask(g.xs, g.ys, REGION)
        errs = []
        for j in range(g.ny):
            rows = np.flatnonzero(rm[:, j])
            if len(rows):
                errs.append(abs(g.values[rows[0], j] - eof_bound_nt(g.ys[j])))
        assert max(errs) <= 2e-2

    def test_diagonal_consistency(self, surface_eof):
        assert diagonal_consistency(surface_eof) <= 2e-2

    def test_diagonal_requires_eof(self):
        surf = build_bound_surface(Measure.TANGLE, 24, 24, 31)
        with pytest.raises(DomainError):
            diagonal_consistency(surf)

    def test_dominates_single_bounds(self, surface_eof):
        g = surface_eof.grid
        phi_b = eof_bound_phi(g.xs)[:, None]
        nt_b = eof_bound_nt(g.ys)[None, :]
        assert float(np.min(g.values - np.maximum(phi_b, nt_b))) >= -2e-2

    def test_valid_on_haar_samples(self, surface_eof):
        rng = np.random.default_rng(200)
        mus = schmidt_coefficients_batch(haar_random_pure_batch(4, 4, 2000, rng), 4, 4)
        qs = query_many(surface_eof, nhat_phi(mus), pure_negativity(mus))
        assert float(np.min(eof_pure(mus) - qs)) >= -2e-2

    def test_envelope_gap_recorded(self, surface_eof):
        p = surface_eof.provenance
        assert 0.0 < p["envelope_gap_max"] < 5e-2
        assert p["envelope_dominance_min"] >= -1e-9
        gx, gy = p["envelope_gap_at"]
        assert gx >= 1.0 and gy >= 1.0  # upper-right corner

    def test_provenance_fields(self, surface_eof):
        p = surface_eof.provenance
        for key in (
            "measure", "nx", "ny", "mu4_steps", "library_version", "built_at",
            "coverage", "monotone_pass_max_change", "min_forward_difference",
        ):
            assert key in p
        assert p["monotone_pass_max_change"] <= 1e-9
        assert p["min_forward_difference"] >= -1e-9


class TestQuery:
    def test_exact_at_nodes(self, surface_eof):
        g = surface_eof.grid
        for i, j in ((3, 5), (40, 77), (99, 0)):
            assert query(surface_eof, (g.xs[i], g.ys[j])) == pytest.approx(
                g.values[i, j], abs=1e-12
            )

    def test_midpoint_is_mean_along_axis(self, surface_eof):
        g = surface_eof.grid
        i, j = 30, 40
        mid = 0.5 * (g.xs[i] + g.xs[i + 1])
        want = 0.5 * (g.values[i, j] + g.values[i + 1, j])
        assert query(surface_eof, (mid, g.ys[j])) == pytest.approx(want, abs=1e-12)

    def test_domain_error(self, surface_eof):
        with pytest.raises(DomainError):
            query(surface_eof, (1.6, 0.0))


class TestPersistence:
    def test_roundtrip(self, surface_eof, tmp_path):
        outdir = tmp_path / "surf"
        paths = save_surface(surface_eof, str(outdir))
        assert sorted(p.split("/")[-1] for p in paths) == ["manifest.json", "surface.csv"]
        again = load_surface(str(outdir))
        assert again.measure is Measure.EOF
        assert np.allclose(again.grid.values, surface_eof.grid.values, atol=1e-11)

    def test_rebuild_writes_identical_csv(self, tmp_path):
        a = build_bound_surface(Measure.TANGLE, 20, 20, 21)
        b = build_bound_surface(Measure.TANGLE, 20, 20, 21)
        save_surface(a, str(tmp_path / "a"))
        save_surface(b, str(tmp_path / "b"))
        csv_a = (tmp_path / "a" / "surface.csv").read_bytes()
        csv_b = (tmp_path / "b" / "surface.csv").read_bytes()
        assert csv_a == csv_b

    def test_load_validates(self, surface_eof, tmp_path):
        outdir = tmp_path / "surf"
        save_surface(surface_eof, str(outdir))
        manifest = (outdir / "manifest.json").read_text()
        (outdir / "manifest.json").write_text(manifest.replace('"eof"', '"bogus"'))
        with pytest.raises((ParseError, ValueError)):
            load_surface(str(outdir))

    def test_load_rejects_truncated_csv(self, surface_eof, tmp_path):
        outdir = tmp_path / "surf"
        save_surface(surface_eof, str(outdir))
        lines = (outdir / "surface.csv").read_text().splitlines()
        (outdir / "surface.csv").write_text("\n".join(lines[:50]) + "\n")
        with pytest.raises(ParseError):
            load_surface(str(outdir))

    def test_load_rechecks_monotonicity(self, surface_eof, tmp_path):
        outdir = tmp_path / "surf"
        save_surface(surface_eof, str(outdir))
        lines = (outdir / "surface.csv").read_text().splitlines()
        parts = lines[-1].split(",")
        parts[2] = "-1"  # corner dip breaks nondecreasingness
        lines[-1] = ",".join(parts)
        (outdir / "surface.csv").write_text("\n".join(lines) + "\n")
        with pytest.raises(ParseError, match="monotonicity"):
            load_surface(str(outdir))


def test_gtilde_pointwise_never_exceeds_sampled_states():
    """Binning-free minimization oracle: evaluated at each Haar sample's own
    constraint coordinates, the constrained minimum must be defined (the
    sample itself is feasible there) and cannot exceed the sample's measure.
    A violation would mean the branch enumeration missed a feasible window."""
    from entbounds.surface import _gtilde_cells

    rng = np.random.default_rng(12345)
    mus = schmidt_coefficients_batch(haar_random_pure_batch(4, 4, 20000, rng), 4, 4)
    x, y = nhat_phi(mus), pure_negativity(mus)
    for name, f in (("eof", eof_pure), ("tangle", tangle_pure)):
        vals, _ = _gtilde_cells(name, x, y, 101)
        assert np.isfinite(vals).all()
        assert float(np.min(f(mus) - vals)) >= -1e-9


def test_rectangular_grid():
    surf = build_bound_surface(Measure.EOF, 20, 28, 21)
    g = surf.grid
    assert g.values.shape == (20, 28)
    assert query(surf, (0.0, 0.0)) == pytest.approx(0.0, abs=1e-9)
    assert query(surf, (1.5, 1.5)) == pytest.approx(2.0, abs=1e-5)
    i, j = 7, 13
    assert query(surf, (g.xs[i], g.ys[j])) == pytest.approx(g.values[i, j], abs=1e-12)
    assert surf.provenance["min_forward_difference"] >= -1e-9


def test_coverage_error_when_too_many_gaps(monkeypatch):
    import entbounds.surface as surface_mod
    from entbounds.errors import CoverageError

    real = surface_mod.build_gtilde

    def poor_coverage(*args, **kwargs):
        g, cov = real(*args, **kwargs)
        cov = dict(cov, undefined_cells=cov["in_region_cells"] // 2,
                   fraction_undefined=0.5)
        return g, cov

    monkeypatch.setattr(surface_mod, "build_gtilde", poor_coverage)
    with pytest.raises(CoverageError) as exc:
        surface_mod.build_bound_surface(Measure.EOF, 20, 20, 11)
    assert exc.value.report["fraction_undefined"] == 0.5


@pytest.fixture(scope="module")
def surfaces():
    return {
        m: build_bound_surface(m, 80, 80, 61)
        for m in (Measure.TANGLE, Measure.CONCURRENCE)
    }


class TestOtherMeasures:
    def test_corners(self, surfaces):
        assert query(surfaces[Measure.TANGLE], (1.5, 1.5)) == pytest.approx(1.5, abs=1e-6)
        assert query(surfaces[Measure.CONCURRENCE], (1.5, 1.5)) == pytest.approx(
            np.sqrt(1.5), abs=1e-6
        )

    def test_tangle_upper_boundary(self, surfaces):
        g = surfaces[Measure.TANGLE].grid
        rm = region_mask(g.xs, g.ys, REGION)
        errs = []
        for j in range(g.ny):
            rows = np.flatnonzero(rm[:, j])
            if len(rows):
                errs.append(abs(g.values[rows[0], j] - tangle_bound_nt(g.ys[j])))
        assert max(errs) <= 2e-2

    def test_lower_boundary_matches_phi_bounds(self, surfaces):
        for measure, bound in (
            (Measure.TANGLE, tangle_bound_phi),
            (Measure.CONCURRENCE, conc_bound_phi),
        ):
            g = surfaces[measure].grid
            rm = region_mask(g.xs, g.ys, REGION)
            errs = []
            for i in range(g.nx):
                cols = np.flatnonzero(rm[i, :])
                if len(cols):
                    errs.append(abs(g.values[i, cols[0]] - bound(g.xs[i])))
            assert max(errs) <= 2e-2, measure

    def test_concurrence_upper_boundary_sandwich(self, surfaces):
        # the 1-d convexified bound sqrt(2/3) n_T is built from chords that
        # leave the pure-state region in the plane, so the surface cannot
        # descend to it on the boundary; it must sit between that bound and
        # the non-convexified constrained minimum sqrt(tangle-tilde)
        g = surfaces[Measure.CONCURRENCE].grid
        rm = region_mask(g.xs, g.ys, REGION)
        lo_slack, hi_slack = [], []
        for j in range(g.ny):
            rows = np.flatnonzero(rm[:, j])
            if len(rows):
                v = g.values[rows[0], j]
                lo_slack.append(v - conc_bound_nt(g.ys[j]))
                hi_slack.append(np.sqrt(tangle_tilde_nt(g.ys[j])) - v)
        assert min(lo_slack) >= -1e-9
        assert min(hi_slack) >= -2e-2

    def test_validity_on_haar_samples(self, surfaces):
        rng = np.random.default_rng(201)
        mus = schmidt_coefficients_batch(haar_random_pure_batch(4, 4, 2000, rng), 4, 4)
        x, y = nhat_phi(mus), pure_negativity(mus)
        qs = query_many(surfaces[Measure.TANGLE], x, y)
        assert float(np.min(tangle_pure(mus) - qs)) >= -2e-2
        qs = query_many(surfaces[Measure.CONCURRENCE], x, y)
        assert float(np.min(concurrence_pure(mus) - qs)) >= -2e-2

    def test_dominates_single_bounds(self, surfaces):
        g = surfaces[Measure.TANGLE].grid
        want = np.maximum(tangle_bound_phi(g.xs)[:, None], tangle_bound_nt(g.ys)[None, :])
        assert float(np.min(g.values - want)) >= -2e-2
        g = surfaces[Measure.CONCURRENCE].grid
        want = np.maximum(conc_bound_phi(g.xs)[:, None], conc_bound_nt(g.ys)[None, :])
        assert float(np.min(g.values - want)) >= -2e-2
