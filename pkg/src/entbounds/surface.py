"""Doubly-constrained bound surfaces over the (n_phi, n_T) plane.

Pipeline: grid-minimize the pure-state measure subject to both constraints
(``build_gtilde``), make the result nondecreasing where required
(``monotone_envelope`` -- a verified no-op for the three measures here), take
the lower convex envelope over the hull of the pure-state region
(``lower_convex_envelope``), and extend to the full [0, 3/2]^2 square with
zero slope across the region boundaries (``extend_monotone``).
"""

from __future__ import annotations

import csv
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.spatial import ConvexHull, Delaunay, QhullError

from . import __version__ as _pkg_version
from .bounds import Measure
from .errors import CoverageError, DomainError, ParseError
from .measures import MeasurePoint, concurrence_pure, eof_pure, tangle_pure
from .region import (
    RegionBoundary,
    branch_mu_margin,
    constraint_residuals,
    pure_state_region,
)

RESIDUAL_TOL = 1e-8
_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0

MEASURE_EVALUATORS = {
    Measure.EOF: eof_pure,
    Measure.TANGLE: tangle_pure,
    Measure.CONCURRENCE: concurrence_pure,
}


# ---------------------------------------------------------------------------
# grid types
# ---------------------------------------------------------------------------

@dataclass
class GridFunction2D:
    """Function sampled on a uniform rectangular grid with a validity mask.

    ``values[i, j]`` belongs to node (xs[i], ys[j]); undefined nodes hold NaN
    and ``mask`` False.
    """

    xs: np.ndarray
    ys: np.ndarray
    values: np.ndarray
    mask: np.ndarray

    @property
    def nx(self) -> int:
        return len(self.xs)

    @property
    def ny(self) -> int:
        return len(self.ys)

    def copy(self) -> "GridFunction2D":
        return GridFunction2D(
            self.xs.copy(), self.ys.copy(), self.values.copy(), self.mask.copy()
        )


@dataclass
class BoundSurface:
    """Fully defined bound surface plus its build provenance."""

    measure: Measure
    grid: GridFunction2D
    provenance: dict


def grid_axes(nx: int, ny: int):
    return np.linspace(0.0, 1.5, nx), np.linspace(0.0, 1.5, ny)


def region_mask(xs, ys, region: RegionBoundary) -> np.ndarray:
    x = np.asarray(xs)[:, None]
    y = np.asarray(ys)[None, :]
    lo = np.asarray(region.lower(x))
    up = np.asarray(region.upper(x))
    return (y >= lo - 1e-12) & (y <= up + 1e-12)


# ---------------------------------------------------------------------------
# constrained grid minimization
# ---------------------------------------------------------------------------

def _branch_values(fn, xc, yc, m4, sign):
    """Measure values at branch candidates; +inf where infeasible."""
    mu, margin = branch_mu_margin(yc, xc, m4, sign)
    vals = np.where(margin >= 0.0, fn(np.clip(mu, 0.0, 1.0)), np.inf)
    return vals


def _golden_min_vec(fn, xc, yc, sign, a, b, iters=72):
    """Lockstep golden-section minimization of the branch measure over mu4.

    All arguments are equal-length arrays except ``sign``; infeasible
    evaluations return +inf, which steers the bracket into the feasible
    window (and onto its edge when the minimum sits there).
    """
    a = a.copy()
    b = b.copy()
    for _ in range(iters):
        c = b - _GOLDEN * (b - a)
        d = a + _GOLDEN * (b - a)
        fc = _branch_values(fn, xc, yc, c, sign)
        fd = _branch_values(fn, xc, yc, d, sign)
        left = fc < fd
        b = np.where(left, d, b)
        a = np.where(left, a, c)
    mid = 0.5 * (a + b)
    return mid, _branch_values(fn, xc, yc, mid, sign)


def _margin_at(xc, yc, m4, sign):
    _, margin = branch_mu_margin(yc, xc, m4, sign)
    return margin


# a branch whose best scanned margin is below this is treated as genuinely
# infeasible rather than as a window narrower than the scan step
_RESCUE_MARGIN = -0.05
# cells whose margin peaks this close to zero sit on the region boundary to
# float precision; their candidate is accepted (the measures are symmetric in
# mu, so the value error is of the same tiny order, on the safe side of a
# lower bound)
_BOUNDARY_SLACK = 1e-6


def _rescue_branch(fn, xc, yc, sign, a, b, iters=72):
    """Lockstep recovery of feasible mu4 windows missed by the scan.

    ``a`` and ``b`` bracket the margin maximum of each cell (both scan points
    infeasible).  Maximizes the margin; where the peak is feasible, bisects
    the window edges and minimizes the measure inside.  Returns
    (found, mu4, value) arrays.
    """
    lo, hi = a.copy(), b.copy()
    for _ in range(iters):
        c = hi - _GOLDEN * (hi - lo)
        d = lo + _GOLDEN * (hi - lo)
        worse = _margin_at(xc, yc, c, sign) > _margin_at(xc, yc, d, sign)
        hi = np.where(worse, d, hi)
        lo = np.where(worse, lo, c)
    peak = 0.5 * (lo + hi)
    peak_margin = _margin_at(xc, yc, peak, sign)
    found = peak_margin >= 0.0
    boundary_exact = (~found) & (peak_margin >= -_BOUNDARY_SLACK)

    left = _bisect_margin_root(xc, yc, sign, a, peak, iters)
    right = _bisect_margin_root(xc, yc, sign, b, peak, iters)
    glo, ghi = left.copy(), right.copy()
    for _ in range(iters):
        c = ghi - _GOLDEN * (ghi - glo)
        d = glo + _GOLDEN * (ghi - glo)
        fc = _branch_values(fn, xc, yc, c, sign)
        fd = _branch_values(fn, xc, yc, d, sign)
        worse = fc < fd
        ghi = np.where(worse, d, ghi)
        glo = np.where(worse, glo, c)
    cands_t = np.stack([left, right, 0.5 * (glo + ghi)])
    cands_v = np.stack([_branch_values(fn, xc, yc, t, sign) for t in cands_t])
    best = np.argmin(cands_v, axis=0)
    cols = np.arange(len(xc))
    t_best = cands_t[best, cols]
    v_best = cands_v[best, cols]
    found &= np.isfinite(v_best)

    if boundary_exact.any():
        mu, _ = branch_mu_margin(yc[boundary_exact], xc[boundary_exact], peak[boundary_exact], sign)
        t_best[boundary_exact] = peak[boundary_exact]
        v_best[boundary_exact] = fn(np.clip(mu, 0.0, 1.0))
        found |= boundary_exact & np.isfinite(v_best)
    return found, t_best, v_best


def _bisect_margin_root(xc, yc, sign, infeasible, feasible, iters=72):
    """Lockstep bisection of the margin sign change between two mu4 arrays."""
    lo, hi = infeasible.copy(), feasible.copy()
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        neg = _margin_at(xc, yc, mid, sign) < 0.0
        lo = np.where(neg, mid, lo)
        hi = np.where(neg, hi, mid)
    return hi


def _gtilde_cells(measure_value: str, xc: np.ndarray, yc: np.ndarray, mu4_steps: int):
    """Constrained minimum of the measure at each (xc, yc) cell.

    Returns (values, stats) where undefined cells hold NaN.  ``stats`` counts
    rescued cells, residual rejections, and cells that were feasible only
    before the descending-order requirement (ordering losses).
    """
    fn = MEASURE_EVALUATORS[Measure(measure_value)]
    n = len(xc)
    m4_grid = np.linspace(0.0, 0.25, mu4_steps)

    vals = np.full((n, mu4_steps, 2), np.inf)
    margins = np.full((n, mu4_steps, 2), -np.inf)
    relaxed_any = np.zeros(n, dtype=bool)
    for bi, sign in enumerate((1.0, -1.0)):
        mu, margin = branch_mu_margin(
            yc[:, None], xc[:, None], m4_grid[None, :], sign
        )
        margins[:, :, bi] = margin
        feas = margin >= 0.0
        v = fn(np.clip(mu, 0.0, 1.0))
        vals[:, :, bi] = np.where(feas, v, np.inf)
        # feasibility ignoring only the two ordering conditions
        r = (
            np.sqrt(2.0 * yc[:, None] + 1.0)
            - np.sqrt(np.clip(mu[..., 0], 0.0, None))
            - np.sqrt(np.clip(mu[..., 3], 0.0, None))
        )
        relaxed = np.minimum.reduce(
            [mu[..., 0], r, 2.0 * (mu[..., 1] + mu[..., 2]) - r * r]
        )
        relaxed_any |= (relaxed >= 0.0).any(axis=1)

    # candidate pool: every scanned local minimum, plus every feasible run
    # refined by bisecting its true window edges and minimizing inside
    cand_cell, cand_m4, cand_val, cand_sign = [], [], [], []
    for bi, sign in enumerate((1.0, -1.0)):
        v = vals[:, :, bi]
        padded = np.pad(v, ((0, 0), (1, 1)), constant_values=np.inf)
        is_lm = np.isfinite(v) & (v <= padded[:, :-2]) & (v <= padded[:, 2:])
        cells, ks = np.nonzero(is_lm)
        if len(cells):
            cand_cell.append(cells)
            cand_m4.append(m4_grid[ks])
            cand_val.append(v[cells, ks])
            cand_sign.append(np.full(len(cells), sign))

        feas = margins[:, :, bi] >= 0.0
        fpad = np.pad(feas, ((0, 0), (1, 1)), constant_values=False)
        sc, sk = np.nonzero(feas & ~fpad[:, :-2])  # run starts
        ec, ek = np.nonzero(feas & ~fpad[:, 2:])   # run ends, paired in order
        if len(sc) == 0:
            continue
        sx, sy = xc[sc], yc[sc]
        left = m4_grid[sk].astype(float)
        inner = sk > 0
        if inner.any():
            left[inner] = _bisect_margin_root(
                sx[inner], sy[inner], sign, m4_grid[sk[inner] - 1], left[inner]
            )
        right = m4_grid[ek].astype(float)
        inner = ek < mu4_steps - 1
        if inner.any():
            right[inner] = _bisect_margin_root(
                sx[inner], sy[inner], sign, m4_grid[ek[inner] + 1], right[inner]
            )
        t_ref, v_ref = _golden_min_vec(fn, sx, sy, sign, left, right)
        for t_cand, v_cand in (
            (t_ref, v_ref),
            (left, _branch_values(fn, sx, sy, left, sign)),
            (right, _branch_values(fn, sx, sy, right, sign)),
        ):
            good = np.isfinite(v_cand)
            if good.any():
                cand_cell.append(sc[good])
                cand_m4.append(t_cand[good])
                cand_val.append(v_cand[good])
                cand_sign.append(np.full(int(good.sum()), sign))

    stats = {"rescued": 0, "residual_rejected": 0}

    # rescue every (cell, branch) whose scan saw no feasible point but whose
    # margin came close: its window may be narrower than the scan step
    for bi, sign in enumerate((1.0, -1.0)):
        m = margins[:, :, bi]
        empty = ~(m >= 0.0).any(axis=1)
        near = empty & (m.max(axis=1) > _RESCUE_MARGIN)
        cells = np.flatnonzero(near)
        if len(cells) == 0:
            continue
        i0 = np.argmax(m[cells], axis=1)
        a = m4_grid[np.maximum(i0 - 1, 0)]
        b = m4_grid[np.minimum(i0 + 1, mu4_steps - 1)]
        found, t_res, v_res = _rescue_branch(fn, xc[cells], yc[cells], sign, a, b)
        keep = cells[found]
        if len(keep):
            cand_cell.append(keep)
            cand_m4.append(t_res[found])
            cand_val.append(v_res[found])
            cand_sign.append(np.full(len(keep), sign))

    best_val = np.full(n, np.nan)
    best_m4 = np.full(n, np.nan)
    best_sign = np.zeros(n)
    if cand_cell:
        cc = np.concatenate(cand_cell)
        cm = np.concatenate(cand_m4)
        cv = np.concatenate(cand_val)
        cs = np.concatenate(cand_sign)
        order = np.lexsort((cv, cc))
        cc, cm, cv, cs = cc[order], cm[order], cv[order], cs[order]
        first = np.ones(len(cc), dtype=bool)
        first[1:] = cc[1:] != cc[:-1]
        best_val[cc[first]] = cv[first]
        best_m4[cc[first]] = cm[first]
        best_sign[cc[first]] = cs[first]
    scan_empty = ~(margins >= 0.0).any(axis=(1, 2))
    stats["rescued"] = int((scan_empty & np.isfinite(best_val)).sum())

    # mandatory residual re-verification of every accepted cell
    ok = np.isfinite(best_val)
    idx = np.flatnonzero(ok)
    if len(idx):
        mu, _ = branch_mu_margin(yc[idx], xc[idx], best_m4[idx], 1.0)
        mu2, _ = branch_mu_margin(yc[idx], xc[idx], best_m4[idx], -1.0)
        pick = best_sign[idx] > 0
        mu = np.where(pick[:, None], mu, mu2)
        r_t, r_phi, r_norm = constraint_residuals(mu, yc[idx], xc[idx])
        bad = np.maximum.reduce([r_t, r_phi, r_norm]) > RESIDUAL_TOL
        if bad.any():
            stats["residual_rejected"] = int(bad.sum())
            best_val[idx[bad]] = np.nan

    stats["ordering_only_losses"] = int(
        (relaxed_any & ~np.isfinite(best_val)).sum()
    )
    return best_val, stats


def build_gtilde(
    measure: Measure,
    nx: int = 150,
    ny: int = 150,
    mu4_steps: int = 101,
    threads: int = 1,
):
    """Constrained-minimum grid over the pure-state region.

    Returns (GridFunction2D, coverage report).  Cells inside the region where
    no branch is feasible stay undefined and are counted, not raised; they are
    data for the caller.
    """
    if mu4_steps < 2:
        raise DomainError("mu4_steps must be >= 2")
    if nx < 2 or ny < 2:
        raise DomainError("grid must be at least 2x2")
    xs, ys = grid_axes(nx, ny)
    region = pure_state_region()
    mask = region_mask(xs, ys, region)

    ii, jj = np.nonzero(mask)
    xc, yc = xs[ii], ys[jj]

    if threads > 1 and len(xc) > 0:
        chunks = np.array_split(np.arange(len(xc)), threads)
        args = [
            (measure.value, xc[c], yc[c], mu4_steps) for c in chunks if len(c)
        ]
        with ProcessPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(_gtilde_worker, args))
        cell_vals = np.concatenate([p[0] for p in parts])
        stats_list = [p[1] for p in parts]
        stats = {
            k: sum(s[k] for s in stats_list) for k in stats_list[0]
        }
    else:
        cell_vals, stats = _gtilde_cells(measure.value, xc, yc, mu4_steps)

    values = np.full((nx, ny), np.nan)
    values[ii, jj] = cell_vals
    defined = np.isfinite(values)

    undefined = int(mask.sum() - defined.sum())
    coverage = {
        "in_region_cells": int(mask.sum()),
        "defined_cells": int(defined.sum()),
        "undefined_cells": undefined,
        "fraction_undefined": undefined / max(int(mask.sum()), 1),
        "rescued_cells": stats["rescued"],
        "residual_rejected": stats["residual_rejected"],
        "ordering_only_losses": stats["ordering_only_losses"],
        "filled_cells": 0,
    }

    # fill isolated gaps from nearest defined neighbours so the envelope sees
    # a connected domain; filled cells are reported, not hidden
    if undefined > 0:
        values, filled = _fill_gaps(values, mask)
        coverage["filled_cells"] = int(filled)
        defined = np.isfinite(values)
    coverage["undefined_after_fill"] = int(mask.sum() - defined.sum())

    return GridFunction2D(xs, ys, values, defined & mask), coverage


def _gtilde_worker(args):
    return _gtilde_cells(*args)


def _fill_gaps(values: np.ndarray, mask: np.ndarray):
    """Dilate defined values into undefined in-region cells (4-neighbour)."""
    vals = values.copy()
    filled = 0
    for _ in range(vals.shape[0] + vals.shape[1]):
        hole = mask & ~np.isfinite(vals)
        if not hole.any():
            break
        padded = np.pad(vals, 1, constant_values=np.nan)
        neigh = np.stack(
            [padded[:-2, 1:-1], padded[2:, 1:-1], padded[1:-1, :-2], padded[1:-1, 2:]]
        )
        cand = np.min(np.where(np.isfinite(neigh), neigh, np.inf), axis=0)
        takeable = hole & np.isfinite(cand)
        vals[takeable] = cand[takeable]
        filled += int(takeable.sum())
    return vals, filled


# ---------------------------------------------------------------------------
# monotone envelope (within-domain boundary replacement)
# ---------------------------------------------------------------------------

def monotone_envelope(g: GridFunction2D, region: RegionBoundary) -> GridFunction2D:
    """Replace values on the wrong side of each monotone boundary.

    Along n_T the constrained minimum is automatically nondecreasing above
    the lower boundary; defined cells below it take the boundary value.
    Along n_phi the same holds right of the upper boundary; defined cells
    left of it take the boundary value.  For the pure-state region the
    domain never extends past either anchor, so this is a no-op there.
    """
    out = g.copy()
    # pass 1: n_T direction, anchored at the lower boundary
    for i in range(out.nx):
        anchor_y = float(region.lower(out.xs[i]))
        cols = np.flatnonzero(out.mask[i, :])
        if len(cols) == 0:
            continue
        at_or_above = cols[out.ys[cols] >= anchor_y - 1e-12]
        if len(at_or_above) == 0:
            continue
        ja = at_or_above[0]
        below = cols[cols < ja]
        out.values[i, below] = out.values[i, ja]
    # pass 2: n_phi direction, anchored at the upper boundary
    for j in range(out.ny):
        anchor_x = region.upper_inverse(float(out.ys[j]))
        rows = np.flatnonzero(out.mask[:, j])
        if len(rows) == 0:
            continue
        at_or_right = rows[out.xs[rows] >= anchor_x - 1e-12]
        if len(at_or_right) == 0:
            continue
        ia = at_or_right[0]
        left = rows[rows < ia]
        out.values[left, j] = out.values[ia, j]
    return out


# ---------------------------------------------------------------------------
# lower convex envelope
# ---------------------------------------------------------------------------

def lower_convex_envelope(g: GridFunction2D) -> GridFunction2D:
    """Largest convex function below the defined samples, evaluated on the
    convex hull of the defined cells.

    Defined cells are lifted to 3-d points, the hull faces with downward
    normals form the piecewise-linear envelope, and each grid node inside
    the 2-d hull takes the maximum over those face planes (exact for
    piecewise-linear data).  Coplanar inputs short-circuit to the fitted
    plane.
    """
    ii, jj = np.nonzero(g.mask)
    if len(ii) < 3:
        return g.copy()
    px, py, pv = g.xs[ii], g.ys[jj], g.values[ii, jj]
    pts = np.column_stack([px, py, pv])

    plane, resid = _fit_plane(pts)
    nodes_x = np.repeat(g.xs, g.ny).reshape(g.nx, g.ny)
    nodes_y = np.tile(g.ys, g.nx).reshape(g.nx, g.ny)
    inhull = _in_hull_mask(px, py, nodes_x, nodes_y)

    values = np.full((g.nx, g.ny), np.nan)
    if resid <= 1e-9:
        values[inhull] = (
            plane[0] * nodes_x[inhull] + plane[1] * nodes_y[inhull] + plane[2]
        )
        return GridFunction2D(g.xs.copy(), g.ys.copy(), values, inhull)

    try:
        hull = ConvexHull(pts)
    except QhullError:
        hull = ConvexHull(pts, qhull_options="QJ")
    eq = hull.equations
    lower = eq[:, 2] < -1e-12
    a, b, c, d = eq[lower, 0], eq[lower, 1], eq[lower, 2], eq[lower, 3]

    qx, qy = nodes_x[inhull], nodes_y[inhull]
    env = np.full(len(qx), -np.inf)
    step = max(1, int(4e6 // max(len(a), 1)))
    for k in range(0, len(qx), step):
        sl = slice(k, k + step)
        z = -(a[None, :] * qx[sl, None] + b[None, :] * qy[sl, None] + d[None, :]) / c[None, :]
        env[sl] = z.max(axis=1)
    values[inhull] = env
    return GridFunction2D(g.xs.copy(), g.ys.copy(), values, inhull)


def _fit_plane(pts: np.ndarray):
    a = np.column_stack([pts[:, 0], pts[:, 1], np.ones(len(pts))])
    coef, *_ = np.linalg.lstsq(a, pts[:, 2], rcond=None)
    resid = float(np.abs(a @ coef - pts[:, 2]).max())
    return coef, resid


def _in_hull_mask(px, py, nodes_x, nodes_y) -> np.ndarray:
    try:
        tri = Delaunay(np.column_stack([px, py]))
        flat = np.column_stack([nodes_x.ravel(), nodes_y.ravel()])
        ok = tri.find_simplex(flat) >= 0
        return ok.reshape(nodes_x.shape)
    except QhullError:
        # degenerate (e.g. collinear) point sets: keep the input cells only
        mask = np.zeros(nodes_x.shape, dtype=bool)
        keys = {(round(float(x), 12), round(float(y), 12)) for x, y in zip(px, py)}
        it = np.nditer([nodes_x, nodes_y], flags=["multi_index"])
        for x, y in it:
            if (round(float(x), 12), round(float(y), 12)) in keys:
                mask[it.multi_index] = True
        return mask


# ---------------------------------------------------------------------------
# monotone extension to the full square
# ---------------------------------------------------------------------------

def extend_monotone(g: GridFunction2D, region: RegionBoundary) -> GridFunction2D:
    """Extend to all of [0, 3/2]^2 with zero slope across the region boundary.

    Below the lower boundary the value is constant along n_T (copied from the
    lower-boundary cell at the same n_phi); left of / above the upper
    boundary it is constant along n_phi (copied from the upper-boundary cell
    at the same n_T), overwriting any hull values between the boundary and
    the hull edge.  Cells reachable by both rules take the larger candidate,
    which preserves monotonicity.
    """
    out = g.copy()
    rmask = region_mask(out.xs, out.ys, region) & g.mask
    if not rmask.any():
        raise DomainError("input grid has no defined cells inside the region")

    written_below = np.zeros((out.nx, out.ny), dtype=bool)
    for i in range(out.nx):
        cols = np.flatnonzero(rmask[i, :])
        if len(cols) == 0:
            continue
        jlo = cols[0]
        out.values[i, :jlo] = out.values[i, jlo]
        written_below[i, :jlo] = True

    for j in range(out.ny):
        rows = np.flatnonzero(rmask[:, j])
        if len(rows) == 0:
            continue
        ilo = rows[0]
        v = out.values[ilo, j]
        seg = slice(0, ilo)
        prev = out.values[seg, j]
        both = written_below[seg, j]
        out.values[seg, j] = np.where(both, np.maximum(prev, v), v)

    # inside the region: keep the input values (already in `out`)
    if not np.isfinite(out.values).all():
        # grid columns so close to x = 0 that the region sliver between the
        # boundaries falls between two y nodes have no anchor for either
        # rule; copy the nearest defined neighbour (the monotonicity check
        # downstream guards the result)
        filled, _ = _fill_gaps(out.values, np.ones_like(out.mask))
        out.values = filled
    out.mask = np.ones((out.nx, out.ny), dtype=bool)
    return out


# ---------------------------------------------------------------------------
# assembled surfaces
# ---------------------------------------------------------------------------

def build_bound_surface(
    measure: Measure,
    nx: int = 150,
    ny: int = 150,
    mu4_steps: int = 101,
    threads: int = 1,
    seed: int | None = None,
) -> BoundSurface:
    """Full pipeline producing the doubly-constrained bound surface."""
    t0 = time.time()
    region = pure_state_region()
    gtilde, coverage = build_gtilde(measure, nx, ny, mu4_steps, threads)
    if coverage["fraction_undefined"] > 0.01:
        raise CoverageError(
            f"{coverage['undefined_cells']} of {coverage['in_region_cells']} "
            "in-region cells undefined (> 1%)",
            coverage,
        )

    mono = monotone_envelope(gtilde, region)
    mono_delta = float(
        np.nanmax(np.abs(mono.values[gtilde.mask] - gtilde.values[gtilde.mask]))
    )
    env = lower_convex_envelope(mono)

    gap = gtilde.values - env.values
    gap_defined = gtilde.mask & np.isfinite(gap)
    if gap_defined.any():
        flat = np.where(gap_defined, gap, -np.inf)
        imax = np.unravel_index(int(np.argmax(flat)), flat.shape)
        gap_max = float(flat[imax])
        gap_at = [float(gtilde.xs[imax[0]]), float(gtilde.ys[imax[1]])]
        gap_min = float(np.min(gap[gap_defined]))
    else:
        gap_max, gap_at, gap_min = 0.0, [0.0, 0.0], 0.0

    full = extend_monotone(env, region)
    dmin = min(
        float(np.min(np.diff(full.values, axis=0))),
        float(np.min(np.diff(full.values, axis=1))),
    )

    provenance = {
        "format": "entbounds-surface/1",
        "measure": measure.value,
        "nx": nx,
        "ny": ny,
        "mu4_steps": mu4_steps,
        "threads": threads,
        "seed": seed,
        "library_version": _pkg_version,
        "built_at": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        "build_seconds": round(time.time() - t0, 3),
        "coverage": coverage,
        "monotone_pass_max_change": mono_delta,
        "envelope_gap_max": gap_max,
        "envelope_gap_at": gap_at,
        "envelope_dominance_min": gap_min,
        "min_forward_difference": dmin,
    }
    return BoundSurface(measure=measure, grid=full, provenance=provenance)


def query(surface: BoundSurface, point) -> float:
    """Bilinear interpolation of the surface; exact at grid nodes."""
    if isinstance(point, MeasurePoint):
        x, y = point.n_hat_phi, point.n_t
    else:
        x, y = float(point[0]), float(point[1])
    if not (-1e-9 <= x <= 1.5 + 1e-9 and -1e-9 <= y <= 1.5 + 1e-9):
        raise DomainError(f"query point ({x}, {y}) outside [0, 3/2]^2")
    g = surface.grid
    return float(_bilinear(g, np.array([x]), np.array([y]))[0])


def query_many(surface: BoundSurface, x, y) -> np.ndarray:
    """Vectorized ``query`` over coordinate arrays."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(x < -1e-9) or np.any(x > 1.5 + 1e-9) or np.any(y < -1e-9) or np.any(y > 1.5 + 1e-9):
        raise DomainError("query points outside [0, 3/2]^2")
    return _bilinear(surface.grid, x, y)


def _bilinear(g: GridFunction2D, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    hx = (g.nx - 1) / 1.5
    hy = (g.ny - 1) / 1.5
    fx = np.clip(x, 0.0, 1.5) * hx
    fy = np.clip(y, 0.0, 1.5) * hy
    i0 = np.minimum(fx.astype(int), g.nx - 2)
    j0 = np.minimum(fy.astype(int), g.ny - 2)
    tx = fx - i0
    ty = fy - j0
    v = g.values
    return (
        v[i0, j0] * (1 - tx) * (1 - ty)
        + v[i0 + 1, j0] * tx * (1 - ty)
        + v[i0, j0 + 1] * (1 - tx) * ty
        + v[i0 + 1, j0 + 1] * tx * ty
    )


def diagonal_consistency(surface: BoundSurface, samples: int = 301) -> float:
    """Max |surface(t, t) - EOF n_T-bound(t)| along the diagonal.

    Isotropic states sit on the diagonal and saturate the singly-constrained
    EOF bound, so the doubly-constrained surface must match it there up to
    grid resolution.
    """
    from .bounds import eof_bound_nt

    if surface.measure is not Measure.EOF:
        raise DomainError("diagonal consistency is defined for the EOF surface")
    ts = np.linspace(0.0, 1.5, samples)
    vals = query_many(surface, ts, ts)
    return float(np.abs(vals - eof_bound_nt(ts)).max())


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------

def save_surface(surface: BoundSurface, outdir: str) -> list:
    """Persist as ``surface.csv`` + ``manifest.json``; returns written paths."""
    os.makedirs(outdir, exist_ok=True)
    g = surface.grid
    csv_path = os.path.join(outdir, "surface.csv")
    tmp = csv_path + ".tmp"
    with open(tmp, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n_hat_phi", "n_t", "value"])
        for i in range(g.nx):
            for j in range(g.ny):
                w.writerow(
                    [
                        _fmt(g.xs[i]),
                        _fmt(g.ys[j]),
                        _fmt(g.values[i, j]),
                    ]
                )
    os.replace(tmp, csv_path)

    man_path = os.path.join(outdir, "manifest.json")
    tmp = man_path + ".tmp"
    with open(tmp, "w") as fh:
        json.dump(surface.provenance, fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, man_path)
    return [csv_path, man_path]


def load_surface(indir: str) -> BoundSurface:
    """Load a persisted surface, validating the manifest and the
    monotonicity invariant."""
    man_path = os.path.join(indir, "manifest.json")
    csv_path = os.path.join(indir, "surface.csv")
    try:
        with open(man_path) as fh:
            manifest = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot read manifest: {exc}") from exc
    for key in ("measure", "nx", "ny", "format"):
        if key not in manifest:
            raise ParseError(f"manifest missing key {key!r}")
    if manifest["format"] != "entbounds-surface/1":
        raise ParseError(f"unknown surface format {manifest['format']!r}")
    measure = Measure(manifest["measure"])
    nx, ny = int(manifest["nx"]), int(manifest["ny"])

    values = np.full((nx, ny), np.nan)
    with open(csv_path) as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["n_hat_phi", "n_t", "value"]:
            raise ParseError(f"unexpected CSV header {header}")
        count = 0
        for row in reader:
            i, j = divmod(count, ny)
            if i >= nx:
                raise ParseError("surface.csv has more rows than nx*ny")
            values[i, j] = float(row[2])
            count += 1
    if count != nx * ny:
        raise ParseError(f"surface.csv has {count} rows, expected {nx * ny}")
    if not np.isfinite(values).all():
        raise ParseError("surface.csv contains non-finite values")
    dmin = min(
        float(np.min(np.diff(values, axis=0))),
        float(np.min(np.diff(values, axis=1))),
    )
    if dmin < -1e-9:
        raise ParseError(f"loaded surface violates monotonicity: min diff {dmin}")

    xs, ys = grid_axes(nx, ny)
    grid = GridFunction2D(xs, ys, values, np.ones((nx, ny), dtype=bool))
    return BoundSurface(measure=measure, grid=grid, provenance=manifest)


def _fmt(v: float) -> str:
    return "%.12g" % v
