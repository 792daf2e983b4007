"""Command-line interface.

Every report command writes columnar CSV (12 significant digits, fixed
column order) plus a rendered figure, and drops an atomically written
``manifest.json`` capturing command, parameters, seed, library version,
wall time and the output file list.  Exit codes: 0 success, 1 verification
failure or coverage warning, 2 usage error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from . import __version__, bounds, figures, measures, region, states, verify
from .bounds import Constraint, Measure
from .errors import CoverageError, EntboundsError, ParseError
from .measures import AngularMomentumBasis
from .surface import build_bound_surface, load_surface, query, save_surface

FMT = "%.12g"


def _fmt(v) -> str:
    return FMT % float(v)


def write_manifest(outdir, command, params, seed, outputs, t0) -> str:
    path = os.path.join(outdir, "manifest.json")
    doc = {
        "command": command,
        "parameters": params,
        "seed": seed,
        "library_version": __version__,
        "wall_time_s": round(time.time() - t0, 3),
        "outputs": sorted(os.path.basename(p) for p in outputs),
    }
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, path)
    return path


def _write_csv(path, header, rows) -> str:
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) if isinstance(v, (int, float, np.floating)) else str(v) for v in row))
            fh.write("\n")
    os.replace(tmp, path)
    return path


def _outdir(args, default_name) -> str:
    out = args.out or default_name
    os.makedirs(out, exist_ok=True)
    return out


def _load_basis(path) -> AngularMomentumBasis:
    with open(path) as fh:
        doc = json.load(fh)
    try:
        dim = int(doc["dim"])
        u = np.array([complex(re, im) for re, im in doc["unitary"]]).reshape(dim, dim)
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed basis file: {exc}") from exc
    return AngularMomentumBasis(dim, u)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_measures(args) -> int:
    with open(args.state_file) as fh:
        state = states.state_from_json(fh.read())
    basis = _load_basis(args.basis_file) if args.basis_file else None

    if isinstance(state, states.PureState):
        rho = state.density_matrix()
        dec = states.schmidt_decompose(state)
        mu = dec.coefficients
        report = {
            "n_t": measures.negativity(rho),
            "n_phi": _maybe_nphi(rho, basis),
            "mu": [float(v) for v in mu],
            "eof": measures.eof_pure(mu),
            "tangle": measures.tangle_pure(mu),
            "concurrence": measures.concurrence_pure(mu),
        }
        if len(mu) == 4:
            report["n_hat_phi"] = measures.nhat_phi(mu)
    else:
        report = {
            "n_t": measures.negativity(state),
            "n_phi": _maybe_nphi(state, basis),
        }
    if args.format == "csv":
        lines = ["quantity,value"]
        for key in sorted(report):
            val = report[key]
            if isinstance(val, list):
                val = ";".join(_fmt(v) for v in val)
            elif val is None:
                val = ""
            else:
                val = _fmt(val)
            lines.append(f"{key},{val}")
        text = "\n".join(lines)
        ext = "csv"
    else:
        text = json.dumps(report, indent=2, sort_keys=True)
        ext = "json"
    print(text)
    if args.out:
        t0 = time.time()
        out = _outdir(args, "entbounds_measures")
        path = os.path.join(out, f"measures.{ext}")
        with open(path, "w") as fh:
            fh.write(text + "\n")
        write_manifest(out, "measures", {"state_file": args.state_file}, None, [path], t0)
    return 0


def _maybe_nphi(rho, basis):
    if rho.dim_b % 2 != 0:
        return None  # flip map undefined in odd dimension
    return measures.phi_negativity(rho, basis)


def cmd_sample_gap(args) -> int:
    t0 = time.time()
    out = _outdir(args, "entbounds_gap")
    data = measures.gap_sample(args.samples, args.seed)
    diff = data["diff"]
    width = args.bin_width
    nbins = max(int(np.ceil(max(diff.max(), width) / width)), 1)
    edges = np.arange(nbins + 1) * width
    freq, _ = np.histogram(diff, bins=edges)
    csv_path = _write_csv(
        os.path.join(out, "gap_histogram.csv"),
        ["bin_left", "frequency"],
        [(edges[i], int(freq[i])) for i in range(nbins)],
    )
    summary = {
        "samples": args.samples,
        "seed": args.seed,
        "bin_width": width,
        "min_diff": float(diff.min()),
        "max_diff": float(diff.max()),
        "negative_count": int((diff < -1e-9).sum()),
    }
    sum_path = os.path.join(out, "gap_summary.json")
    with open(sum_path, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    outputs = [csv_path, sum_path]
    if not args.no_plot:
        outputs.append(
            figures.save_histogram(
                edges[:-1], freq, os.path.join(out, "gap_histogram.png"),
                xlabel="nhat_phi - n_phi",
                title=f"{args.samples} Haar samples (seed {args.seed})",
            )
        )
    write_manifest(
        out, "sample-gap",
        {"samples": args.samples, "bin_width": width},
        args.seed, outputs, t0,
    )
    print(json.dumps(summary, indent=2, sort_keys=True))
    return 0


def cmd_region(args) -> int:
    t0 = time.time()
    out = _outdir(args, "entbounds_region")
    xs, lo, up = region.boundary_table(args.resolution)
    csv_path = _write_csv(
        os.path.join(out, "region.csv"),
        ["n_hat_phi", "n_t_lower", "n_t_upper"],
        zip(xs, lo, up),
    )
    outputs = [csv_path]
    if not args.no_plot:
        outputs.append(
            figures.save_region_boundaries(xs, lo, up, os.path.join(out, "region.png"))
        )
    write_manifest(out, "region", {"resolution": args.resolution}, None, outputs, t0)
    print(f"wrote {csv_path}")
    return 0


def cmd_bound_single(args) -> int:
    t0 = time.time()
    out = _outdir(args, "entbounds_bound_single")
    measure = Measure(args.measure)
    constraint = Constraint(args.constraint)
    xs = np.linspace(0.0, 1.5, args.resolution)
    ys = bounds.bound_value(measure, constraint, xs)
    name = f"{measure.value}_{constraint.value}"
    csv_path = _write_csv(
        os.path.join(out, f"bound_{name}.csv"),
        [constraint.value, "bound"],
        zip(xs, ys),
    )
    outputs = [csv_path]
    if not args.no_plot:
        outputs.append(
            figures.save_curves(
                xs, {name: ys}, os.path.join(out, f"bound_{name}.png"),
                xlabel=constraint.value, ylabel=f"{measure.value} lower bound",
            )
        )
    write_manifest(
        out, "bound-single",
        {"measure": measure.value, "constraint": constraint.value,
         "resolution": args.resolution},
        None, outputs, t0,
    )
    print(f"wrote {csv_path}")
    return 0


def cmd_compare_regions(args) -> int:
    t0 = time.time()
    out = _outdir(args, "entbounds_compare")
    measure = Measure(args.measure)
    xs, ys, labels = bounds.comparison_grid(measure, args.resolution)
    rows = []
    for i in range(len(xs)):
        for j in range(len(ys)):
            rows.append((xs[i], ys[j], labels[i, j]))
    csv_path = _write_csv(
        os.path.join(out, f"compare_{measure.value}.csv"),
        ["n_hat_phi", "n_t", "better"],
        rows,
    )
    outputs = [csv_path]
    if not args.no_plot:
        outputs.append(
            figures.save_comparison_map(
                xs, ys, labels, os.path.join(out, f"compare_{measure.value}.png"),
                title=f"better single constraint for {measure.value}",
            )
        )
    write_manifest(
        out, "compare-regions",
        {"measure": measure.value, "resolution": args.resolution},
        None, outputs, t0,
    )
    print(f"wrote {csv_path}")
    return 0


def cmd_bound_double(args) -> int:
    t0 = time.time()
    out = _outdir(args, "entbounds_surface")
    measure = Measure(args.measure)
    try:
        nx, ny = (int(v) for v in args.grid.lower().split("x"))
    except ValueError:
        print(f"error: --grid must look like 150x150, got {args.grid!r}", file=sys.stderr)
        return 2
    surf = build_bound_surface(
        measure, nx=nx, ny=ny, mu4_steps=args.mu4_steps,
        threads=args.threads, seed=args.seed,
    )
    outputs = save_surface(surf, out)
    if not args.no_plot:
        outputs.append(
            figures.save_surface_figure(surf, os.path.join(out, "surface.png"))
        )
    # extend the surface manifest with the run record
    manifest = dict(surf.provenance)
    manifest.update(
        {
            "command": "bound-double",
            "parameters": {
                "measure": measure.value, "grid": f"{nx}x{ny}",
                "mu4_steps": args.mu4_steps, "threads": args.threads,
            },
            "wall_time_s": round(time.time() - t0, 3),
            "outputs": sorted(os.path.basename(p) for p in outputs),
        }
    )
    tmp = os.path.join(out, "manifest.json.tmp")
    with open(tmp, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, os.path.join(out, "manifest.json"))

    coverage = surf.provenance["coverage"]
    print(json.dumps({"out": out, "coverage": coverage}, indent=2, sort_keys=True))
    if coverage["undefined_cells"] > 0:
        print(
            f"warning: {coverage['undefined_cells']} in-region cells had no "
            "closed-form solution (filled from neighbours)", file=sys.stderr,
        )
        return 1
    return 0


def cmd_query(args) -> int:
    surf = load_surface(args.surface_dir)
    value = query(surf, (args.n_hat_phi, args.n_t))
    if args.format == "json":
        print(json.dumps({
            "measure": surf.measure.value,
            "n_hat_phi": args.n_hat_phi,
            "n_t": args.n_t,
            "value": value,
        }, sort_keys=True))
    else:
        print(_fmt(value))
    return 0


def cmd_spectrum(args) -> int:
    from . import spectrum as spec_mod

    if args.mu:
        mu = np.array([float(v) for v in args.mu.split(",")])
        if abs(mu.sum() - 1.0) > 1e-9:
            print("error: --mu must sum to 1", file=sys.stderr)
            return 2
        mu = np.sort(mu)[::-1]
    else:
        rng = np.random.default_rng(args.seed)
        mu = np.sort(rng.dirichlet(np.ones(args.dim)))[::-1]
    summ = spec_mod.predicted_spectrum(args.dim, mu)
    rho = measures.aligned_pure_state(mu).density_matrix()
    direct = np.sort(
        np.linalg.eigvalsh(measures.apply_phi_B(rho))
    )
    report = {
        "D": args.dim,
        "mu": [float(v) for v in mu],
        "predicted": {
            "zero_count": summ.zero_count,
            "pair_eigenvalues": sorted(float(v) for v in summ.pair_eigenvalues),
            "r_roots": [float(v) for v in summ.r_roots],
        },
        "direct": [float(v) for v in direct],
        "max_abs_diff": float(np.abs(direct - summ.all_eigenvalues()).max()),
    }
    text = json.dumps(report, indent=2, sort_keys=True)
    print(text)
    if args.out:
        t0 = time.time()
        out = _outdir(args, "entbounds_spectrum")
        path = os.path.join(out, "spectrum.json")
        with open(path, "w") as fh:
            fh.write(text + "\n")
        write_manifest(out, "spectrum", {"dim": args.dim}, args.seed, [path], t0)
    return 0


def cmd_verify(args) -> int:
    report = verify.run_suite(args.suite, samples=args.samples, seed=args.seed)
    print(json.dumps(report, indent=2, sort_keys=True))
    return 0 if report["passed"] else 1


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="entbounds",
        description="Entanglement measures and constrained bounds for 4xN states.",
    )
    p.add_argument("--version", action="version", version=f"entbounds {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("measures", help="evaluate measures of a state file")
    sp.add_argument("state_file")
    sp.add_argument("--basis-file", default=None)
    sp.add_argument("--format", choices=["json", "csv"], default="json")
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_measures)

    sp = sub.add_parser("sample-gap", help="histogram of nhat_phi - n_phi on Haar samples")
    sp.add_argument("--samples", type=int, default=100000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--bin-width", type=float, default=0.001)
    sp.add_argument("--out", default=None)
    sp.add_argument("--no-plot", action="store_true")
    sp.set_defaults(func=cmd_sample_gap)

    sp = sub.add_parser("region", help="pure-state region boundary curves")
    sp.add_argument("--resolution", type=int, default=512)
    sp.add_argument("--out", default=None)
    sp.add_argument("--no-plot", action="store_true")
    sp.set_defaults(func=cmd_region)

    sp = sub.add_parser("bound-single", help="singly-constrained bound curve")
    sp.add_argument("--measure", choices=[m.value for m in Measure], required=True)
    sp.add_argument("--constraint", choices=[c.value for c in Constraint], required=True)
    sp.add_argument("--resolution", type=int, default=1024)
    sp.add_argument("--out", default=None)
    sp.add_argument("--no-plot", action="store_true")
    sp.set_defaults(func=cmd_bound_single)

    sp = sub.add_parser("compare-regions", help="which constraint is better, per plane point")
    sp.add_argument("--measure", choices=[m.value for m in Measure], required=True)
    sp.add_argument("--resolution", type=int, default=256)
    sp.add_argument("--out", default=None)
    sp.add_argument("--no-plot", action="store_true")
    sp.set_defaults(func=cmd_compare_regions)

    sp = sub.add_parser("bound-double", help="build and persist a doubly-constrained surface")
    sp.add_argument("--measure", choices=[m.value for m in Measure], required=True)
    sp.add_argument("--grid", default="150x150")
    sp.add_argument("--mu4-steps", type=int, default=101)
    sp.add_argument("--threads", type=int, default=1)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--out", default=None)
    sp.add_argument("--no-plot", action="store_true")
    sp.set_defaults(func=cmd_bound_double)

    sp = sub.add_parser("query", help="interpolate a persisted surface")
    sp.add_argument("surface_dir")
    sp.add_argument("n_hat_phi", type=float)
    sp.add_argument("n_t", type=float)
    sp.add_argument("--format", choices=["plain", "json"], default="plain")
    sp.set_defaults(func=cmd_query)

    sp = sub.add_parser("spectrum", help="predicted vs direct aligned-state spectrum")
    sp.add_argument("--dim", type=int, default=4)
    sp.add_argument("--mu", default=None, help="comma-separated Schmidt coefficients")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_spectrum)

    sp = sub.add_parser("verify", help="run an invariant suite")
    sp.add_argument("--suite", choices=list(verify.SUITES), default="all")
    sp.add_argument("--samples", type=int, default=10000)
    sp.add_argument("--seed", type=int, default=7)
    sp.set_defaults(func=cmd_verify)

    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CoverageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        print(json.dumps(exc.report, indent=2, sort_keys=True), file=sys.stderr)
        return 1
    except (OSError, ParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except EntboundsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
