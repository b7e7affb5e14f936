"""Command line entry point: ``romsn {quad,solve,ensemble,oracle,convergence,benchmark}``.

Every command that writes a directory leaves ``config.ini`` (the fully
resolved configuration) and ``manifest.json`` next to its CSV files, and
re-running with that ``config.ini`` reproduces the CSVs byte for byte.
Floats are written as the shortest decimal that round-trips.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, kernels
from .analysis import (
    NeumannConfig,
    build_quadrature,
    convergence_study,
    neumann_phi_slab,
)
from .config import BENCHMARKS, RunConfig, emit_config, parse_config
from .ensemble import EnsembleConfig, default_jobs, run_ensemble
from .errors import ConfigError, ConvergenceError, InvalidParameter, NumericalFailure
from .problem import (
    MaterialField,
    ScatteringKernel,
    SlabBoundary,
    SlabProblem,
    XYBoundary,
    XYProblem,
    benchmark_center_source,
    benchmark_lattice,
    benchmark_slab_case,
    constant,
)
from .quadrature import partition_velocity, sample_rom
from .slab import source_iteration_slab
from .xy import XYSetup, circle_profile, relative_variation, source_iteration_xy, write_pgm

log = logging.getLogger("romsn")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


def fmt(value):
    """Shortest round-trip decimal of a float."""
    return repr(float(value))


# --------------------------------------------------------------------------
# Problems and references


def build_problem(cfg: RunConfig):
    name = cfg.benchmark
    if name.startswith("slab-case-"):
        return benchmark_slab_case(int(name[-1]), cfg.g)
    if name == "center-source":
        return benchmark_center_source(cfg.g)
    if name == "lattice":
        return benchmark_lattice(cfg.mask or None, cfg.g)
    material = MaterialField(constant(cfg.sigma_t), constant(cfg.sigma_s))
    kernel = ScatteringKernel(cfg.g)
    if cfg.geometry == "slab":
        bc = SlabBoundary(constant(cfg.inflow_left), constant(cfg.inflow_right))
        return SlabProblem(material, constant(cfg.source), bc, kernel, name="custom")
    bc = XYBoundary(constant(cfg.inflow_left), constant(cfg.inflow_right))
    return XYProblem(material, constant(cfg.source), bc, kernel, name="custom")


def default_reference(geometry):
    return "uniform:1280" if geometry == "slab" else "gauss:12"


def parse_reference_spec(text):
    kind, _, level = text.partition(":")
    if kind not in ("uniform", "gauss") or not level.isdigit():
        return None
    return kind, int(level)


def load_reference(cfg, problem):
    """Return ``(phi_ref, provenance)`` from ``cfg.reference`` (``kind:level`` or a CSV path)."""
    spec = cfg.reference or default_reference(problem.geometry)
    parsed = parse_reference_spec(spec)
    if parsed is not None:
        quad = build_quadrature(problem.geometry, *parsed)
        phi = _solve_phi(problem, quad, cfg)[0]
        return phi, {"kind": parsed[0], "level": parsed[1], "cells": cfg.cells}
    path = Path(spec)
    if not path.exists():
        raise ConfigError(f"reference {spec!r} is neither kind:level nor an existing file", "reference")
    return read_field(path, problem.geometry), {"file": str(path)}


def _solve_phi(problem, quad, cfg):
    if problem.geometry == "slab":
        psi, phi, rep = source_iteration_slab(
            problem, quad, cfg.cells, tol=cfg.tol, max_iters=cfg.max_iters, scheme=cfg.scheme
        )
    else:
        psi, phi, rep = source_iteration_xy(
            problem, quad, cfg.cells, cfg.ny or None, tol=cfg.tol, max_iters=cfg.max_iters
        )
    return phi, rep, psi


# --------------------------------------------------------------------------
# File formats


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) if isinstance(v, (float, np.floating)) else str(v) for v in row))
            fh.write("\n")


def write_field(path, phi, geometry, grid):
    """Slab: ``x,phi`` rows. X-Y: headerless heatmap, row 0 is the bottom edge."""
    if geometry == "slab":
        write_csv(path, ["x", "phi"], zip(grid.nodes, phi))
        return
    with open(path, "w") as fh:
        for row in phi:
            fh.write(",".join(fmt(v) for v in row) + "\n")


def read_field(path, geometry):
    text = Path(path).read_text().strip().splitlines()
    if geometry == "slab":
        return np.array([float(line.split(",")[1]) for line in text[1:]])
    return np.array([[float(v) for v in line.split(",")] for line in text])


def quadrature_rows(quad):
    if quad.geometry == "slab":
        for k, (mu, w) in enumerate(zip(quad.nodes, quad.weights)):
            yield [k, fmt(mu), "", "", "", fmt(w)]
    else:
        for k in range(len(quad)):
            yield [k, fmt(quad.c[k]), fmt(quad.s[k]), fmt(quad.zeta[k]), fmt(quad.theta[k]), fmt(quad.weights[k])]


def write_manifest(out, cfg, started, **extra):
    manifest = {
        "version": __version__,
        "backend": kernels.BACKEND,
        "seed": cfg.seed,
        "config": {k: getattr(cfg, k) for k in RunConfig.__dataclass_fields__},
        "wall_clock_seconds": time.perf_counter() - started,
    }
    manifest.update(extra)
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    (out / "config.ini").write_text(emit_config(cfg))


def _outdir(cfg):
    out = Path(cfg.dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


# --------------------------------------------------------------------------
# Commands


def cmd_quad(cfg, args):
    geometry = args.geometry or cfg.resolved_geometry
    if cfg.kind == "rom":
        part = partition_velocity(geometry, cfg.level, cfg.delta)
        quad = sample_rom(part, cfg.seed, args.sample).quadrature
    else:
        quad = build_quadrature(geometry, cfg.kind, cfg.level)
    header = ["index", "mu_or_c", "s", "zeta", "theta", "weight"]
    if args.output:
        write_csv(args.output, header, quadrature_rows(quad))
    else:
        print(",".join(header))
        for row in quadrature_rows(quad):
            print(",".join(str(v) for v in row))
    return EXIT_OK


def _solve_quadrature(cfg, problem, sample=0):
    if cfg.kind == "rom":
        part = partition_velocity(problem.geometry, cfg.level, cfg.delta)
        return sample_rom(part, cfg.seed, sample).quadrature
    return build_quadrature(problem.geometry, cfg.kind, cfg.level)


def cmd_solve(cfg, args):
    started = time.perf_counter()
    problem = build_problem(cfg)
    quad = _solve_quadrature(cfg, problem)
    out = _outdir(cfg)
    extra = {}
    if problem.geometry == "slab":
        psi, phi, rep = source_iteration_slab(
            problem, quad, cfg.cells, tol=cfg.tol, max_iters=cfg.max_iters, scheme=cfg.scheme
        )
        write_field(out / "phi.csv", phi, "slab", psi.grid)
        if cfg.psi:
            rows = ((x, mu, psi.values[l, i]) for l, mu in enumerate(quad.nodes) for i, x in enumerate(psi.grid.nodes))
            write_csv(out / "psi.csv", ["x", "mu", "psi"], rows)
    else:
        setup = XYSetup.build(problem, cfg.cells, cfg.ny or None)
        _, phi, rep = source_iteration_xy(
            problem, quad, tol=cfg.tol, max_iters=cfg.max_iters, setup=setup
        )
        _write_xy_outputs(out, cfg, phi, setup.grid, extra)
    write_manifest(
        out, cfg, started, iterations=rep.iterations, residual=rep.residual,
        negative_count=rep.negative_count, ordinates=len(quad), **extra,
    )
    print(f"{problem.name}: {rep.iterations} iterations, residual {rep.residual:.3e} -> {out}")
    return EXIT_OK


def _write_xy_outputs(out, cfg, phi, grid, extra, stem="phi"):
    write_field(out / f"{stem}.csv", phi, "xy", grid)
    if cfg.pgm:
        write_pgm(out / f"{stem}.pgm", phi)
    if cfg.profile:
        cx, cy, r, k = cfg.profile.split(",")
        angles, values = circle_profile(phi, grid, (float(cx), float(cy)), float(r), int(k))
        write_csv(out / "profile.csv", ["angle", "phi_interpolated"], zip(angles, values))
        extra["profile_relative_variation"] = relative_variation(values)


def cmd_ensemble(cfg, args):
    started = time.perf_counter()
    problem = build_problem(cfg)
    out = _outdir(cfg)
    phi_ref, provenance = load_reference(cfg, problem)
    jobs = cfg.jobs or default_jobs()
    ecfg = EnsembleConfig(
        cfg.level, cfg.samples, seed=cfg.seed, jobs=jobs, delta=cfg.delta,
        cells=cfg.cells, ny=cfg.ny or None, tol=cfg.tol, max_iters=cfg.max_iters,
    )
    result, metrics = run_ensemble(problem, ecfg, phi_ref)
    extra = {}
    if problem.geometry == "slab":
        grid = problem.grid(cfg.cells)
        write_field(out / "mean.csv", result.mean, "slab", grid)
    else:
        grid = problem.grid(cfg.cells, cfg.ny or None)
        _write_xy_outputs(out, cfg, result.mean, grid, extra, stem="mean")
    path = out / "metrics.csv"
    new = not path.exists()
    with open(path, "a") as fh:
        if new:
            fh.write("t,n,error,bias,mean_variance\n")
        fh.write(f"{metrics.samples},{cfg.level},{fmt(metrics.error)},{fmt(metrics.bias)},{fmt(metrics.mean_variance)}\n")
    write_manifest(
        out, cfg, started, reference=provenance, jobs=jobs,
        iterations_total=int(sum(result.iterations)), error=metrics.error, bias=metrics.bias, **extra,
    )
    print(f"t={metrics.samples} n={cfg.level}: error {metrics.error:.4e} bias {metrics.bias:.4e} -> {out}")
    return EXIT_OK


def cmd_oracle(cfg, args):
    started = time.perf_counter()
    problem = build_problem(cfg)
    if problem.geometry != "slab":
        raise ConfigError("the scattering-order oracle is only available for slab problems", "benchmark")
    ncfg = NeumannConfig(delta=args.delta, panels=args.panels, mu_order=args.mu_order)
    res = neumann_phi_slab(problem, ncfg)
    out = _outdir(cfg)
    grid = problem.grid(cfg.cells)
    write_field(out / "oracle.csv", res.at(grid.nodes), "slab", grid)
    if args.fine:
        write_csv(out / "oracle_fine.csv", ["x", "phi"], zip(res.x, res.phi))
    write_manifest(
        out, cfg, started, oracle={"delta": ncfg.delta, "panels": ncfg.panels, "mu_order": ncfg.mu_order,
                                   "terms": res.terms, "tail_bound": res.tail_bound},
    )
    print(f"oracle: {res.terms} terms, tail bound {res.tail_bound:.2e} -> {out}")
    return EXIT_OK


def cmd_convergence(cfg, args):
    started = time.perf_counter()
    problem = build_problem(cfg)
    levels = [int(v) for v in args.levels.split(",")]
    spec = cfg.reference or default_reference(problem.geometry)
    ref = parse_reference_spec(spec)
    if ref is None:
        path = Path(spec)
        if not path.exists():
            raise ConfigError(f"reference {spec!r} is neither kind:level nor an existing file", "reference")
        ref = read_field(path, problem.geometry)
    method = "rom" if cfg.kind == "rom" else "dom"
    study = convergence_study(
        problem, method, levels, ref, cells=cfg.cells,
        quadrature="uniform" if method == "rom" else cfg.kind,
        samples=cfg.samples, seed=cfg.seed, jobs=cfg.jobs or default_jobs(), tol=cfg.tol,
    )
    out = _outdir(cfg)
    fit = study.bias_fit if method == "rom" else study.error_fit
    rows = []
    for r in study.rows:
        rows.append([r.resolution, r.error, "" if r.bias is None else r.bias,
                     study.error_fit.slope, study.error_fit.endpoint_slope])
    write_csv(out / "convergence.csv", ["resolution", "error", "bias", "order_fit", "order_endpoint"], rows)
    summary = {"error_order_fit": study.error_fit.slope, "error_order_endpoint": study.error_fit.endpoint_slope}
    if study.bias_fit is not None:
        summary.update(bias_order_fit=study.bias_fit.slope, bias_order_endpoint=study.bias_fit.endpoint_slope)
    write_manifest(out, cfg, started, reference=study.reference, levels=levels, orders=summary)
    for r in study.rows:
        b = "" if r.bias is None else f" bias {r.bias:.4e}"
        print(f"level {r.level}: h {r.resolution:.4g} error {r.error:.4e}{b}")
    print(f"order (least squares) {study.error_fit.slope:.3f}, endpoint {study.error_fit.endpoint_slope:.3f}")
    if fit is not study.error_fit and fit is not None:
        print(f"bias order (least squares) {fit.slope:.3f}, endpoint {fit.endpoint_slope:.3f}")
    return EXIT_OK


BENCHMARK_PRESETS = {
    "slab-case-1": {"cells": 50, "kind": "uniform", "level": 80},
    "slab-case-2": {"cells": 50, "kind": "uniform", "level": 80},
    "slab-case-3": {"cells": 50, "kind": "uniform", "level": 80},
    "center-source": {"cells": 100, "kind": "uniform", "level": 2, "profile": "0.5,0.5,0.35,360"},
    "lattice": {"cells": 100, "kind": "uniform", "level": 1, "profile": "0.5,0.5,0.35,360"},
}


def cmd_benchmark(cfg, args):
    """Run a registered experiment with its usual settings; explicit flags still win."""
    if args.convergence:
        if args.levels is None:
            args.levels = "10,20,40,80" if cfg.resolved_geometry == "slab" else "2,3,4,5"
            if cfg.kind == "rom":
                args.levels = "2,4,8,16" if cfg.resolved_geometry == "slab" else "1,2,3"
        return cmd_convergence(cfg, args)
    if cfg.kind == "rom":
        return cmd_ensemble(cfg, args)
    return cmd_solve(cfg, args)


# --------------------------------------------------------------------------
# Argument parsing

_OVERRIDES = {
    "benchmark": str, "g": float, "mask": str, "geometry": str, "sigma_t": float, "sigma_s": float,
    "source": float, "grid": int, "ny": int, "quadrature": str, "level": int, "delta": float,
    "tol": float, "max_iters": int, "scheme": str, "samples": int, "seed": int, "jobs": int,
    "reference": str, "out": str, "profile_circle": str,
}
_RENAMES = {"grid": "cells", "quadrature": "kind", "out": "dir", "profile_circle": "profile"}


def _common(p):
    p.add_argument("--config", help="INI configuration file")
    p.add_argument("--benchmark", choices=BENCHMARKS)
    p.add_argument("--g", type=float, help="anisotropy parameter of 1 + g cos(xi)")
    p.add_argument("--mask", help="lattice source mask file")
    p.add_argument("--geometry", choices=("slab", "xy"), help="geometry of a custom problem")
    p.add_argument("--sigma-t", dest="sigma_t", type=float)
    p.add_argument("--sigma-s", dest="sigma_s", type=float)
    p.add_argument("--source", type=float)
    p.add_argument("--grid", type=int, help="spatial cells (slab I, or nx for X-Y)")
    p.add_argument("--ny", type=int, help="X-Y cells along y (default: same as --grid)")
    p.add_argument("--quadrature", choices=("uniform", "gauss", "rom"))
    p.add_argument("--level", "--N", "--M", type=int, help="quadrature level (M, N or n)")
    p.add_argument("--delta", type=float)
    p.add_argument("--tol", type=float)
    p.add_argument("--max-iters", dest="max_iters", type=int)
    p.add_argument("--scheme", choices=("characteristic", "diamond"))
    p.add_argument("--samples", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--jobs", type=int, help="worker threads (default: ROMSN_JOBS or 1)")
    p.add_argument("--reference", help="kind:level (e.g. gauss:12) or a field CSV")
    p.add_argument("--out", help="output directory")
    p.add_argument("--profile-circle", dest="profile_circle", help="cx,cy,r,K circle profile")
    p.add_argument("--psi", action="store_true", default=None, help="also write angular fluxes")
    p.add_argument("-v", "--verbose", action="store_true")


def make_parser():
    parser = argparse.ArgumentParser(prog="romsn", description="Discrete and random ordinate transport solver.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("quad", help="dump a quadrature set as CSV")
    _common(p)
    p.add_argument("--sample", type=int, default=0, help="sample index for rom sets")
    p.add_argument("--output", "-o", help="CSV path (default: stdout)")
    p.set_defaults(func=cmd_quad)

    p = sub.add_parser("solve", help="deterministic solve of one problem")
    _common(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("ensemble", help="random ordinate ensemble with error and bias")
    _common(p)
    p.add_argument("--cells", dest="level", type=int, help="velocity cells n (slab) or N (X-Y)")
    p.set_defaults(func=cmd_ensemble, quadrature_forced="rom")

    p = sub.add_parser("oracle", help="scattering-order series for an isotropic slab problem")
    _common(p)
    p.add_argument("--panels", type=int, default=4096)
    p.add_argument("--mu-order", dest="mu_order", type=int, default=128)
    p.add_argument("--fine", action="store_true", help="also write the fine-grid series")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("convergence", help="error/bias orders over a list of levels")
    _common(p)
    p.add_argument("--levels", required=True, help="comma separated levels")
    p.set_defaults(func=cmd_convergence)

    p = sub.add_parser("benchmark", help="run a registered experiment")
    _common(p)
    p.add_argument("name", choices=[b for b in BENCHMARKS if b != "custom"])
    p.add_argument("--rom", action="store_true", help="random ordinates instead of a deterministic set")
    p.add_argument("--convergence", action="store_true", help="run the order study")
    p.add_argument("--levels", help="comma separated levels for --convergence")
    p.set_defaults(func=cmd_benchmark)
    return parser


def resolve_config(args):
    overrides = {}
    for key in _OVERRIDES:
        value = getattr(args, key, None)
        if value is not None:
            overrides[_RENAMES.get(key, key)] = value
    if getattr(args, "psi", None):
        overrides["psi"] = True
    if args.command == "quad" and args.geometry and not args.benchmark:
        overrides["benchmark"] = "custom"
    if getattr(args, "quadrature_forced", None):
        overrides["kind"] = "rom"
    if args.command == "benchmark":
        preset = dict(BENCHMARK_PRESETS[args.name])
        if args.rom:
            preset["kind"] = "rom"
            if args.name.startswith("slab"):
                preset["level"] = 16
        # presets sit between the file and explicit flags
        for key, value in preset.items():
            overrides.setdefault(key, value)
        overrides["benchmark"] = args.name
    return parse_config(args.config, overrides)


def main(argv=None):
    parser = make_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    if args.command == "oracle" and args.delta is None:
        # the oracle works on a truncated direction set by default
        args.delta = NeumannConfig.delta
    try:
        cfg = resolve_config(args)
        return args.func(cfg, args)
    except ConfigError as exc:
        print(f"romsn: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InvalidParameter as exc:
        print(f"romsn: invalid parameter: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConvergenceError, NumericalFailure) as exc:
        print(f"romsn: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
