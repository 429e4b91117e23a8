"""Command-line entry point: ``heuncap <command> [options]``."""

from __future__ import annotations

import argparse
import logging
import shlex
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import analysis as an
from . import report
from .config import ConfigError, RunConfig, dump_config, load_config
from .dynamics import VectorFieldParams
from .engine import (
    AbsorptionMode,
    run_sink_invariance,
    run_trajectory_proof,
    sample_box,
    shadow_check,
    tiny_box,
    trajectory_box,
)

EXIT_OK = 0
EXIT_PROOF_FAILED = 1
EXIT_USAGE = 2

log = logging.getLogger("heuncap")


def _global_options(parser: argparse.ArgumentParser, suppress: bool) -> None:
    # subparsers share these flags; SUPPRESS keeps a value given before the
    # subcommand from being reset by the subparser's default
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    parser.add_argument("--config", type=Path, default=d(None), help="key = value settings file")
    parser.add_argument("--out", type=Path, default=d(Path(".")), help="output directory")
    parser.add_argument("--mode", choices=[m.value for m in AbsorptionMode], default=d(None),
                        help="absorption test (default from config: paper_faithful)")
    parser.add_argument("--no-snap", action="store_true", default=d(False),
                        help="disable snap-to-axis")
    parser.add_argument("--seed", type=int, default=d(0), help="seed for sampled checks")
    parser.add_argument("--threads", type=int, default=d(1), help="worker threads")
    parser.add_argument("-v", "--verbose", action="store_true", default=d(False))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="heuncap",
        description="Interval proof and exploration tools for the Heun map of a stiff planar system.",
    )
    _global_options(parser, suppress=False)
    shared = argparse.ArgumentParser(add_help=False)
    _global_options(shared, suppress=True)
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True

    p = sub.add_parser("prove", parents=[shared], help="run the sink and trajectory proofs")
    p.add_argument("--tiny", action="store_true",
                   help="prove only a 1e-6 box around (1,1) instead of both runs")
    p.add_argument("--shadow", type=int, default=0, metavar="N",
                   help="also follow N sampled orbits through the trajectory proof")

    p = sub.add_parser("basin", parents=[shared], help="rasterize the basin of the sink")
    p.add_argument("--nx", type=int, help="cells along x1")
    p.add_argument("--ny", type=int, help="cells along x2")

    p = sub.add_parser("phase", parents=[shared], help="orbit of a point in the plane")
    p.add_argument("--x0", type=float, nargs=2, default=(1.0, 1.0), metavar=("X1", "X2"))
    p.add_argument("-n", type=int, default=100)

    p = sub.add_parser("cobweb", parents=[shared], help="cobweb data for the axis map")
    p.add_argument("--x0", type=float, default=None, help="start (default: critical point)")
    p.add_argument("-n", type=int, default=40)

    p = sub.add_parser("bifurcation", parents=[shared], help="scan the stiffness parameter")
    p.add_argument("--lo", type=float)
    p.add_argument("--hi", type=float)
    p.add_argument("--steps", type=int)

    p = sub.add_parser("stability", parents=[shared], help="tabulate R(z) and |R(z)| = 1")
    p.add_argument("-n", type=int, default=81)

    sub.add_parser("sink", parents=[shared], help="print the attracting cycle of the axis map")
    return parser


def _engine(cfg: RunConfig, args):
    eng = cfg.engine
    if args.mode:
        eng = eng.replace(absorption_mode=AbsorptionMode(args.mode))
    if args.no_snap:
        eng = eng.replace(snap_enabled=False)
    return eng


def _cmd_prove(cfg, args, manifest):
    eng = _engine(cfg, args)
    results = []
    if args.tiny:
        results.append(run_trajectory_proof(eng, tiny_box(), label="Tiny box around $(1,1)$",
                                            threads=args.threads))
    else:
        results += run_sink_invariance(eng, threads=args.threads)
        results.append(run_trajectory_proof(eng, threads=args.threads))
    for r in results:
        status = "ok  " if r.success else "FAIL"
        print(f"{status} {r.label}: {r.steps} steps, peak {r.peak_active} boxes; {r.reason}")
    manifest.write_output(args.out, "cap_table_static.tex", "latex",
                          report.emit_latex_table(results))
    manifest.write_output(args.out, "proof_history.csv", "csv", report.history_csv(results))
    ok = all(r.success for r in results)
    if args.shadow:
        b0 = tiny_box() if args.tiny else trajectory_box()
        sh = shadow_check(b0, eng, sample_box(b0, args.shadow, args.seed), "shadow",
                          threads=args.threads)
        print(f"shadowing: {sh.samples} orbits, {sh.violations} violations, "
              f"{sh.retired} absorbed")
        ok = ok and sh.violations == 0
    return EXIT_OK if ok else EXIT_PROOF_FAILED


def _cmd_basin(cfg, args, manifest):
    spec = cfg.analysis.basin_spec()
    if args.nx or args.ny:
        spec = replace(spec, resolution=(args.nx or spec.resolution[0], args.ny or spec.resolution[1]))
    params = cfg.engine.params
    grid = an.basin_raster(spec, params, an.find_sink_orbit(params))
    manifest.write_output(args.out, "basin.pgm", "pgm", grid.to_pgm())
    manifest.write_output(args.out, "basin.csv", "csv", report.basin_csv(grid))
    for k, v in grid.counts().items():
        print(f"{k.name.lower():10s} {v}")
    return EXIT_OK


def _cmd_phase(cfg, args, manifest):
    tr = an.phase_trajectory(args.x0, args.n, cfg.engine.params)
    manifest.write_output(args.out, "phase.csv", "csv", report.points_csv(tr.points, tr.escaped))
    last = tr.points[-1]
    print(f"{len(tr.points) - 1} steps, last point ({float(last[0])!r}, {float(last[1])!r})"
          + (", escaped" if tr.escaped else ""))
    return EXIT_OK


def _cmd_cobweb(cfg, args, manifest):
    params = cfg.engine.params
    x0 = an.critical_point_of_g(params) if args.x0 is None else args.x0
    segs = an.cobweb_data(x0, args.n, params)
    manifest.write_output(args.out, "cobweb.csv", "csv", report.cobweb_csv(segs))
    print(f"{len(segs)} segments from x0 = {x0!r}")
    return EXIT_OK


def _cmd_bifurcation(cfg, args, manifest):
    a = cfg.analysis
    scan = an.bifurcation_scan(
        args.lo if args.lo is not None else a.scan_lambda_lo,
        args.hi if args.hi is not None else a.scan_lambda_hi,
        args.steps or a.scan_steps,
        VectorFieldParams(h=cfg.engine.h),
        transient=a.scan_transient, samples=a.scan_samples, tol=a.period_tol,
        max_period=a.max_period, bisect_transient=a.scan_bisect_transient,
    )
    manifest.write_output(args.out, "bifurcation.csv", "csv", report.bifurcation_csv(scan))
    for k, lam in enumerate(scan.doubling_lambdas):
        print(f"doubling {2 ** k} -> {2 ** (k + 1)} at lambda = {lam:.10f}")
    for k, d in enumerate(scan.delta_estimates, 1):
        print(f"delta_{k} = {d:.6f}")
    return EXIT_OK


def _cmd_stability(cfg, args, manifest):
    z, r = an.stability_table(n=args.n)
    manifest.write_output(args.out, "stability.csv", "csv",
                          report.stability_csv(z, r, an.stability_boundary()))
    from .dynamics import jacobian_eigs_at_origin
    z1, z2 = jacobian_eigs_at_origin(cfg.engine.params)
    print(f"R(-2h) = {z1!r}, R(-lambda h) = {z2!r}")
    return EXIT_OK


def _cmd_sink(cfg, args, manifest):
    orbit = an.find_sink_orbit(cfg.engine.params)
    sys.stdout.write(report.sink_text(orbit))
    return EXIT_OK


_COMMANDS = {
    "prove": _cmd_prove,
    "basin": _cmd_basin,
    "phase": _cmd_phase,
    "cobweb": _cmd_cobweb,
    "bifurcation": _cmd_bifurcation,
    "stability": _cmd_stability,
    "sink": _cmd_sink,
}


def main(argv=None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.threads < 1:
        parser.print_usage(sys.stderr)
        print("heuncap: error: --threads must be at least 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        cfg = load_config(args.config)
    except (ConfigError, OSError) as exc:
        print(f"heuncap: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    args.out.mkdir(parents=True, exist_ok=True)
    manifest = report.RunManifest(command=shlex.join(["heuncap", *argv]),
                                  config_text=dump_config(cfg))
    t0 = time.perf_counter()
    with np.errstate(all="ignore"):
        code = _COMMANDS[args.command](cfg, args, manifest)
    manifest.wall_time = time.perf_counter() - t0
    (args.out / "manifest.txt").write_text(manifest.render(), encoding="utf-8")
    return code


if __name__ == "__main__":
    sys.exit(main())
