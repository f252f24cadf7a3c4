"""Command line interface.

Subcommands::

    geoshoot register --moving M.xyz --fixed F.xyz --out-prefix out [...]
    geoshoot synthetic --case flat-shape --n 1200 --out-prefix data/flat
    geoshoot bench suite.json --out results.csv

Exit codes: 0 success, 2 bad arguments/configuration/input, 3 numerical
blow-up (non-finite state).
"""
from __future__ import annotations

import argparse
import logging
import sys
import time

import numpy as np

from ..core import ConfigError, GeoshootError, NonFiniteState, OptimizerConfig, ShootingConfig
from ..core import validate_config
from ..optimizer import NonFiniteObjectiveAtStart, optimize
from ..shooting import shoot_forward, warp_points
from ..synthetic import CASES, FLAT_BEND_ANGLE, pairwise_stats, synthetic_case
from .benchmark import load_suite, run_suite
from .io import read_points, write_points
from .procrustes import procrustes_align

EXIT_OK, EXIT_USAGE, EXIT_NONFINITE = 0, 2, 3


def _add_shooting_flags(p: argparse.ArgumentParser):
    p.add_argument("--sigma", type=float, default=2.0, help="kernel width (mm)")
    p.add_argument("--lambda", dest="lam", type=float, default=1.0,
                   help="data-attachment weight")
    p.add_argument("--timesteps", type=int, default=40)
    p.add_argument("--backend", choices=("exact", "bh"), default="exact")
    p.add_argument("--threshold-mult", type=float, default=3.0,
                   help="Barnes-Hut distance threshold in units of sigma")
    p.add_argument("--max-iter", type=int, default=200)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="geoshoot", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    reg = sub.add_parser("register", help="register moving points onto fixed points")
    reg.add_argument("--moving", required=True)
    reg.add_argument("--fixed", required=True)
    _add_shooting_flags(reg)
    reg.add_argument("--out-prefix", required=True)
    reg.add_argument("--procrustes", action="store_true",
                     help="rigidly pre-align moving onto fixed first")
    reg.add_argument("--warp", metavar="PATH", help="extra points to carry along the flow")
    reg.add_argument("--trace", action="store_true", help="write <prefix>_trace.csv")

    syn = sub.add_parser("synthetic", help="write a synthetic moving/fixed pair")
    syn.add_argument("--case", choices=CASES, default="flat-shape")
    syn.add_argument("--n", type=int, default=1200)
    syn.add_argument("--bend-angle", type=float, default=FLAT_BEND_ANGLE)
    syn.add_argument("--out-prefix", required=True)

    bench = sub.add_parser("bench", help="run a benchmark suite")
    bench.add_argument("suite")
    bench.add_argument("--out", required=True, help="CSV output path")
    return parser


def _config_from(args) -> ShootingConfig:
    return validate_config(ShootingConfig(
        sigma=args.sigma, lam=args.lam, timesteps=args.timesteps, backend=args.backend,
        threshold_multiplier=args.threshold_mult,
        optimizer=OptimizerConfig(max_iterations=args.max_iter)))


def cmd_register(args) -> int:
    cfg = _config_from(args)
    moving = read_points(args.moving)
    fixed = read_points(args.fixed)
    if moving.shape != fixed.shape:
        raise ConfigError([f"PointCountMismatch({len(moving)} vs {len(fixed)})"])
    extra = read_points(args.warp) if args.warp else None
    t0 = time.perf_counter()
    if args.procrustes:
        tf, moving = procrustes_align(moving, fixed)
        if extra is not None:
            extra = tf.apply(extra)
    p0, trace = optimize(moving, fixed, cfg)
    traj = shoot_forward(moving, p0, cfg)
    elapsed_ms = 1e3 * (time.perf_counter() - t0)
    header = (f"sigma={cfg.sigma!r} lambda={cfg.lam!r} timesteps={cfg.timesteps} "
              f"backend={cfg.backend.value} threshold_mult={cfg.threshold_multiplier!r}\n"
              "initial momenta; rows match the moving point set")
    prefix = args.out_prefix
    write_points(p0, f"{prefix}_p0.xyz", "xyz", header=header)
    write_points(traj.final_points, f"{prefix}_warped.xyz", "xyz")
    if args.procrustes:
        write_points(moving, f"{prefix}_aligned.xyz", "xyz")
    if extra is not None:
        write_points(warp_points(traj, extra), f"{prefix}_warped_extra.xyz", "xyz")
    if args.trace:
        trace.to_csv(f"{prefix}_trace.csv")
    residual = float(np.sum((traj.final_points - fixed) ** 2))
    print(f"residual={residual!r} time_ms={elapsed_ms:.1f} iters={trace.iterations}")
    return EXIT_OK


def cmd_synthetic(args) -> int:
    overrides = {"bend_angle": args.bend_angle} if args.case == "flat-shape" else {}
    moving, fixed = synthetic_case(args.case, args.n, **overrides)
    write_points(moving, f"{args.out_prefix}_moving.xyz", "xyz")
    write_points(fixed, f"{args.out_prefix}_fixed.xyz", "xyz")
    b, diam = pairwise_stats(moving, 2.0)
    print(f"n={len(moving)} b={b:.1f} diameter={diam:.3f}")
    return EXIT_OK


def cmd_bench(args) -> int:
    records = run_suite(load_suite(args.suite), args.out)
    for r in records:
        print(f"{r.case} {r.backend} n={r.n} total_ms={r.total_ms:.1f} "
              f"residual={r.residual_sse:.6g} status={r.status}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handler = {"register": cmd_register, "synthetic": cmd_synthetic, "bench": cmd_bench}
    try:
        return handler[args.command](args)
    except (NonFiniteState, NonFiniteObjectiveAtStart) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONFINITE
    except (GeoshootError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
