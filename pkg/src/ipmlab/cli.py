"""Command line: ``ipmlab verify | seed-scaling | simulate | sweep``.

Exit codes: 0 pass, 1 check failure, 2 configuration error, 3 runtime or blow-up.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import ConfigError, load_config
from .experiments import (EXIT_CONFIG, EXIT_RUNTIME, OutputExists, cmd_seed_scaling,
                          cmd_simulate, cmd_sweep, cmd_verify)
from .solver import BlowUpError


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="YAML config document")
    common.add_argument("--out", metavar="DIR", help="output directory (default: output.dir)")
    common.add_argument("--n", type=int, help="grid points per axis")
    common.add_argument("--N", type=int, action="append", help="seed index; repeat for a list")
    common.add_argument("--gamma", type=float, help="constant g' value")
    common.add_argument("--kappa", type=float, help="horizon t_N = kappa / sqrt(N)")
    common.add_argument("--force", action="store_true", help="overwrite an existing run directory")

    p = argparse.ArgumentParser(prog="ipmlab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("verify", parents=[common], help="numerical self-checks")
    sub.add_parser("seed-scaling", parents=[common], help="norms of the seed family against N")
    sub.add_parser("simulate", parents=[common], help="single run from the seed at one N")
    sub.add_parser("sweep", parents=[common], help="runs over the N list and the separation verdict")
    return p


def _overrides(args) -> dict:
    out = {}
    if args.n is not None:
        out["grid.n"] = args.n
    if args.N:
        out["seed.N"] = list(args.N)
    if args.gamma is not None:
        out["profile.gamma"] = args.gamma
    if args.kappa is not None:
        out["solver.kappa"] = args.kappa
    if args.out is not None:
        out["output.dir"] = args.out
    return out


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, overrides=_overrides(args))
        if args.command == "simulate" and len(cfg.seed.N) != 1:
            raise ConfigError("seed.N", "simulate takes exactly one N (use --N)")
        if args.command in ("seed-scaling", "sweep") and len(cfg.seed.N) < 3:
            raise ConfigError("seed.N", f"{args.command} needs at least 3 values of N")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(cfg.output.dir)
    try:
        if args.command == "verify":
            return cmd_verify(cfg, out if args.out else None, args.force)
        if args.command == "seed-scaling":
            return cmd_seed_scaling(cfg, out, args.force)
        if args.command == "simulate":
            return cmd_simulate(cfg, cfg.seed.N[0], out, args.force)
        return cmd_sweep(cfg, out, args.force)
    except OutputExists as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (BlowUpError, FloatingPointError, RuntimeError, ValueError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
