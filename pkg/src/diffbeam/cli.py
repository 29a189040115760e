"""Command line entry point.

Exit codes: 0 success, 1 configuration error, 2 numeric failure, 3 I/O error.
"""
from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

from .codebook import (
    build_transition_table,
    check_property1,
    cyclic_codebook,
    generate_glp_codebook,
    load_codebook,
    save_codebook,
)
from .errors import ConfigError, DomainError, LoadError, NumericError, ResourceError
from .harness import emit_outputs, load_config, run_experiment

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3


def _triple(text: str) -> tuple[int, int, int]:
    try:
        mt, n, seed = (int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("expected Mt,N,seed") from None
    return mt, n, seed


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="diffbeam", description="Clustered beamforming feedback simulator")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run an experiment config and write tables, curves and plots")
    sim.add_argument("--config", required=True, type=Path)
    sim.add_argument("--out", type=Path, help="output directory (default: config 'output')")
    sim.add_argument("--seed", type=int, help="override the base seed")
    sim.add_argument("--threads", type=int, default=1, help="worker processes for trials")
    src = sim.add_mutually_exclusive_group()
    src.add_argument("--codebook", type=Path, help="codebook file to use instead of the config's")
    src.add_argument("--generate-codebook", type=_triple, metavar="MT,N,SEED",
                     help="generate a line-packing codebook on the fly")
    sim.add_argument("--no-plots", action="store_true")

    cb = sub.add_parser("codebook", help="generate or inspect codebook files")
    cbsub = cb.add_subparsers(dest="action", required=True)
    gen = cbsub.add_parser("gen", help="generate a codebook file")
    gen.add_argument("--mt", type=int, required=True)
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", type=Path, required=True)
    gen.add_argument("--kind", choices=("glp", "cyclic"), default="glp")
    chk = cbsub.add_parser("check", help="print minimum distance and Property-1 deviation")
    chk.add_argument("path", type=Path)
    return ap


def _simulate(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError("seed must be non-negative")
        cfg.seed = args.seed
    if args.threads < 1:
        raise ConfigError("--threads must be >= 1")
    codebook = None
    if args.codebook is not None:
        codebook = load_codebook(args.codebook)
    elif args.generate_codebook is not None:
        mt, n, seed = args.generate_codebook
        codebook = generate_glp_codebook(mt, n, seed=seed)
    out = args.out if args.out is not None else Path(cfg.base_dir or ".") / cfg.output
    report = run_experiment(cfg, threads=args.threads, codebook=codebook)
    for path in emit_outputs(report, out, plots=not args.no_plots):
        print(path)
    return EXIT_OK


def _codebook(args) -> int:
    if args.action == "gen":
        if args.kind == "glp":
            cb = generate_glp_codebook(args.mt, args.n, seed=args.seed)
        else:
            cb = cyclic_codebook(args.mt, args.n)
        save_codebook(cb, args.out, comment=f"{cb.source} Mt={cb.Mt} N={cb.N} seed={args.seed}")
        print(f"wrote {args.out}: J = {cb.min_distance:.6f}")
        return EXIT_OK
    cb = load_codebook(args.path)
    dev = check_property1(build_transition_table(cb))
    print(f"Mt = {cb.Mt}")
    print(f"N = {cb.N}")
    print(f"J = {cb.min_distance:.6f}")
    print(f"property1_deviation = {dev:.3e}")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return _simulate(args) if args.command == "simulate" else _codebook(args)
    except (ConfigError, DomainError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericError, ResourceError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (LoadError, OSError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
