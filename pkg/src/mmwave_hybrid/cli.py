"""Command line entry point: ``mmwave-hybrid``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, load_config
from .experiments import (EXPERIMENTS, NumericalFailure, beampattern, named_configs,
                          run_config, run_named_experiment)
from .feedback import AngleCodebook, bb_training_set, train_bb_codebook
from .metrics import codebook_seed

log = logging.getLogger("mmwave_hybrid")


def _common(p: argparse.ArgumentParser, trials: bool = True):
    p.add_argument("--seed", type=int, default=None, help="master seed")
    if trials:
        p.add_argument("--trials", type=int, default=None, help="Monte Carlo trials")
    p.add_argument("--out", default=None, help="output directory (or file for codebooks)")
    p.add_argument("--threads", type=int, default=1, help="worker processes")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mmwave-hybrid",
                                     description="Sparse hybrid precoding experiments")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a named figure reproduction")
    p.add_argument("name", choices=EXPERIMENTS)
    _common(p)

    p = sub.add_parser("run-config", help="run a YAML config or a run manifest")
    p.add_argument("path")
    _common(p)

    p = sub.add_parser("codebook", help="baseband codebook tools")
    cb = p.add_subparsers(dest="action", required=True)
    t = cb.add_parser("train", help="train a Grassmannian baseband codebook")
    t.add_argument("--config", default=None, help="system config (default: the fig2 system)")
    t.add_argument("--ns", type=int, default=1)
    t.add_argument("--bits", type=int, default=None, help="codebook bits (default 4 / 6)")
    t.add_argument("--angle-bits", type=int, default=3)
    t.add_argument("--spread", type=float, default=None, help="angle spread in degrees")
    t.add_argument("--samples", type=int, default=10_000)
    _common(t, trials=False)

    p = sub.add_parser("beampattern", help="write the three transmit beam-pattern grids")
    p.add_argument("--clusters", type=int, default=6)
    _common(p, trials=False)
    return parser


def _train_codebook(args) -> Path:
    config = load_config(args.config) if args.config else named_configs("fig2")[0]
    if not 1 <= args.ns <= config.n_rf_tx:
        raise ConfigError(f"ns: {args.ns} streams need 1 <= Ns <= n_rf_tx = {config.n_rf_tx}")
    bits = args.bits if args.bits is not None else {1: 4, 2: 6}.get(args.ns)
    if bits is None:
        raise ConfigError("bits: no default codebook size for this ns; pass --bits")
    spread = config.angle_spread_deg[0] if args.spread is None else args.spread
    seed = config.seed if args.seed is None else args.seed
    params = config.channel_params(spread)
    rng = np.random.default_rng(codebook_seed(seed, args.ns, args.angle_bits))
    acb = AngleCodebook(args.angle_bits, args.angle_bits, params.tx.sector)
    data = bb_training_set(params, acb, config.n_rf_tx, args.ns, args.samples, rng)
    try:
        book = train_bb_codebook(data, bits, rng)
    except ValueError as exc:
        raise ConfigError(f"samples: {exc}") from exc
    out = Path(args.out or f"codebook_ns{args.ns}_b{bits}.json")
    out.parent.mkdir(parents=True, exist_ok=True)
    book.save(out, params.tx.sector)
    return out


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "run":
            paths = run_named_experiment(args.name, args.out or "results", args.seed,
                                         args.trials, args.threads)
        elif args.command == "run-config":
            paths = run_config(args.path, args.out, args.seed, args.trials, args.threads)
        elif args.command == "codebook":
            paths = [_train_codebook(args)]
        else:
            paths = beampattern(args.out or "results", 0 if args.seed is None else args.seed,
                                args.clusters)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (NumericalFailure, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    for p in paths:
        print(p)
    return 0


if __name__ == "__main__":
    sys.exit(main())
