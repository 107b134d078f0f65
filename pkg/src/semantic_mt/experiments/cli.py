"""Command-line entry point: ``semantic-mt <figure> [--config ...] [--out ...]``.

Exit status 0 on success, 1 on invalid configuration or budgets, 2 when
``verify`` finds a failing acceptance check.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from ..codec import ProfileError
from ..inner_bounds import InfeasibleBudgetError
from ..outer_bounds import BudgetError
from .config import ConfigError, default_config, load_config, resolve_threads
from .csvio import write_csv
from .runners import RUNNERS
from .svg import write_svg

COMMANDS = ("surface", "contours", "regions", "rd-sweep", "alloc", "snr-sweep", "verify")
EXIT_OK, EXIT_INVALID, EXIT_ACCEPTANCE = 0, 1, 2


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="semantic-mt", description="Bound surfaces, sweeps and simulations as CSV.")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", type=Path, help="YAML file merged over the built-in defaults")
        s.add_argument("--out", type=Path, help="output CSV path (default: <command>.csv)")
        s.add_argument("--seed", type=int, help="master seed (unsigned 64-bit)")
        s.add_argument("--threads", type=int, help="worker threads (env SEMANTIC_MT_THREADS also honoured)")
        s.add_argument("--emit-svg", action="store_true", help="write an SVG next to the CSV")
    return p


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    kind = args.command.replace("-", "_")
    try:
        cfg = load_config(args.config, kind) if args.config else default_config(kind)
        if args.seed is not None:
            if not 0 <= args.seed < 2**64:
                raise ConfigError("seed must be an unsigned 64-bit integer")
            cfg.seed = args.seed
        cfg.threads = resolve_threads(args.threads, cfg)
        if kind == "verify":
            from .acceptance import run_verify

            results = run_verify()
            failed = [r.name for r in results if not r.passed]
            print(f"{len(results) - len(failed)}/{len(results)} acceptance checks passed")
            return EXIT_ACCEPTANCE if failed else EXIT_OK
        out = args.out or (Path(cfg.out) if cfg.out else Path(f"{args.command}.csv"))
        rows = RUNNERS[kind](cfg)
        write_csv(out, rows, cfg.digest(), kind)
        print(f"wrote {len(rows)} rows to {out}")
        if args.emit_svg or cfg.emit_svg:
            svg = write_svg(out.with_suffix(".svg"), kind, rows)
            print(f"wrote {svg}")
    except (ConfigError, BudgetError, InfeasibleBudgetError, ProfileError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


def main(argv=None) -> None:
    sys.exit(run(argv))
