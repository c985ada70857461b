"""Command-line entry point.

Exit codes: 0 success, 1 configuration error, 2 resource gate, 3 partial
batch failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .. import operators
from ..errors import ConfigError, ResourceLimitError
from .commands import COMMANDS
from .config import build_config, load_config

EXIT_OK, EXIT_CONFIG, EXIT_RESOURCE, EXIT_PARTIAL = 0, 1, 2, 3

# configs used when a subcommand runs without --config
PRESETS = {
    "toy": {"problem": {"kind": "toy"}, "schedule": "TOY_S2"},
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="experiment config (JSON)")
    common.add_argument("--out", type=Path, help="output directory (overrides the config)")
    common.add_argument("--jobs", type=int, help="worker processes")
    common.add_argument("--seed", type=int, help="override the problem seed")
    common.add_argument("--max-n-unsafe", action="store_true",
                        help="allow dense full-space work above N=12")
    common.add_argument("--force", action="store_true", help="recompute tasks that already have outputs")
    common.add_argument("-v", "--verbose", action="store_true")
    parser = argparse.ArgumentParser(prog="chaoticqa", parents=[common],
                                     description="Quantum annealing with transverse-field and bosonic SYK drivers.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=COMMANDS[name].__doc__)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        overrides = {"out": str(args.out) if args.out else None, "jobs": args.jobs, "seed": args.seed}
        if args.config is not None:
            cfg = load_config(args.config, **overrides)
        elif args.command in PRESETS:
            cfg = build_config(PRESETS[args.command], **overrides)
        else:
            raise ConfigError(f"'{args.command}' needs --config")
        if cfg.out is None:
            raise ConfigError("no output directory: pass --out or set 'out' in the config")
        operators.allow_large_systems(args.max_n_unsafe)
        # fail before any work is scheduled rather than in every task
        operators.check_size(cfg.largest_n, max_n=cfg.max_n, copies=1)
        return COMMANDS[args.command](cfg, Path(cfg.out), force=args.force)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ResourceLimitError as exc:
        print(f"resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE


if __name__ == "__main__":
    sys.exit(main())
