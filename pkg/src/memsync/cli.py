"""Command-line driver.

Usage:
    memsync <analytic|simulate|fig2|sweep> --config <path>
            [--out <dir>] [--seed <u64>]
            [--mode paper_literal|normalized]
            [--decoherence exact|linearized]

Exit code is 0 iff no cell-level errors occurred; failures are summarized
as one JSON object on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace

from .config import parse_config
from .errors import ConfigError
from .experiments import COMMANDS


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="memsync",
        description="Coincidence rates and waiting times of memory-synchronized "
                    "heralded photon sources",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        cmd = sub.add_parser(name)
        cmd.add_argument("--config", required=True,
                         help="path to the JSON configuration document")
        cmd.add_argument("--out", default=None, help="output directory")
        cmd.add_argument("--seed", type=int, default=None,
                         help="override the simulation seed")
        cmd.add_argument("--mode", choices=("paper_literal", "normalized"),
                         default=None, help="postselection denominator mode")
        cmd.add_argument("--decoherence", choices=("exact", "linearized"),
                         default=None, help="per-step decoherence model")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with open(args.config) as fh:
            config = parse_config(fh.read())
    except OSError as exc:
        print(json.dumps({"errors": [{"error": f"cannot read config: {exc}"}]}),
              file=sys.stderr)
        return 2
    except ConfigError as exc:
        print(json.dumps({"errors": [{"error": str(exc), "key": exc.key}]}),
              file=sys.stderr)
        return 2

    if args.mode is not None:
        config = replace(config, denominator_mode=args.mode)
    if args.seed is not None:
        config = replace(config, sim=replace(config.sim, seed=args.seed))
    if args.decoherence is not None:
        memory = replace(config.system.memory, decoherence_mode=args.decoherence)
        config = replace(config, system=replace(config.system, memory=memory))

    result = COMMANDS[args.command](config, out_dir=args.out)
    for path in result.files:
        print(path)
    if result.errors:
        print(json.dumps({"errors": result.errors}), file=sys.stderr)
    return result.exit_code


if __name__ == "__main__":
    raise SystemExit(main())
