"""Command line entry point.

Subcommands mirror the experiment pipeline: gen-data, train, attack, defend,
report. Exit codes: 0 success, 2 configuration error, 3 threat-model
violation.
"""

from __future__ import annotations

import argparse
import sys

from .attack import ThreatModelViolation
from .harness import ConfigError, cmd_attack, cmd_defend, cmd_gen_data, cmd_report, cmd_train, load_config

EXIT_CONFIG = 2
EXIT_THREAT = 3


def build_parser():
    parser = argparse.ArgumentParser(
        prog="graphattack",
        description="Train small GNN classifiers, attack them by edge modification, evaluate defenses.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, needs_config in [("gen-data", True), ("train", True),
                               ("attack", True), ("defend", True), ("report", False)]:
        p = sub.add_parser(name)
        p.add_argument("--config", required=needs_config,
                       help="experiment config (INI, sections per module)")
        p.add_argument("--seed", type=int, default=None, help="override [experiment] seed")
        p.add_argument("--out", default=None, help="override [experiment] out directory")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "report":
            out = args.out
            if out is None and args.config:
                out = load_config(args.config, args.seed, args.out).out
            if out is None:
                raise ConfigError("report needs --out (or --config with an out dir)")
            cmd_report(out)
            return 0
        cfg = load_config(args.config, args.seed, args.out)
        import os

        os.makedirs(cfg.out, exist_ok=True)
        if args.command == "gen-data":
            cmd_gen_data(cfg)
        elif args.command == "train":
            cmd_train(cfg)
        elif args.command == "attack":
            cmd_attack(cfg)
        elif args.command == "defend":
            cmd_defend(cfg)
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ThreatModelViolation as exc:
        print(f"threat-model violation: {exc}", file=sys.stderr)
        return EXIT_THREAT


if __name__ == "__main__":
    sys.exit(main())
