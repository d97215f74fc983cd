"""Command line: ``velsel {analytic,classical,quantum,compare,welldepth,rerun}``."""
from __future__ import annotations

import argparse
import os
import sys

from .config import ConfigError, load_config
from .ensemble import NumericalError
from .harness import execute, rerun

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="key = value or JSON run config")
    common.add_argument("--seed", type=int, help="override the config seed")
    common.add_argument("--out", metavar="DIR", help="output directory (default: config 'output')")
    common.add_argument("--threads", type=int, default=1,
                        help="worker processes for barrier-height rows (default 1, serial)")
    parser = argparse.ArgumentParser(
        prog="velsel", parents=[common],
        description="Velocity selection by a swept dipole barrier in a quadrupole trap.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (("analytic", "closed-form efficiency curve"),
                       ("classical", "Monte Carlo efficiency curve (engine key picks the mode)"),
                       ("quantum", "wavepacket efficiency curve"),
                       ("compare", "classical, quantum and analytic side by side"),
                       ("welldepth", "well geometry for each barrier height")):
        sub.add_parser(name, parents=[common], help=text)
    rp = sub.add_parser("rerun", parents=[common], help="regenerate outputs from a manifest")
    rp.add_argument("manifest", help="manifest.json written by an earlier run")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if args.command == "rerun":
            out = args.out or os.path.dirname(os.path.abspath(args.manifest))
            rerun(args.manifest, out, args.threads)
            return EXIT_OK
        if not args.config:
            raise ConfigError("--config", "a config file is required")
        with open(args.config, encoding="utf-8") as fh:
            text = fh.read()
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        execute(args.command, cfg, text, args.out or cfg.output, args.threads)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
