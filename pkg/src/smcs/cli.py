"""Command-line front end.

Subcommands map one-to-one onto the experiment drivers; every
subcommand takes --config/--seed/--out/--threads and writes its CSV
artifacts under <out>/<subcommand>/. Exit codes: 0 success, 2
configuration problems, 3 total particle death, 1 anything else.
"""

import argparse
import os
import sys

from . import experiments
from .config import load_config
from .errors import ConfigurationError, ParticleDeathError, SMCSError

_SUBCOMMANDS = (
    ("run", "single run; writes trace.csv and summary.csv"),
    ("scaling", "dimension-scaling benchmark; writes scaling.csv and aggregate.csv"),
    ("logistic", "sequential logistic regression; writes sequence.csv"),
    ("compare-paths", "geometric vs partial-posterior moments; writes comparison.csv"),
    ("pimh", "particle independent Metropolis-Hastings chain; writes chain.csv"),
    ("combine", "independent runs combined by their Z weights; writes runs.csv"),
)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="smcs",
        description="Sequential Monte Carlo sampler benchmarks and artifacts.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in _SUBCOMMANDS:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", default=None, metavar="FILE",
                       help="flat TOML config; defaults apply when omitted")
        p.add_argument("--seed", type=int, default=None,
                       help="override run.seed from the config")
        p.add_argument("--out", default="out", metavar="DIR",
                       help="artifact root (default: ./out)")
        p.add_argument("--threads", type=int, default=1,
                       help="worker processes for repeat fan-out")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, overrides={"run.seed": args.seed})
        out_dir = os.path.join(args.out, args.command)
        if args.command == "run":
            experiments.run_single(cfg, out_dir)
        elif args.command == "scaling":
            experiments.run_scaling_study(cfg, out_dir, threads=args.threads)
        elif args.command == "logistic":
            experiments.run_logistic_sequence(cfg, out_dir)
        elif args.command == "compare-paths":
            experiments.run_path_comparison(cfg, out_dir)
        elif args.command == "pimh":
            experiments.run_pimh(cfg, out_dir)
        else:
            experiments.run_combine(cfg, out_dir, threads=args.threads)
    except ConfigurationError as err:
        print(f"configuration error: {err}", file=sys.stderr)
        return 2
    except ParticleDeathError as err:
        print(f"particle death: {err}", file=sys.stderr)
        return 3
    except SMCSError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except OSError as err:
        print(f"io error: {err}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
