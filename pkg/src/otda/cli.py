#
# Command-line interface: otda plans|train|check|sweep
#
import argparse
import sys

from otda import experiments
from otda.checks import CHECK_ALIASES, CHECK_KINDS
from otda.config import load_config
from otda.exceptions import CheckFailure, ConfigError, OTDAError
from otda.logger import set_logging_level

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_IO = 2
EXIT_CHECK = 3

COMMANDS = {
    "plans": "minibatch transport plans and their cross-class diagnostics",
    "train": "train every configured method on every seed",
    "check": "run a verification suite",
    "sweep": "final accuracy over a one-dimensional hyperparameter grid",
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="otda", description="Optimal transport domain adaptation experiments"
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name, help_text in COMMANDS.items():
        sub = subparsers.add_parser(name, help=help_text, description=help_text)
        sub.add_argument("--config", required=True, help="Path of the JSON experiment document")
        sub.add_argument("--jobs", type=int, default=1, help="Seeds run in parallel (default 1)")
        sub.add_argument("--out", default=None, help="Output directory, overrides output_dir")
        sub.add_argument(
            "--log-level",
            default="WARNING",
            choices=["DEBUG", "INFO", "WARNING", "ERROR"],
            help="Logging level (default WARNING)",
        )
        if name == "check":
            sub.add_argument(
                "--kind",
                required=True,
                choices=(*CHECK_KINDS, *CHECK_ALIASES),
                help="Suite to run",
            )
    return parser


def run(args):
    config = load_config(args.config, output_dir=args.out)
    if args.command == "plans":
        experiments.run_plans(config, args.jobs)
    elif args.command == "train":
        experiments.run_train(config, args.jobs)
    elif args.command == "sweep":
        experiments.run_sweep(config, args.jobs)
    else:
        experiments.run_check(args.kind, config, args.jobs)


def main(argv=None):
    """Entry point of the ``otda`` console script; returns the exit code."""
    args = build_parser().parse_args(argv)
    set_logging_level(args.log_level)
    try:
        run(args)
    except CheckFailure as error:
        sys.stderr.write(f"otda: check failed: {error}\n")
        return EXIT_CHECK
    except ConfigError as error:
        sys.stderr.write(f"otda: invalid configuration: {error}\n")
        return EXIT_CONFIG
    except OSError as error:
        sys.stderr.write(f"otda: {error}\n")
        return EXIT_IO
    except OTDAError as error:
        sys.stderr.write(f"otda: {error}\n")
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
