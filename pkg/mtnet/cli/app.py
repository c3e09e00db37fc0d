import argparse
import logging
import sys
from dataclasses import replace

from ..exceptions import ConfigError, DivergenceError, MTNetError
from ..utils.helpers import setup_logging
from .config import ExperimentConfig
from .experiments import RUNNERS, run_generate, run_preprocess

logger = logging.getLogger(__name__)

COMMANDS = ("generate", "preprocess", "train", "evaluate", "ablate", "sample-efficiency", "sensitivity")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="mtnet",
        description="Multi-task recurrent depression classifier: data generation, training and experiment grids",
    )
    commands = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub = commands.add_parser(name)
        sub.add_argument("--config", required=True, help="experiment configuration (JSON)")
        sub.add_argument("--out", default="output", help="output directory (default: output)")
        sub.add_argument("--seed", type=int, help="run a single seed instead of eval.seeds")
        sub.add_argument("--workers", type=int, help="parallel experiment cells (overrides experiment.workers)")
        sub.add_argument("--quiet", action="store_true", help="only log warnings and errors")
    return parser


def run(args):
    cfg = ExperimentConfig.from_file(args.config)
    if args.seed is not None:
        cfg = cfg.with_seeds([args.seed])
    if args.workers is not None:
        cfg = replace(cfg, experiment=replace(cfg.experiment, workers=args.workers))

    if args.command == "generate":
        return run_generate(cfg, args.out)
    if args.command == "preprocess":
        return run_preprocess(cfg, args.out)
    mode = cfg.experiment.mode
    if mode is not None and mode != args.command:
        raise ConfigError(f"{args.config} is an experiment.mode={mode!r} config, not {args.command!r}")
    return RUNNERS[args.command](cfg, args.out)


def main(argv=None):
    args = build_parser().parse_args(argv)
    setup_logging(args.quiet)
    try:
        run(args)
    except DivergenceError as e:
        logger.error("Training diverged: %s", e)
        return 2
    except MTNetError as e:
        logger.error("%s failed: %s", args.command, e)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
