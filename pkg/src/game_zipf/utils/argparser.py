from __future__ import annotations

import argparse
import json
import logging
import os
import pathlib
import sys
from typing import List, Optional, Set

from game_zipf.definitions import GAME_NAMES
from game_zipf.errors import InvalidConfigError
from game_zipf.utils.helper import get_git_information
from game_zipf.utils.logger import get_logger, setup_loggers

SEED_ENV = "GZL_SEED"


def comma_floats(value: str) -> List[float]:
    try:
        return [float(v) for v in value.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got '{value}'") from None


def comma_ints(value: str) -> List[int]:
    try:
        return [int(float(v)) for v in value.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got '{value}'") from None


def rank_range(value: str) -> List[int]:
    ranks = comma_ints(value)
    if len(ranks) != 2:
        raise argparse.ArgumentTypeError(f"expected lo,hi, got '{value}'")
    return ranks


def big_int(value: str) -> int:
    # accepts 1e8 style budgets
    try:
        return int(float(value))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got '{value}'") from None


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-o", "--out", required=True, help="Primary output file; the manifest goes next to it")
    common.add_argument("--config", default=None, help="JSON file with default values for this subcommand's flags")
    common.add_argument("-s", "--seed", type=int, default=None, help=f"Master seed, falls back to ${SEED_ENV}, then 0")
    common.add_argument("--workers", type=int, default=1, help="Worker processes for self-play")
    common.add_argument("--no_log", default=False, action="store_true", help="Do not write log.txt next to the output")
    common.add_argument("--debug", default=False, action="store_true")
    return common


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gzl", description="Game-state frequency and scaling-law toolkit")
    sub = parser.add_subparsers(dest="command", required=True)
    common = _common_parser()

    # Self-play
    p = sub.add_parser("simulate", parents=[common], help="Play games and write a state-frequency table")
    p.add_argument("--game", required=True, choices=sorted(GAME_NAMES))
    p.add_argument("--policy", default="uniform", choices=["uniform", "biased", "mcts"])
    p.add_argument("--games", type=big_int, default=1000)
    p.add_argument("--branching", type=int, default=None, help="Toy game branching factor b")
    p.add_argument("--length", type=int, default=None, help="Toy game length K")
    p.add_argument("--prefs", type=comma_floats, default=None, help="Toy game branch preferences, e.g. 0.6,0.4")
    p.add_argument("--width", type=int, default=None, help="Connect Four columns")
    p.add_argument("--height", type=int, default=None, help="Connect Four rows")
    p.add_argument("--sims", type=int, default=300, help="MCTS simulations per move")
    p.add_argument("--c_puct", "--c-puct", type=float, default=2.0)
    p.add_argument("--temperature", type=float, default=1.0)
    p.add_argument("--rollouts", type=int, default=1, help="Random playouts per MCTS leaf")
    p.add_argument("--evaluator", default="rollout", choices=["rollout", "solver"])
    p.add_argument("--ply_cap", "--ply-cap", type=int, default=None)
    p.add_argument("--exclude_scores", "--exclude-scores", default=False, action="store_true",
                   help="Leave the Oware scores out of the observation key")
    p.add_argument("--record_terminal", "--record-terminal", default=False, action="store_true")

    # Rank curves and fits
    p = sub.add_parser("zipf", parents=[common], help="Rank curve and power-law fit of one or more tables")
    p.add_argument("-i", "--in", dest="inputs", action="append", required=True, help="Frequency table file")
    p.add_argument("--temperatures", type=comma_floats, default=None,
                   help="One temperature per --in; emits the exponent-correlation dataset")
    p.add_argument("--min_count", "--min-count", type=int, default=1)
    p.add_argument("--range", dest="rank_range", type=rank_range, default=None, help="lo,hi ranks for the fit")
    p.add_argument("--resample", type=int, default=200, help="Log-spaced ranks per fit, 0 fits every rank")
    p.add_argument("--include_tail_plateau", "--include-tail-plateau", default=False, action="store_true")
    p.add_argument("--tail_split", "--tail-split", type=int, default=None)

    # Ideal game
    p = sub.add_parser("plateau", parents=[common], help="Exact distribution and bounds of the ideal branching game")
    p.add_argument("--b", type=int, required=True)
    p.add_argument("--K", type=int, required=True)
    p.add_argument("--montecarlo", type=big_int, default=0, help="Uniform games for an empirical comparison")

    # Solver
    p = sub.add_parser("solve", parents=[common], help="Annotate Connect Four states with exact values")
    p.add_argument("-i", "--in", dest="inputs", action="append", required=True, help="CSV with a key_hex column")
    p.add_argument("--width", type=int, default=None)
    p.add_argument("--height", type=int, default=None)
    p.add_argument("--budget", type=big_int, default=10**8, help="Node budget per state")
    p.add_argument("--max_remaining", "--max-remaining", type=int, default=None)
    p.add_argument("--tt_size", "--tt-size", type=big_int, default=1 << 20)
    p.add_argument("--fold_symmetry", "--fold-symmetry", default=False, action="store_true")
    p.add_argument("--limit", type=int, default=None, help="Only the first N states")
    p.add_argument("--buckets", default=False, action="store_true", help="Also write rank-decade timing buckets")

    # Turn statistics
    p = sub.add_parser("turns", parents=[common], help="Mean encounter turn per rank")
    p.add_argument("-i", "--in", dest="inputs", action="append", required=True)
    p.add_argument("--late_threshold", "--late-threshold", type=float, default=None)
    p.add_argument("--window", type=int, default=100)
    p.add_argument("--top", type=int, default=None, help="Only the top ranks")
    p.add_argument("--min_count", "--min-count", type=int, default=1)

    # Capture differences
    p = sub.add_parser("capture", parents=[common], help="Capture-difference histogram (Oware, Checkers)")
    p.add_argument("-i", "--in", dest="inputs", action="append", required=True)
    p.add_argument("--min_count", "--min-count", type=int, default=1)

    # Quantization model
    p = sub.add_parser("scaling", parents=[common], help="Loss of the quantization model against the tail-sum oracle")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--deltaL", type=float, default=1.0)
    p.add_argument("--Linf", type=float, default=0.0)
    p.add_argument("--capacity", type=float, default=1.0)
    p.add_argument("--n", dest="ns", type=comma_ints, default=[1, 10, 100, 1000])
    p.add_argument("--cutoff_factor", "--cutoff-factor", type=int, default=10)

    # p(optimal) probe
    p = sub.add_parser("mcts-probe", parents=[common], help="Probability of optimal moves per MCTS temperature")
    p.add_argument("-i", "--in", dest="inputs", action="append", required=True, help="CSV with a key_hex column")
    p.add_argument("--temperatures", type=comma_floats, default=[0.05, 0.1, 0.25, 0.5, 1.0])
    p.add_argument("--width", type=int, default=None)
    p.add_argument("--height", type=int, default=None)
    p.add_argument("--sims", type=int, default=300)
    p.add_argument("--c_puct", "--c-puct", type=float, default=2.0)
    p.add_argument("--rollouts", type=int, default=1)
    p.add_argument("--evaluator", default="rollout", choices=["rollout", "solver"])
    p.add_argument("--budget", type=big_int, default=10**8)
    p.add_argument("--limit", type=int, default=None)
    return parser


def parse_args(argv: Optional[List[str]] = None):
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    args.explicit = sorted(explicit_destinations(parser, argv, args.command))
    return args


def explicit_destinations(parser: argparse.ArgumentParser, argv: List[str], command: str) -> Set[str]:
    """Destinations of the options actually typed on the command line, so config files cannot override them."""
    sub = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction)).choices[command]
    typed = set()
    for action in sub._actions:
        for opt in action.option_strings:
            if any(tok == opt or tok.startswith(opt + "=") for tok in argv):
                typed.add(action.dest)
    return typed


def apply_config_file(args) -> None:
    with open(args.config, encoding="utf-8") as f:
        config = json.load(f)
    if not isinstance(config, dict):
        raise InvalidConfigError(f"Config file {args.config} has to hold a JSON object")
    for key, value in config.items():
        dest = key.replace("-", "_")
        if not hasattr(args, dest):
            raise InvalidConfigError(f"Config file {args.config} sets unknown option '{key}' for '{args.command}'")
        if dest in args.explicit or dest in ("command", "config", "out"):
            continue
        setattr(args, dest, value)


def setup_environment_and_adapt_args(args):
    """Resolves flags > config file > defaults, the seed fallback, the output folder and the loggers."""
    args.caller_args = sys.argv
    args.git = get_git_information()

    if args.config is not None:
        apply_config_file(args)

    if args.seed is None:
        env_seed = os.environ.get(SEED_ENV)
        try:
            args.seed = int(env_seed) if env_seed is not None else 0
        except ValueError:
            raise InvalidConfigError(f"${SEED_ENV} has to be an integer, got '{env_seed}'") from None
    if args.workers < 1:
        raise InvalidConfigError(f"--workers has to be >= 1, got {args.workers}")

    output_dir = pathlib.Path(args.out).resolve().parent
    if not output_dir.exists():
        output_dir.mkdir(parents=True)

    if args.debug:
        loglevel = logging.DEBUG
    else:
        loglevel = logging.INFO
    if args.no_log:
        log_folder_path = None
    else:
        log_folder_path = str(output_dir)
    setup_loggers(loglevel, log_folder_path)
    logger = get_logger()

    args.cwd = os.getcwd()
    logger.info(f"CPU Count: {os.cpu_count()}")
    return args, logger
