from __future__ import annotations

import logging
from typing import Optional

from game_zipf.definitions import GameId, PolicyKind
from game_zipf.engines import ConnectFourParams, ToyParams, get_engine
from game_zipf.errors import InvalidConfigError
from game_zipf.harness import HarnessConfig
from game_zipf.search import (
    BiasedPolicy,
    Evaluator,
    MctsPolicy,
    Policy,
    RolloutEvaluator,
    SearchConfig,
    SolverEvaluator,
    UniformPolicy,
)
from game_zipf.solver import Solver, SolverConfig

logger = logging.getLogger("game_zipf")

__all__ = ["get_engine", "get_evaluator", "get_game_params", "get_harness_config", "get_policy", "get_solver"]


def get_game_params(game: GameId, branching: Optional[int] = None, length: Optional[int] = None, prefs=None,
                    width: Optional[int] = None, height: Optional[int] = None):
    """
    Get the parameter object a game needs.

    Parameters:
        game (GameId): The game.
        branching (int, optional): Toy game branching factor b.
        length (int, optional): Toy game length K.
        prefs (sequence of float, optional): Toy game branch preferences for the biased policy.
        width, height (int, optional): Connect Four board size; leaving both unset plays the 7x6 board.

    Returns:
        ToyParams for the toy game, ConnectFourParams for a non-default Connect Four board, otherwise None.

    Example:
        # Ideal game with two branches and 16 turns, skewed towards branch 0
        params = get_game_params(GameId.TOY_IDEAL, branching=2, length=16, prefs=(0.6, 0.4))
    """
    game = GameId(game)
    if game == GameId.TOY_IDEAL:
        if branching is None or length is None:
            raise InvalidConfigError("The toy game needs --branching and --length")
        return ToyParams(branching, length, None if prefs is None else tuple(prefs))
    if prefs is not None:
        raise InvalidConfigError("prefs only apply to the toy game")
    if game == GameId.CONNECT_FOUR:
        if width is None and height is None:
            return None
        default = ConnectFourParams()
        return ConnectFourParams(width or default.width, height or default.height)
    if width is not None or height is not None:
        raise InvalidConfigError("Board sizes only apply to Connect Four")
    return None


def get_evaluator(evaluator: str, search: Optional[SearchConfig] = None,
                  solver: Optional[SolverConfig] = None) -> Evaluator:
    """
    Get the leaf evaluator of the tree search.

    Parameters:
        evaluator (str): "rollout" plays uniformly random games to the end and averages their outcomes,
            "solver" asks the alpha-beta solver for the exact value (Connect Four only).
        search (SearchConfig, optional): Supplies rollout_count for the rollout evaluator.
        solver (SolverConfig, optional): Limits of the solver evaluator.

    Returns:
        Evaluator: Callable state, rng -> (value, prior); both evaluators return a uniform prior.
    """
    search = search or SearchConfig()
    if evaluator == "rollout":
        return RolloutEvaluator(search.rollout_count)
    elif evaluator == "solver":
        return SolverEvaluator(solver)
    raise InvalidConfigError(f"Unknown evaluator '{evaluator}'")


def get_policy(cfg: HarnessConfig) -> Policy:
    """
    Get the move-selection policy that plays both sides of a self-play run.

    Parameters:
        cfg (HarnessConfig): The run configuration. UNIFORM samples a legal action uniformly, BIASED samples
            toy-game branches from cfg.params.prefs, MCTS searches every move with cfg.search and samples from
            the temperature policy of the root visit counts.

    Returns:
        Policy: An object with select(engine, state, legal, rng).

    Example:
        # MCTS with 300 simulations at temperature 0.1, rollouts at the leaves
        cfg = HarnessConfig(GameId.CONNECT_FOUR, policy=PolicyKind.MCTS, search=SearchConfig(temperature=0.1))
        policy = get_policy(cfg)
    """
    if cfg.policy == PolicyKind.UNIFORM:
        policy = UniformPolicy()
    elif cfg.policy == PolicyKind.BIASED:
        policy = BiasedPolicy(cfg.params.prefs)
    elif cfg.policy == PolicyKind.MCTS:
        policy = MctsPolicy(cfg.search, get_evaluator(cfg.evaluator, cfg.search))
    else:
        raise InvalidConfigError(f"Unknown policy {cfg.policy}")
    logger.debug(f"Selected policy {policy.__class__.__qualname__}")
    return policy


def get_solver(max_nodes: int = 10**8, max_remaining_plies: Optional[int] = None, tt_size: int = 1 << 20,
               fold_symmetry: bool = False) -> Solver:
    """
    Get a Connect Four solver with its own transposition table.

    Parameters:
        max_nodes (int): Node budget per solve.
        max_remaining_plies (int, optional): Refuse positions with more empty cells.
        tt_size (int): Transposition-table slots.
        fold_symmetry (bool): Share table entries between mirrored positions.

    Returns:
        Solver
    """
    return Solver(SolverConfig(int(max_nodes), max_remaining_plies, int(tt_size), fold_symmetry))


def get_harness_config(args) -> HarnessConfig:
    """
    Build the self-play configuration from the resolved simulate arguments.

    Parameters:
        args (argparse.Namespace): Output of setup_environment_and_adapt_args for the simulate subcommand.

    Returns:
        HarnessConfig
    """
    game = GameId.from_name(args.game)
    params = get_game_params(game, args.branching, args.length, args.prefs, args.width, args.height)
    policy = PolicyKind[args.policy.upper()]
    if policy == PolicyKind.BIASED and game == GameId.TOY_IDEAL and params.prefs is None:
        raise InvalidConfigError("The biased policy needs --prefs")
    search = SearchConfig(
        simulations=args.sims,
        c_puct=args.c_puct,
        temperature=args.temperature,
        rollout_count=args.rollouts,
        seed=args.seed,
    )
    return HarnessConfig(
        game,
        params,
        policy,
        num_games=args.games,
        seed=args.seed,
        workers=args.workers,
        ply_cap=args.ply_cap,
        search=search,
        evaluator=args.evaluator,
        record_terminal=True if args.record_terminal else None,
        include_scores_in_key=not args.exclude_scores,
    )
