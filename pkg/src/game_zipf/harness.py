from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from functools import reduce
from multiprocessing import Pool
from typing import Dict, Iterator, List, NamedTuple, Optional, Tuple

import numpy as np
import pandas as pd
from scipy.stats import spearmanr

from game_zipf.definitions import GameId, PolicyKind
from game_zipf.engines import ConnectFourParams, GameState, Outcome, ToyParams, get_engine
from game_zipf.errors import DataFormatError, GameRuleError, InvalidConfigError
from game_zipf.search import Policy, SearchConfig
from game_zipf.utils.helper import memory_usage, timeit
from game_zipf.utils.logger import setup_loggers

logger = logging.getLogger("game_zipf")

NO_CAPTURE_DIFF = -1
CAPTURE_GAMES = (GameId.OWARE, GameId.CHECKERS)


@dataclass
class TableEntry:
    """Per-state accumulators. Turn moments are kept instead of turn lists to bound memory."""

    __slots__ = ("count", "turn_sum", "turn_sq_sum", "first_seen_turn", "capture_diff")
    count: int
    turn_sum: int
    turn_sq_sum: int
    first_seen_turn: int
    capture_diff: int

    @property
    def mean_turn(self) -> float:
        return self.turn_sum / self.count

    def add(self, turn: int, capture_diff: int = NO_CAPTURE_DIFF) -> None:
        self.count += 1
        self.turn_sum += turn
        self.turn_sq_sum += turn * turn
        self.first_seen_turn = min(self.first_seen_turn, turn)
        self.capture_diff = _merge_capture_diff(self.capture_diff, capture_diff)

    def copy(self) -> "TableEntry":
        return TableEntry(self.count, self.turn_sum, self.turn_sq_sum, self.first_seen_turn, self.capture_diff)

    def merged(self, other: "TableEntry") -> "TableEntry":
        return TableEntry(
            self.count + other.count,
            self.turn_sum + other.turn_sum,
            self.turn_sq_sum + other.turn_sq_sum,
            min(self.first_seen_turn, other.first_seen_turn),
            _merge_capture_diff(self.capture_diff, other.capture_diff),
        )


def _merge_capture_diff(a: int, b: int) -> int:
    # min over the observed differences, so merges stay order independent when scores are not part of the key
    if a == NO_CAPTURE_DIFF:
        return b
    if b == NO_CAPTURE_DIFF:
        return a
    return min(a, b)


class FrequencyTable:
    """
    Visit counts of every observation key plus the moments of the turn on which it was seen.
    Every visit counts, so a state repeated within one game (possible in Oware and Checkers) is counted twice.
    """

    def __init__(self, game: GameId, entries: Optional[Dict[bytes, TableEntry]] = None, games_played: int = 0,
                 states_recorded: int = 0):
        self.game = GameId(game)
        self.entries: Dict[bytes, TableEntry] = entries if entries is not None else {}
        self.games_played = games_played
        self.states_recorded = states_recorded

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, key: bytes) -> bool:
        return key in self.entries

    def __getitem__(self, key: bytes) -> TableEntry:
        return self.entries[key]

    def __eq__(self, other) -> bool:
        if not isinstance(other, FrequencyTable):
            return NotImplemented
        return (
            self.game == other.game
            and self.games_played == other.games_played
            and self.states_recorded == other.states_recorded
            and self.entries == other.entries
        )

    def __repr__(self) -> str:
        return (
            f"FrequencyTable({self.game.name}, unique={len(self)}, games={self.games_played}, "
            f"states={self.states_recorded})"
        )

    def record(self, key: bytes, turn: int, capture_diff: int = NO_CAPTURE_DIFF) -> None:
        entry = self.entries.get(key)
        if entry is None:
            self.entries[key] = TableEntry(1, turn, turn * turn, turn, capture_diff)
        else:
            entry.add(turn, capture_diff)
        self.states_recorded += 1

    def add_trajectory(self, trajectory: "Trajectory") -> None:
        for r in trajectory.records:
            self.record(r.key, r.turn, r.capture_diff)
        self.games_played += 1

    def merge(self, other: "FrequencyTable") -> "FrequencyTable":
        """Entrywise sum of two tables of the same game; neither input is modified."""
        if self.game != other.game:
            raise InvalidConfigError(f"Cannot merge a {self.game.name} table with a {other.game.name} table")
        entries = {k: e.copy() for k, e in self.entries.items()}
        for k, e in other.entries.items():
            mine = entries.get(k)
            entries[k] = e.copy() if mine is None else mine.merged(e)
        return FrequencyTable(
            self.game, entries, self.games_played + other.games_played, self.states_recorded + other.states_recorded
        )

    def sorted_items(self) -> Iterator[Tuple[bytes, TableEntry]]:
        for k in sorted(self.entries):
            yield k, self.entries[k]


@dataclass(frozen=True)
class HarnessConfig:
    """
    Everything needed to reproduce a self-play run.

    Args:
        game: the game to play.
        params: ToyParams for the toy game, ConnectFourParams for non-default Connect Four boards, else None.
        policy: which move-selection policy plays both sides.
        num_games: games to play.
        seed: master seed; game i draws from default_rng([seed, i]).
        workers: processes sharing the games. The result does not depend on it.
        ply_cap: stop a game after this many plies. None uses the rule bound of the game.
        search: search settings of the MCTS policy.
        evaluator: leaf evaluator of the MCTS policy, "rollout" or "solver".
        record_initial: record the state before the first move. None means True for board games and False for the
            toy game, whose recorded states are the K post-move states.
        record_terminal: record the final state. None means False for board games and True for the toy game.
        include_scores_in_key: keep the Oware scores in the observation key.
    """

    game: GameId
    params: Optional[object] = None
    policy: PolicyKind = PolicyKind.UNIFORM
    num_games: int = 1
    seed: int = 0
    workers: int = 1
    ply_cap: Optional[int] = None
    search: SearchConfig = field(default_factory=SearchConfig)
    evaluator: str = "rollout"
    record_initial: Optional[bool] = None
    record_terminal: Optional[bool] = None
    include_scores_in_key: bool = True

    def __post_init__(self):
        object.__setattr__(self, "game", GameId(self.game))
        object.__setattr__(self, "policy", PolicyKind(self.policy))
        if self.num_games < 1:
            raise InvalidConfigError(f"num_games has to be >= 1, got {self.num_games}")
        if self.workers < 1:
            raise InvalidConfigError(f"workers has to be >= 1, got {self.workers}")
        if self.ply_cap is not None and self.ply_cap < 1:
            raise InvalidConfigError(f"ply_cap has to be >= 1, got {self.ply_cap}")
        if self.game == GameId.TOY_IDEAL and not isinstance(self.params, ToyParams):
            raise InvalidConfigError("The toy game needs ToyParams(b, K)")
        if self.game == GameId.CONNECT_FOUR and self.params is not None and not isinstance(
            self.params, ConnectFourParams
        ):
            raise InvalidConfigError("Connect Four only takes ConnectFourParams")
        if self.policy == PolicyKind.BIASED and (self.game != GameId.TOY_IDEAL or self.params.prefs is None):
            raise InvalidConfigError("The biased policy needs the toy game with ToyParams.prefs set")
        if self.evaluator not in ("rollout", "solver"):
            raise InvalidConfigError(f"Unknown evaluator '{self.evaluator}', choose rollout or solver")
        if self.evaluator == "solver" and self.game != GameId.CONNECT_FOUR:
            raise InvalidConfigError("The solver evaluator only supports Connect Four")

    @property
    def is_toy(self) -> bool:
        return self.game == GameId.TOY_IDEAL

    @property
    def records_initial(self) -> bool:
        return (not self.is_toy) if self.record_initial is None else self.record_initial

    @property
    def records_terminal(self) -> bool:
        return self.is_toy if self.record_terminal is None else self.record_terminal

    @property
    def effective_ply_cap(self) -> int:
        rule_bound = get_engine(self.game).max_plies(self.params)
        return rule_bound if self.ply_cap is None else min(self.ply_cap, rule_bound)

    def digest_fields(self) -> dict:
        """Fields that determine the generated table; the worker count is left out since it cannot change it."""
        d = asdict(self)
        d.pop("workers")
        d["game"] = self.game.short_name
        d["policy"] = self.policy.name.lower()
        d["params"] = None if self.params is None else {"type": type(self.params).__name__, **asdict(self.params)}
        d["record_initial"] = self.records_initial
        d["record_terminal"] = self.records_terminal
        d["ply_cap"] = self.effective_ply_cap
        return d


class StateRecord(NamedTuple):
    key: bytes
    turn: int
    capture_counts: Optional[Tuple[int, int]]

    @property
    def capture_diff(self) -> int:
        if self.capture_counts is None:
            return NO_CAPTURE_DIFF
        return abs(self.capture_counts[0] - self.capture_counts[1])


class Trajectory(NamedTuple):
    records: List[StateRecord]
    outcome: Outcome
    plies: int


class TurnStats(NamedTuple):
    """Per-rank turn statistics; index i describes rank i + 1 of the rank curve the stats were built from."""

    frequency: np.ndarray
    mean_turn: np.ndarray
    turn_variance: np.ndarray
    late_fraction: Optional[np.ndarray]
    late_threshold: Optional[float]
    window: int

    @property
    def ranks(self) -> np.ndarray:
        return np.arange(1, len(self.mean_turn) + 1)

    def to_frame(self) -> pd.DataFrame:
        df = pd.DataFrame(
            {
                "rank": self.ranks,
                "frequency": self.frequency,
                "mean_turn": self.mean_turn,
                "turn_variance": self.turn_variance,
            }
        )
        if self.late_fraction is not None:
            df["late_fraction"] = self.late_fraction
        return df


def play_game(
    game: GameId,
    policy: Policy,
    rng: np.random.Generator,
    params=None,
    ply_cap: Optional[int] = None,
    record_initial: Optional[bool] = None,
    record_terminal: Optional[bool] = None,
    include_scores_in_key: bool = True,
) -> Trajectory:
    """
    Plays one game and returns the recorded states in the order they were visited.

    Board-game states are labelled with the 1-indexed turn on which they are played (plies so far + 1).
    Toy-game states are labelled with the number of moves that led to them, so the state after t moves sits
    on turn t and every game records exactly K states.
    """
    game = GameId(game)
    is_toy = game == GameId.TOY_IDEAL
    record_initial = (not is_toy) if record_initial is None else record_initial
    record_terminal = is_toy if record_terminal is None else record_terminal
    engine = get_engine(game, include_scores_in_key=include_scores_in_key)
    cap = engine.max_plies(params) if ply_cap is None else ply_cap
    turn_offset = 0 if is_toy else 1
    with_captures = game in CAPTURE_GAMES

    def record(s: GameState) -> StateRecord:
        captures = engine.capture_counts(s) if with_captures else None
        return StateRecord(engine.observation_key(s), s.turn + turn_offset, captures)

    s = engine.new_game(params)
    records = []
    if record_initial:
        records.append(record(s))
    while not s.is_terminal and s.turn < cap:
        legal = engine.legal_actions(s)
        s = engine.apply(s, policy.select(engine, s, legal, rng), legal=legal)
        # a board-game state reached at the cap is never played, so it is not recorded
        if (record_terminal and s.is_terminal) or (not s.is_terminal and s.turn + turn_offset <= cap):
            records.append(record(s))
    return Trajectory(records, engine.outcome(s), s.turn)


def _play_chunk(cfg: HarnessConfig, start: int, stop: int) -> FrequencyTable:
    from game_zipf.api import get_policy

    policy = get_policy(cfg)
    cap = cfg.effective_ply_cap
    table = FrequencyTable(cfg.game)
    for game_index in range(start, stop):
        rng = np.random.default_rng([cfg.seed, game_index])
        trajectory = play_game(
            cfg.game,
            policy,
            rng,
            params=cfg.params,
            ply_cap=cap,
            record_initial=cfg.records_initial,
            record_terminal=cfg.records_terminal,
            include_scores_in_key=cfg.include_scores_in_key,
        )
        table.add_trajectory(trajectory)
    logger.debug(f"Games [{start}, {stop}) done, {len(table)} unique states")
    return table


def _play_chunk_star(job) -> FrequencyTable:
    return _play_chunk(*job)


def _init_worker(loglevel: int) -> None:
    setup_loggers(loglevel)


def game_chunks(num_games: int, workers: int) -> List[Tuple[int, int]]:
    """Contiguous game-index ranges, a few per worker so slow games do not stall the pool."""
    n_chunks = min(num_games, workers * 4)
    size = math.ceil(num_games / n_chunks)
    return [(lo, min(lo + size, num_games)) for lo in range(0, num_games, size)]


@timeit
def run_selfplay(cfg: HarnessConfig) -> FrequencyTable:
    """
    Plays cfg.num_games games and counts every recorded state.

    Game i always uses the generator default_rng([cfg.seed, i]) and partial tables are summed, so the
    result is identical for any worker count.
    """
    logger.info(
        f"Self-play: {cfg.game.name}, policy {cfg.policy.name}, {cfg.num_games} games, seed {cfg.seed}, "
        f"{cfg.workers} worker(s)"
    )
    chunks = game_chunks(cfg.num_games, cfg.workers)
    if cfg.workers == 1:
        tables = [_play_chunk(cfg, lo, hi) for lo, hi in chunks]
    else:
        with Pool(cfg.workers, initializer=_init_worker, initargs=(logger.getEffectiveLevel(),)) as pool:
            tables = pool.map(_play_chunk_star, [(cfg, lo, hi) for lo, hi in chunks])
    table = reduce(FrequencyTable.merge, tables)
    logger.info(f"{table.states_recorded} states recorded, {len(table)} unique; {memory_usage()}")
    return table


def turn_statistics(
    table: FrequencyTable, rank_order=None, late_threshold: Optional[float] = None, window: int = 100
) -> TurnStats:
    """
    Mean and variance of the turn on which each ranked state was encountered.

    Args:
        table: the frequency table.
        rank_order: a RankCurve built from `table`; computed when None.
        late_threshold: states whose mean turn exceeds it count as late-game states.
        window: width (in ranks) of the sliding window for the late-game fraction.
    """
    from game_zipf.zipfstats import rank_curve

    if len(table) == 0:
        raise DataFormatError("turn_statistics needs a non-empty table")
    if window < 1:
        raise InvalidConfigError(f"window has to be >= 1, got {window}")
    curve = rank_curve(table) if rank_order is None else rank_order
    if curve.keys is None:
        raise InvalidConfigError("rank_order has to carry the state keys of the table")
    entries = [table.entries[k] for k in curve.keys]
    counts = np.array([e.count for e in entries], dtype=np.float64)
    turn_sum = np.array([e.turn_sum for e in entries], dtype=np.float64)
    turn_sq_sum = np.array([e.turn_sq_sum for e in entries], dtype=np.float64)
    mean = turn_sum / counts
    variance = np.clip(turn_sq_sum / counts - mean**2, 0.0, None)

    late_fraction = None
    if late_threshold is not None:
        late = pd.Series((mean > late_threshold).astype(np.float64))
        late_fraction = late.rolling(window, min_periods=1).mean().to_numpy()
    return TurnStats(counts.astype(np.int64), mean, variance, late_fraction, late_threshold, window)


def rank_turn_correlation(stats: TurnStats, top: Optional[int] = None) -> float:
    """Spearman correlation between rank and mean turn over the `top` highest ranked states."""
    n = len(stats.mean_turn) if top is None else min(top, len(stats.mean_turn))
    if n < 2:
        raise DataFormatError("At least two ranked states are needed for a correlation")
    return float(spearmanr(stats.ranks[:n], stats.mean_turn[:n]).correlation)


def capture_difference_histogram(table: FrequencyTable, min_count: int = 1) -> Dict[int, int]:
    """
    Total frequency per absolute capture difference over the states seen at least `min_count` times.
    min_count = 2 drops the states seen only once.
    """
    if table.game not in CAPTURE_GAMES:
        raise GameRuleError(f"Capture differences are only defined for Oware and Checkers, not {table.game.name}")
    if min_count < 1:
        raise InvalidConfigError(f"min_count has to be >= 1, got {min_count}")
    histogram: Dict[int, int] = {}
    for entry in table.entries.values():
        if entry.count < min_count or entry.capture_diff == NO_CAPTURE_DIFF:
            continue
        histogram[entry.capture_diff] = histogram.get(entry.capture_diff, 0) + entry.count
    return dict(sorted(histogram.items()))
