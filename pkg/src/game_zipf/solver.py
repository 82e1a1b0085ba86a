from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from game_zipf.definitions import BoundType, GameId
from game_zipf.engines import ConnectFourParams, GameState
from game_zipf.errors import GameRuleError, InvalidConfigError, SolverBudgetExceeded
from game_zipf.utils.helper import timeit

logger = logging.getLogger("game_zipf")

WIN, DRAW, LOSS = 1, 0, -1
# process_time can report 0 for very fast solves; geometric statistics need positive times
MIN_CPU_SECONDS = 1e-9


@dataclass(frozen=True)
class SolverConfig:
    """
    Args:
        max_nodes: negamax nodes a single solve may visit before SolverBudgetExceeded is raised.
        max_remaining_plies: refuse positions with more empty cells than this. None accepts any position.
        tt_size: number of transposition-table slots.
        fold_symmetry: store mirrored positions under one key. Off by default so table keys stay unmirrored.
    """

    max_nodes: int = 10**8
    max_remaining_plies: Optional[int] = None
    tt_size: int = 1 << 20
    fold_symmetry: bool = False

    def __post_init__(self):
        if self.max_nodes < 1:
            raise InvalidConfigError(f"max_nodes has to be >= 1, got {self.max_nodes}")
        if self.max_remaining_plies is not None and self.max_remaining_plies < 0:
            raise InvalidConfigError(f"max_remaining_plies has to be >= 0, got {self.max_remaining_plies}")
        if self.tt_size < 1:
            raise InvalidConfigError(f"tt_size has to be >= 1, got {self.tt_size}")


class SolveResult(NamedTuple):
    """
    value is +1/0/-1 for the player to move. When every move loses, optimal_actions holds all legal actions and
    all_losing is set; such states carry no optimal action and are skipped by p(optimal) probes.
    """

    value: int
    optimal_actions: Tuple[int, ...]
    nodes_visited: int
    cpu_time: float
    all_losing: bool = False

    @property
    def skip(self) -> bool:
        return self.all_losing


class TimingBucket(NamedTuple):
    lo: int
    hi: int
    n: int
    geometric_mean: float
    geometric_std: float


def value_for_player0(value: int, to_move: int) -> int:
    """Converts a mover-relative value to the perspective of player 0. The conversion is its own inverse."""
    return value if to_move == 0 else -value


class Bitboard:
    """
    Connect Four position as two integers: `current` holds the stones of the side to move, `mask` all stones.
    Column c uses bits c*(height+1) .. c*(height+1)+height-1 from the bottom up; the extra bit per column stays
    empty so line checks never wrap between columns.
    """

    def __init__(self, width: int, height: int):
        self.width = width
        self.height = height
        self.cells = width * height
        h1 = height + 1
        self.bottom = [1 << (c * h1) for c in range(width)]
        self.top = [1 << (c * h1 + height - 1) for c in range(width)]
        self.column = [((1 << height) - 1) << (c * h1) for c in range(width)]
        self.shifts = (1, h1, height, height + 2)
        self.order = tuple(sorted(range(width), key=lambda c: (abs(2 * c - (width - 1)), c)))

    def from_state(self, s: GameState) -> Tuple[int, int, int]:
        current = mask = 0
        mover = s.to_move + 1
        for r in range(self.height):
            for c in range(self.width):
                v = s.board[r * self.width + c]
                if v:
                    bit = 1 << (c * (self.height + 1) + self.height - 1 - r)
                    mask |= bit
                    if v == mover:
                        current |= bit
        return current, mask, bin(mask).count("1")

    def can_play(self, mask: int, c: int) -> bool:
        return not mask & self.top[c]

    def move_bit(self, mask: int, c: int) -> int:
        return (mask + self.bottom[c]) & self.column[c]

    def aligned(self, pos: int) -> bool:
        for shift in self.shifts:
            m = pos & (pos >> shift)
            if m & (m >> (2 * shift)):
                return True
        return False

    def wins_with(self, current: int, mask: int, c: int) -> bool:
        return self.aligned(current | self.move_bit(mask, c))

    def mirror(self, bits: int) -> int:
        h1 = self.height + 1
        out = 0
        for c in range(self.width):
            out |= ((bits >> (c * h1)) & ((1 << h1) - 1)) << ((self.width - 1 - c) * h1)
        return out


class TranspositionTable:
    """Fixed number of slots indexed by key modulo size; a store always replaces the slot."""

    def __init__(self, size: int):
        self.size = size
        self.slots: List[Optional[Tuple[int, BoundType, int, int, int]]] = [None] * size
        self.hits = 0

    def get(self, key: int) -> Optional[Tuple[BoundType, int, int, int]]:
        slot = self.slots[key % self.size]
        if slot is not None and slot[0] == key:
            self.hits += 1
            return slot[1:]
        return None

    def put(self, key: int, bound: BoundType, value: int, depth: int, best_move: int) -> None:
        self.slots[key % self.size] = (key, bound, value, depth, best_move)

    def clear(self) -> None:
        self.slots = [None] * self.size
        self.hits = 0

    def __len__(self) -> int:
        return sum(1 for s in self.slots if s is not None)


class Solver:
    """
    Exact win/draw/loss solver for Connect Four on any board size, negamax with alpha-beta pruning and a
    transposition table. One instance per worker; each board size keeps its own table, which survives between solves.
    """

    def __init__(self, config: Optional[SolverConfig] = None):
        self.config = config or SolverConfig()
        self._boards: Dict[Tuple[int, int], Bitboard] = {}
        self._tables: Dict[Tuple[int, int], TranspositionTable] = {}
        self.table: Optional[TranspositionTable] = None
        self.nodes = 0

    def _board(self, s: GameState) -> Bitboard:
        if s.game != GameId.CONNECT_FOUR:
            raise GameRuleError(f"The solver only supports Connect Four, not {GameId(s.game).name}")
        if s.is_terminal:
            raise GameRuleError(f"Cannot solve a terminal position ({s.result})")
        params = s.params or ConnectFourParams()
        dims = (params.width, params.height)
        if dims not in self._boards:
            self._boards[dims] = Bitboard(*dims)
            self._tables[dims] = TranspositionTable(self.config.tt_size)
        bb = self._boards[dims]
        remaining = bb.cells - sum(1 for v in s.board if v)
        if self.config.max_remaining_plies is not None and remaining > self.config.max_remaining_plies:
            raise SolverBudgetExceeded(
                f"{remaining} remaining plies exceed the configured limit of {self.config.max_remaining_plies}"
            )
        self.table = self._tables[dims]
        return bb

    def _key(self, bb: Bitboard, current: int, mask: int) -> Tuple[int, bool]:
        key = current + mask
        if self.config.fold_symmetry:
            mirrored = bb.mirror(current) + bb.mirror(mask)
            if mirrored < key:
                return mirrored, True
        return key, False

    def _negamax(self, bb: Bitboard, current: int, mask: int, moves: int, alpha: int, beta: int) -> int:
        self.nodes += 1
        if self.nodes > self.config.max_nodes:
            raise SolverBudgetExceeded(f"Node budget of {self.config.max_nodes} exceeded")
        if moves == bb.cells:
            return DRAW
        for c in bb.order:
            if bb.can_play(mask, c) and bb.wins_with(current, mask, c):
                return WIN

        key, mirrored = self._key(bb, current, mask)
        hint = -1
        entry = self.table.get(key)
        if entry is not None:
            bound, value, _, best = entry
            hint = bb.width - 1 - best if mirrored else best
            if bound == BoundType.EXACT:
                return value
            if bound == BoundType.LOWER:
                alpha = max(alpha, value)
            else:
                beta = min(beta, value)
            if alpha >= beta:
                return value

        alpha0 = alpha
        best_value, best_move = LOSS - 1, -1
        order = bb.order if hint < 0 else (hint,) + tuple(c for c in bb.order if c != hint)
        for c in order:
            if not bb.can_play(mask, c):
                continue
            v = -self._negamax(bb, current ^ mask, mask | bb.move_bit(mask, c), moves + 1, -beta, -alpha)
            if v > best_value:
                best_value, best_move = v, c
            if v > alpha:
                alpha = v
            if alpha >= beta:
                break

        if best_value <= alpha0:
            bound = BoundType.UPPER
        elif best_value >= beta:
            bound = BoundType.LOWER
        else:
            bound = BoundType.EXACT
        stored_move = bb.width - 1 - best_move if mirrored else best_move
        self.table.put(key, bound, best_value, bb.cells - moves, stored_move)
        return best_value

    def _child_values(self, bb: Bitboard, current: int, mask: int, moves: int) -> Dict[int, int]:
        values = {}
        for c in range(bb.width):
            if not bb.can_play(mask, c):
                continue
            if bb.wins_with(current, mask, c):
                values[c] = WIN
            elif moves + 1 == bb.cells:
                values[c] = DRAW
            else:
                values[c] = -self._negamax(bb, current ^ mask, mask | bb.move_bit(mask, c), moves + 1, LOSS, WIN)
        return values

    def value(self, s: GameState) -> int:
        """Exact value for the side to move, without the per-action breakdown."""
        bb = self._board(s)
        current, mask, moves = bb.from_state(s)
        self.nodes = 0
        for c in range(bb.width):
            if bb.can_play(mask, c) and bb.wins_with(current, mask, c):
                return WIN
        return self._negamax(bb, current, mask, moves, LOSS, WIN)

    @timeit
    def solve(self, s: GameState) -> SolveResult:
        """
        Exact value of `s` and every action that keeps it. Each root action is searched with the full window,
        so the optimal set does not depend on move ordering or on what the table already holds.
        """
        bb = self._board(s)
        current, mask, moves = bb.from_state(s)
        self.nodes = 0
        start = time.process_time()
        values = self._child_values(bb, current, mask, moves)
        cpu = max(time.process_time() - start, MIN_CPU_SECONDS)
        value = max(values.values())
        if value == LOSS:
            return SolveResult(value, tuple(sorted(values)), self.nodes, cpu, all_losing=True)
        optimal = tuple(sorted(c for c, v in values.items() if v == value))
        return SolveResult(value, optimal, self.nodes, cpu)


def solve(s: GameState, config: Optional[SolverConfig] = None) -> SolveResult:
    return Solver(config).solve(s)


def plain_negamax(s: GameState) -> Tuple[int, Tuple[int, ...]]:
    """Reference solver without pruning or table, only usable a few plies from the end of the game."""
    params = s.params or ConnectFourParams()
    if s.game != GameId.CONNECT_FOUR or s.is_terminal:
        raise GameRuleError("plain_negamax needs a non-terminal Connect Four position")
    bb = Bitboard(params.width, params.height)
    current, mask, moves = bb.from_state(s)

    def negamax(current: int, mask: int, moves: int) -> int:
        best = None
        for c in range(bb.width):
            if not bb.can_play(mask, c):
                continue
            if bb.wins_with(current, mask, c):
                v = WIN
            elif moves + 1 == bb.cells:
                v = DRAW
            else:
                v = -negamax(current ^ mask, mask | bb.move_bit(mask, c), moves + 1)
            best = v if best is None else max(best, v)
        return best

    values = {}
    for c in range(bb.width):
        if not bb.can_play(mask, c):
            continue
        if bb.wins_with(current, mask, c):
            values[c] = WIN
        elif moves + 1 == bb.cells:
            values[c] = DRAW
        else:
            values[c] = -negamax(current ^ mask, mask | bb.move_bit(mask, c), moves + 1)
    value = max(values.values())
    if value == LOSS:
        return value, tuple(sorted(values))
    return value, tuple(sorted(c for c, v in values.items() if v == value))


def geometric_stats(times: Sequence[float]) -> Tuple[float, float]:
    """Geometric mean and geometric standard deviation (exp of the std of the logs)."""
    if len(times) == 0:
        raise InvalidConfigError("geometric_stats needs at least one time")
    logs = np.log(np.maximum(np.asarray(times, dtype=np.float64), MIN_CPU_SECONDS))
    return float(np.exp(logs.mean())), float(np.exp(logs.std()))


def rank_decades(max_rank: int) -> List[Tuple[int, int]]:
    """Half-open rank buckets [1, 10), [10, 100), ... covering 1..max_rank."""
    buckets, lo = [], 1
    while lo <= max_rank:
        buckets.append((lo, lo * 10))
        lo *= 10
    return buckets


def solve_timed(
    ranked_states: Sequence[Tuple[int, GameState]],
    buckets: Optional[Sequence[Tuple[int, int]]] = None,
    config: Optional[SolverConfig] = None,
) -> Tuple[List[TimingBucket], List[SolveResult]]:
    """
    Solves every (rank, state) pair and reports geometric statistics of the cpu time per half-open rank bucket.
    Empty buckets are left out. Every state is solved with a fresh table so times are comparable.
    """
    if not ranked_states:
        raise InvalidConfigError("solve_timed needs at least one state")
    ranks = [r for r, _ in ranked_states]
    buckets = rank_decades(max(ranks)) if buckets is None else buckets
    results = [Solver(config).solve(s) for _, s in ranked_states]
    report = []
    for lo, hi in buckets:
        times = [res.cpu_time for r, res in zip(ranks, results) if lo <= r < hi]
        if not times:
            continue
        gmean, gstd = geometric_stats(times)
        report.append(TimingBucket(lo, hi, len(times), gmean, gstd))
        logger.info(f"Ranks [{lo}, {hi}): {len(times)} states, geometric mean {gmean:.3e}s, std x{gstd:.2f}")
    return report, results


def ground_truth_value_loss(
    v_estimates: Sequence[Tuple[GameState, float]],
    solver: Optional[Solver] = None,
    ranks: Optional[Sequence[int]] = None,
) -> Tuple[pd.DataFrame, pd.DataFrame]:
    """
    Squared error (z - v)^2 of value estimates against solved values, both from the mover's perspective.

    Returns:
        per-state frame (rank, z, v, loss) and the mean loss per rank decade.
    """
    solver = solver or Solver()
    ranks = list(range(1, len(v_estimates) + 1)) if ranks is None else list(ranks)
    rows = []
    for rank, (s, v) in zip(ranks, v_estimates):
        z = solver.value(s)
        rows.append({"rank": rank, "z": z, "v": float(v), "loss": (z - float(v)) ** 2})
    per_state = pd.DataFrame(rows, columns=["rank", "z", "v", "loss"])
    if per_state.empty:
        return per_state, pd.DataFrame(columns=["lo", "hi", "n", "mean_loss"])
    decades = np.floor(np.log10(per_state["rank"].to_numpy(dtype=np.float64))).astype(int)
    grouped = per_state.groupby(decades)["loss"].agg(["count", "mean"])
    per_bucket = pd.DataFrame(
        {
            "lo": [10**d for d in grouped.index],
            "hi": [10 ** (d + 1) for d in grouped.index],
            "n": grouped["count"].to_numpy(),
            "mean_loss": grouped["mean"].to_numpy(),
        }
    )
    return per_state, per_bucket
