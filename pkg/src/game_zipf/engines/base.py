from __future__ import annotations

import logging
import math
import struct
from dataclasses import dataclass, field
from typing import Any, List, Optional, Sequence, Tuple

from game_zipf.definitions import GameId, OutcomeKind
from game_zipf.errors import GameRuleError, InvalidConfigError

logger = logging.getLogger("game_zipf")

# Branch indices of the toy game are stored as single key bytes
MAX_TOY_BRANCHING = 256


@dataclass(frozen=True)
class Outcome:
    kind: OutcomeKind = OutcomeKind.ONGOING
    winner: Optional[int] = None

    @classmethod
    def win(cls, player: int) -> "Outcome":
        return cls(OutcomeKind.WIN, player)

    @classmethod
    def draw(cls) -> "Outcome":
        return cls(OutcomeKind.DRAW, None)

    @property
    def is_terminal(self) -> bool:
        return self.kind != OutcomeKind.ONGOING

    def value_for(self, player: int) -> int:
        """Game-theoretic value of a terminal outcome from the perspective of `player`: +1, 0 or -1."""
        if self.kind == OutcomeKind.WIN:
            return 1 if self.winner == player else -1
        return 0

    def __str__(self) -> str:
        if self.kind == OutcomeKind.WIN:
            return f"Win({self.winner})"
        return self.kind.name.capitalize()


ONGOING = Outcome()


@dataclass(frozen=True)
class ToyParams:
    """
    Parameters of the ideal branching game.

    Args:
        b: branching factor, at least 2.
        K: number of turns every game lasts, at least 1.
        prefs: optional per-branch sampling probabilities used by the biased policy.
    """

    b: int
    K: int
    prefs: Optional[Tuple[float, ...]] = None

    def __post_init__(self):
        if int(self.b) != self.b or self.b < 2:
            raise InvalidConfigError(f"Branching factor b has to be an integer >= 2, got {self.b}")
        if self.b > MAX_TOY_BRANCHING:
            raise InvalidConfigError(f"Branching factor b is limited to {MAX_TOY_BRANCHING}, got {self.b}")
        if int(self.K) != self.K or self.K < 1:
            raise InvalidConfigError(f"Game length K has to be an integer >= 1, got {self.K}")
        if self.prefs is not None:
            prefs = tuple(float(p) for p in self.prefs)
            object.__setattr__(self, "prefs", prefs)
            validate_prefs(prefs, self.b)


def validate_prefs(prefs: Sequence[float], b: Optional[int] = None) -> None:
    if b is not None and len(prefs) != b:
        raise InvalidConfigError(f"prefs has {len(prefs)} entries but the branching factor is {b}")
    if any(p < 0 or math.isnan(p) for p in prefs):
        raise InvalidConfigError(f"prefs entries have to be nonnegative, got {tuple(prefs)}")
    if abs(math.fsum(prefs) - 1.0) > 1e-12:
        raise InvalidConfigError(f"prefs have to sum to 1 within 1e-12, got {math.fsum(prefs)!r}")


@dataclass(frozen=True)
class ConnectFourParams:
    width: int = 7
    height: int = 6

    def __post_init__(self):
        if self.width < 4 and self.height < 4:
            raise InvalidConfigError(f"A {self.width}x{self.height} board cannot hold a line of four")
        if self.width < 1 or self.height < 1 or self.width * self.height > 64:
            raise InvalidConfigError(f"Unsupported Connect Four board {self.width}x{self.height}")


@dataclass(frozen=True)
class GameState:
    """
    Immutable position of one of the supported games.

    `board` is the per-game cell/pit occupancy, row-major where the game has rows. `counters` holds the
    per-game rule counters (Oware scores, Checkers no-capture plies and pending jump square, nothing for the
    other games). `result` is filled by the engine whenever a move ends the game.
    """

    game: GameId
    board: Tuple[int, ...]
    to_move: int = 0
    turn: int = 0
    counters: Tuple[int, ...] = ()
    params: Any = None
    result: Outcome = field(default=ONGOING, compare=False)

    @property
    def is_terminal(self) -> bool:
        return self.result.is_terminal


class Engine:
    """
    Uniform game interface. Engines are stateless; every method takes and returns immutable GameStates,
    so one engine instance can be shared between any number of workers.
    """

    game_id: GameId = None

    def new_game(self, params=None) -> GameState:
        raise NotImplementedError

    def legal_actions(self, s: GameState) -> List[int]:
        self.check_not_terminal(s)
        return self._legal_actions(s)

    def apply(self, s: GameState, a: int, legal: Optional[Sequence[int]] = None) -> GameState:
        """
        Returns the successor of `s` after action `a`.

        `legal` may carry the already computed legal_actions(s) so callers that just chose from them
        do not pay for move generation twice.
        """
        if legal is None:
            legal = self.legal_actions(s)
        if a not in legal:
            raise GameRuleError(f"Illegal action {a} for {self.game_id.name} at turn {s.turn}")
        return self._apply(s, a)

    def outcome(self, s: GameState) -> Outcome:
        return s.result

    def observation_key(self, s: GameState) -> bytes:
        return encode_key(s.game, s.board, s.to_move)

    def capture_counts(self, s: GameState) -> Tuple[int, int]:
        raise GameRuleError(f"capture_counts is only defined for Oware and Checkers, not {self.game_id.name}")

    def max_plies(self, params=None) -> int:
        raise NotImplementedError

    def check_not_terminal(self, s: GameState) -> None:
        if s.is_terminal:
            raise GameRuleError(f"{self.game_id.name} state at turn {s.turn} is terminal ({s.result})")

    def _legal_actions(self, s: GameState) -> List[int]:
        raise NotImplementedError

    def _apply(self, s: GameState, a: int) -> GameState:
        raise NotImplementedError


def encode_key(game: GameId, board: Sequence[int], to_move: int, counters: Sequence[int] = ()) -> bytes:
    """Key layout: game id byte, board bytes, to_move byte, counters as big-endian unsigned shorts."""
    key = bytes((int(game),)) + bytes(board) + bytes((to_move,))
    if counters:
        key += struct.pack(f">{len(counters)}H", *counters)
    return key
