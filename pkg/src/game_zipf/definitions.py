from __future__ import annotations

from enum import IntEnum

GAME_NAMES = {
    "connect4": 1,
    "pentago": 2,
    "oware": 3,
    "checkers": 4,
    "toy": 5,
}


class GameId(IntEnum):
    """
    Enumeration of the supported games. The value doubles as the first byte of every observation key.

    Attributes:
        CONNECT_FOUR (int): Connect Four, 7 columns x 6 rows by default (smaller boards via ConnectFourParams).
        PENTAGO (int): Pentago on a 6x6 board with four rotating 3x3 quadrants.
        OWARE (int): Oware abapa, two rows of six houses with four seeds each.
        CHECKERS (int): English draughts on the 32 dark squares of an 8x8 board.
        TOY_IDEAL (int): Branching game with b options per turn and a fixed length of K turns.
    """
    CONNECT_FOUR = 1
    PENTAGO = 2
    OWARE = 3
    CHECKERS = 4
    TOY_IDEAL = 5

    @classmethod
    def from_name(cls, name: str) -> "GameId":
        from game_zipf.errors import InvalidConfigError

        try:
            return cls(GAME_NAMES[name])
        except KeyError:
            raise InvalidConfigError(f"Unknown game '{name}', choose one of {sorted(GAME_NAMES)}") from None

    @property
    def short_name(self) -> str:
        return {v: k for k, v in GAME_NAMES.items()}[int(self)]


class OutcomeKind(IntEnum):
    ONGOING = 0
    WIN = 1
    DRAW = 2


class PolicyKind(IntEnum):
    """
    Enumeration of the move-selection policies the self-play harness can run.

    Attributes:
        UNIFORM (int): Sample uniformly from the legal actions.
        BIASED (int): Sample toy-game branches from a fixed preference vector.
        MCTS (int): Run a tree search per move and sample from the temperature policy of the root visit counts.
    """
    UNIFORM = 1
    BIASED = 2
    MCTS = 3


class BoundType(IntEnum):
    EXACT = 0
    LOWER = 1
    UPPER = 2


class ExitCode(IntEnum):
    OK = 0
    USAGE = 2
    INVALID_CONFIG = 3
    IO_ERROR = 4
    GAME_RULE = 5
    SOLVER_BUDGET = 6
    DATA_FORMAT = 7
    STATE_SPACE_TOO_LARGE = 8
    INTERRUPTED = 99
