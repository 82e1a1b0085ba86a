from __future__ import annotations

from typing import List, Optional, Tuple

from game_zipf.definitions import GameId
from game_zipf.engines.base import (
    ConnectFourParams,
    Engine,
    GameState,
    Outcome,
    ToyParams,
    encode_key,
    validate_prefs,
)
from game_zipf.engines.checkers import CheckersEngine
from game_zipf.engines.connect_four import ConnectFourEngine
from game_zipf.engines.oware import OwareEngine
from game_zipf.engines.pentago import PentagoEngine
from game_zipf.engines.toy import ToyEngine
from game_zipf.errors import InvalidConfigError

_ENGINES = {
    GameId.CONNECT_FOUR: ConnectFourEngine(),
    GameId.PENTAGO: PentagoEngine(),
    GameId.OWARE: OwareEngine(),
    GameId.CHECKERS: CheckersEngine(),
    GameId.TOY_IDEAL: ToyEngine(),
}


def get_engine(game, include_scores_in_key: bool = True) -> Engine:
    """
    Returns the engine for a GameId (or its integer value).

    Args:
        game: the game to play.
        include_scores_in_key: only used for Oware, see OwareEngine.
    """
    try:
        game = GameId(game)
    except ValueError:
        raise InvalidConfigError(f"Unknown game id {game!r}") from None
    if game == GameId.OWARE and not include_scores_in_key:
        return OwareEngine(include_scores_in_key=False)
    return _ENGINES[game]


def new_game(game, params=None) -> GameState:
    return get_engine(game).new_game(params)


def legal_actions(s: GameState) -> List[int]:
    return get_engine(s.game).legal_actions(s)


def apply(s: GameState, a: int) -> GameState:
    return get_engine(s.game).apply(s, a)


def outcome(s: GameState) -> Outcome:
    return get_engine(s.game).outcome(s)


def observation_key(s: GameState) -> bytes:
    return get_engine(s.game).observation_key(s)


def capture_counts(s: GameState) -> Tuple[int, int]:
    return get_engine(s.game).capture_counts(s)


def state_from_key(key: bytes, params: Optional[ConnectFourParams] = None) -> GameState:
    return _ENGINES[GameId.CONNECT_FOUR].state_from_key(key, params)


__all__ = [
    "ConnectFourParams",
    "Engine",
    "GameState",
    "Outcome",
    "ToyParams",
    "apply",
    "capture_counts",
    "encode_key",
    "get_engine",
    "legal_actions",
    "new_game",
    "observation_key",
    "outcome",
    "state_from_key",
    "validate_prefs",
]
