from __future__ import annotations

import logging
from typing import List

from game_zipf.definitions import GameId
from game_zipf.engines.base import ONGOING, Engine, GameState, Outcome, ToyParams
from game_zipf.errors import InvalidConfigError

logger = logging.getLogger("game_zipf")


class ToyEngine(Engine):
    """
    Ideal branching game: every turn one of b branches is chosen and every game lasts exactly K turns.
    The board is the move sequence itself, so each state is reached by exactly one sequence of moves.
    Nobody wins; the final state is a draw.
    """

    game_id = GameId.TOY_IDEAL

    def new_game(self, params=None) -> GameState:
        if not isinstance(params, ToyParams):
            raise InvalidConfigError("The toy game requires ToyParams(b, K)")
        return GameState(self.game_id, (), params=params)

    def max_plies(self, params=None) -> int:
        if params is None:
            raise InvalidConfigError("The toy game requires ToyParams(b, K)")
        return params.K

    def _legal_actions(self, s: GameState) -> List[int]:
        return list(range(s.params.b))

    def _apply(self, s: GameState, a: int) -> GameState:
        board = s.board + (a,)
        result = Outcome.draw() if len(board) == s.params.K else ONGOING
        return GameState(self.game_id, board, 1 - s.to_move, s.turn + 1, params=s.params, result=result)
