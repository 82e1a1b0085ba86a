from __future__ import annotations

import logging
from typing import List, Tuple

from game_zipf.definitions import GameId
from game_zipf.engines.base import ONGOING, Engine, GameState, Outcome, encode_key
from game_zipf.errors import InvalidConfigError

logger = logging.getLogger("game_zipf")

HOUSES = 12
HOUSES_PER_PLAYER = 6
SEEDS_PER_HOUSE = 4
TOTAL_SEEDS = HOUSES * SEEDS_PER_HOUSE
WINNING_SCORE = 25
MAX_TURNS = 1000


def own_houses(player: int) -> range:
    return range(player * HOUSES_PER_PLAYER, (player + 1) * HOUSES_PER_PLAYER)


class OwareEngine(Engine):
    """
    Oware abapa. Houses 0-5 belong to player 0 and 6-11 to player 1; sowing runs towards increasing index
    (counter-clockwise) and wraps around. Action a in [0, 6) sows the mover's a-th house.
    counters = (score of player 0, score of player 1).

    Args:
        include_scores_in_key: keep the scores in the observation key. Turning it off counts board
            configurations only, at the price of merging states with different values.
    """

    game_id = GameId.OWARE

    def __init__(self, include_scores_in_key: bool = True):
        self.include_scores_in_key = include_scores_in_key

    def new_game(self, params=None) -> GameState:
        if params is not None:
            raise InvalidConfigError("Oware takes no parameters")
        return GameState(self.game_id, (SEEDS_PER_HOUSE,) * HOUSES, counters=(0, 0))

    def max_plies(self, params=None) -> int:
        return MAX_TURNS

    def observation_key(self, s: GameState) -> bytes:
        counters = s.counters if self.include_scores_in_key else ()
        return encode_key(s.game, s.board, s.to_move, counters)

    def capture_counts(self, s: GameState) -> Tuple[int, int]:
        return s.counters[0], s.counters[1]

    def _legal_actions(self, s: GameState) -> List[int]:
        return self.moves_for(s.board, s.to_move)

    @staticmethod
    def moves_for(board, player: int) -> List[int]:
        """Non-empty houses; when the opponent is out of seeds only moves that reach the opponent's row count."""
        offset = player * HOUSES_PER_PLAYER
        opponent_empty = not any(board[h] for h in own_houses(1 - player))
        moves = []
        for a in range(HOUSES_PER_PLAYER):
            seeds = board[offset + a]
            if seeds == 0:
                continue
            if opponent_empty and seeds < HOUSES_PER_PLAYER - a:
                continue
            moves.append(a)
        return moves

    def _apply(self, s: GameState, a: int) -> GameState:
        mover = s.to_move
        board = list(s.board)
        origin = mover * HOUSES_PER_PLAYER + a
        seeds = board[origin]
        board[origin] = 0
        pos = origin
        while seeds:
            pos = (pos + 1) % HOUSES
            if pos == origin:
                continue
            board[pos] += 1
            seeds -= 1

        scores = list(s.counters)
        opponent_row = own_houses(1 - mover)
        if pos in opponent_row and board[pos] in (2, 3):
            captured = []
            h = pos
            while h in opponent_row and board[h] in (2, 3):
                captured.append(h)
                h -= 1
            remaining = sum(board[i] for i in opponent_row) - sum(board[i] for i in captured)
            # grand slam: taking every seed of the opponent is forbidden, the move captures nothing
            if remaining > 0:
                for i in captured:
                    scores[mover] += board[i]
                    board[i] = 0

        turn = s.turn + 1
        nxt = 1 - mover
        result = ONGOING
        if scores[mover] >= WINNING_SCORE:
            result = Outcome.win(mover)
        elif scores[0] == scores[1] == TOTAL_SEEDS // 2:
            result = Outcome.draw()
        elif not self.moves_for(board, nxt):
            # the game ends and every player keeps the seeds on their own side
            for p in (0, 1):
                for h in own_houses(p):
                    scores[p] += board[h]
                    board[h] = 0
            result = self._by_score(scores)
        elif turn >= MAX_TURNS:
            result = Outcome.draw()
        return GameState(self.game_id, tuple(board), nxt, turn, tuple(scores), result=result)

    @staticmethod
    def _by_score(scores) -> Outcome:
        if scores[0] > scores[1]:
            return Outcome.win(0)
        if scores[1] > scores[0]:
            return Outcome.win(1)
        return Outcome.draw()
