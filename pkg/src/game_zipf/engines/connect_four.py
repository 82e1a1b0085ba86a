from __future__ import annotations

import logging
from functools import lru_cache
from typing import List, Optional, Tuple

from game_zipf.definitions import GameId
from game_zipf.engines.base import ONGOING, ConnectFourParams, Engine, GameState, Outcome
from game_zipf.errors import DataFormatError, InvalidConfigError

logger = logging.getLogger("game_zipf")

EMPTY = 0
DIRECTIONS = ((0, 1), (1, 0), (1, 1), (1, -1))
DEFAULT_PARAMS = ConnectFourParams()


@lru_cache(maxsize=None)
def _lines(width: int, height: int) -> Tuple[Tuple[int, int, int, int], ...]:
    lines = []
    for r in range(height):
        for c in range(width):
            for dr, dc in DIRECTIONS:
                end_r, end_c = r + 3 * dr, c + 3 * dc
                if 0 <= end_r < height and 0 <= end_c < width:
                    lines.append(tuple((r + i * dr) * width + c + i * dc for i in range(4)))
    return tuple(lines)


def find_winner(board, width: int, height: int) -> Optional[int]:
    """Scans every line of four; returns the player owning one, or None."""
    for line in _lines(width, height):
        v = board[line[0]]
        if v != EMPTY and v == board[line[1]] == board[line[2]] == board[line[3]]:
            return v - 1
    return None


class ConnectFourEngine(Engine):
    """
    Connect Four on a `height` x `width` grid. Cells are stored row-major with row 0 at the top, so disks
    stack from row `height - 1` upwards. Cell values: 0 empty, 1 player 0, 2 player 1. Action = column index.
    """

    game_id = GameId.CONNECT_FOUR

    def new_game(self, params: Optional[ConnectFourParams] = None) -> GameState:
        params = params or DEFAULT_PARAMS
        if not isinstance(params, ConnectFourParams):
            raise InvalidConfigError(f"Connect Four takes ConnectFourParams, got {type(params).__name__}")
        return GameState(self.game_id, (EMPTY,) * (params.width * params.height), params=params)

    def max_plies(self, params=None) -> int:
        params = params or DEFAULT_PARAMS
        return params.width * params.height

    def _legal_actions(self, s: GameState) -> List[int]:
        # the top row is free iff the column is not full
        return [c for c in range(s.params.width) if s.board[c] == EMPTY]

    def _apply(self, s: GameState, a: int) -> GameState:
        width, height = s.params.width, s.params.height
        row = height - 1
        while s.board[row * width + a] != EMPTY:
            row -= 1
        board = list(s.board)
        board[row * width + a] = s.to_move + 1
        board = tuple(board)

        result = ONGOING
        if self._completes_line(board, row, a, width, height):
            result = Outcome.win(s.to_move)
        elif s.turn + 1 == width * height:
            result = Outcome.draw()
        return GameState(self.game_id, board, 1 - s.to_move, s.turn + 1, params=s.params, result=result)

    @staticmethod
    def _completes_line(board, row: int, col: int, width: int, height: int) -> bool:
        v = board[row * width + col]
        for dr, dc in DIRECTIONS:
            n = 1
            for sign in (1, -1):
                r, c = row + sign * dr, col + sign * dc
                while 0 <= r < height and 0 <= c < width and board[r * width + c] == v:
                    n += 1
                    r += sign * dr
                    c += sign * dc
            if n >= 4:
                return True
        return False

    def column_heights(self, s: GameState) -> List[int]:
        width, height = s.params.width, s.params.height
        return [sum(1 for r in range(height) if s.board[r * width + c] != EMPTY) for c in range(width)]

    def state_from_key(self, key: bytes, params: Optional[ConnectFourParams] = None) -> GameState:
        """
        Rebuilds the state behind an observation key. The turn is the disk count, which equals the ply count
        for every reachable position.
        """
        params = params or DEFAULT_PARAMS
        cells = params.width * params.height
        if len(key) != cells + 2 or key[0] != int(self.game_id):
            raise DataFormatError(f"Key of length {len(key)} is not a {params.width}x{params.height} Connect Four key")
        board = tuple(key[1 : 1 + cells])
        to_move = key[1 + cells]
        if any(v not in (0, 1, 2) for v in board) or to_move not in (0, 1):
            raise DataFormatError("Connect Four key holds invalid cell or player values")
        disks = sum(1 for v in board if v != EMPTY)
        if disks % 2 != to_move:
            raise DataFormatError("Connect Four key has inconsistent disk count and side to move")
        for c in range(params.width):
            seen_empty_below = False
            for r in range(params.height - 1, -1, -1):
                if board[r * params.width + c] == EMPTY:
                    seen_empty_below = True
                elif seen_empty_below:
                    raise DataFormatError(f"Floating disk in column {c}")

        winner = find_winner(board, params.width, params.height)
        if winner is not None:
            result = Outcome.win(winner)
        elif disks == cells:
            result = Outcome.draw()
        else:
            result = ONGOING
        return GameState(self.game_id, board, to_move, disks, params=params, result=result)
