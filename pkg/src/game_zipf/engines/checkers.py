from __future__ import annotations

import logging
from typing import List, Tuple

from game_zipf.definitions import GameId
from game_zipf.engines.base import ONGOING, Engine, GameState, Outcome, encode_key
from game_zipf.errors import InvalidConfigError

logger = logging.getLogger("game_zipf")

SQUARES = 32
PIECES_PER_PLAYER = 12
NO_CAPTURE_DRAW_PLIES = 40
MAX_TURNS = 1000
NO_PENDING = SQUARES

EMPTY = 0
MAN = (1, 3)
KING = (2, 4)

# NW, NE, SW, SE
DIRECTIONS = ((-1, -1), (-1, 1), (1, -1), (1, 1))
# player 0 starts on rows 5-7 and moves up the board, player 1 starts on rows 0-2 and moves down
FORWARD = ((0, 1), (2, 3))
CROWN_ROW = (0, 7)


def square_to_rc(sq: int) -> Tuple[int, int]:
    r = sq // 4
    return r, 2 * (sq % 4) + (1 if r % 2 == 0 else 0)


def rc_to_square(r: int, c: int) -> int:
    if not (0 <= r < 8 and 0 <= c < 8) or (r + c) % 2 == 0:
        return -1
    return r * 4 + c // 2


def _build_tables():
    step, jump = [], []
    for sq in range(SQUARES):
        r, c = square_to_rc(sq)
        step.append(tuple(rc_to_square(r + dr, c + dc) for dr, dc in DIRECTIONS))
        jump.append(tuple(rc_to_square(r + 2 * dr, c + 2 * dc) for dr, dc in DIRECTIONS))
    return tuple(step), tuple(jump)


STEP, JUMP = _build_tables()


def owner(v: int) -> int:
    if v in (1, 2):
        return 0
    if v in (3, 4):
        return 1
    return -1


def encode_action(sq: int, direction: int) -> int:
    """Action = from_square * 4 + direction, the same index covers a step or a jump in that direction."""
    return sq * 4 + direction


class CheckersEngine(Engine):
    """
    English draughts on the 32 dark squares (square = row * 4 + column // 2, row 0 at the top).
    Cell values: 0 empty, 1/2 man/king of player 0, 3/4 man/king of player 1.

    Captures are mandatory. A multi-jump is played as successive single-jump actions by the same player;
    crowning ends the sequence. counters = (plies since the last capture, square of the piece that has to
    continue jumping or 32 for none).
    """

    game_id = GameId.CHECKERS

    def new_game(self, params=None) -> GameState:
        if params is not None:
            raise InvalidConfigError("Checkers takes no parameters")
        board = (3,) * PIECES_PER_PLAYER + (EMPTY,) * 8 + (1,) * PIECES_PER_PLAYER
        return GameState(self.game_id, board, counters=(0, NO_PENDING))

    def max_plies(self, params=None) -> int:
        return MAX_TURNS

    def observation_key(self, s: GameState) -> bytes:
        return encode_key(s.game, s.board, s.to_move, (s.counters[1],))

    def capture_counts(self, s: GameState) -> Tuple[int, int]:
        pieces = [0, 0]
        for v in s.board:
            if v != EMPTY:
                pieces[owner(v)] += 1
        return PIECES_PER_PLAYER - pieces[1], PIECES_PER_PLAYER - pieces[0]

    def _legal_actions(self, s: GameState) -> List[int]:
        pending = s.counters[1]
        if pending != NO_PENDING:
            return self._jumps_from(s.board, pending)
        return self.moves_for(s.board, s.to_move)

    @classmethod
    def moves_for(cls, board, player: int) -> List[int]:
        jumps, steps = [], []
        for sq, v in enumerate(board):
            if owner(v) != player:
                continue
            jumps.extend(cls._jumps_from(board, sq))
            if not jumps:
                for d in cls._directions(v):
                    to = STEP[sq][d]
                    if to >= 0 and board[to] == EMPTY:
                        steps.append(encode_action(sq, d))
        return sorted(jumps) if jumps else steps

    @staticmethod
    def _directions(v: int) -> Tuple[int, ...]:
        return (0, 1, 2, 3) if v in KING else FORWARD[owner(v)]

    @classmethod
    def _jumps_from(cls, board, sq: int) -> List[int]:
        v = board[sq]
        player = owner(v)
        jumps = []
        for d in cls._directions(v):
            over, to = STEP[sq][d], JUMP[sq][d]
            if to >= 0 and board[to] == EMPTY and owner(board[over]) == 1 - player:
                jumps.append(encode_action(sq, d))
        return jumps

    def _apply(self, s: GameState, a: int) -> GameState:
        sq, d = divmod(a, 4)
        board = list(s.board)
        piece = board[sq]
        mover = owner(piece)
        no_capture, _ = s.counters

        over, to = STEP[sq][d], JUMP[sq][d]
        is_jump = to >= 0 and board[to] == EMPTY and owner(board[over]) == 1 - mover
        if not is_jump:
            to = over
        board[sq] = EMPTY
        if is_jump:
            board[over] = EMPTY
        crowned = piece in MAN and square_to_rc(to)[0] == CROWN_ROW[mover]
        board[to] = piece + 1 if crowned else piece

        pending = NO_PENDING
        nxt = 1 - mover
        if is_jump:
            no_capture = 0
            if not crowned and self._jumps_from(board, to):
                pending = to
                nxt = mover
        else:
            no_capture += 1

        turn = s.turn + 1
        result = ONGOING
        if not any(owner(v) == 1 - mover for v in board):
            result = Outcome.win(mover)
        elif no_capture >= NO_CAPTURE_DRAW_PLIES or turn >= MAX_TURNS:
            result = Outcome.draw()
        elif pending == NO_PENDING and not self.moves_for(board, nxt):
            result = Outcome.draw()
        return GameState(self.game_id, tuple(board), nxt, turn, (no_capture, pending), result=result)
