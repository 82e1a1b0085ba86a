from __future__ import annotations

import logging
from typing import List, Tuple

from game_zipf.definitions import GameId
from game_zipf.engines.base import ONGOING, Engine, GameState, Outcome
from game_zipf.errors import InvalidConfigError

logger = logging.getLogger("game_zipf")

SIZE = 6
CELLS = SIZE * SIZE
# quadrant (4) x direction (clockwise, counter-clockwise)
ROTATIONS_PER_CELL = 8
ACTION_SPACE = CELLS * ROTATIONS_PER_CELL
CLOCKWISE = 0
COUNTER_CLOCKWISE = 1


def encode_action(cell: int, quadrant: int, direction: int) -> int:
    """Action = cell * 8 + quadrant * 2 + direction; quadrants are 0 top-left, 1 top-right, 2 bottom-left, 3 bottom-right."""
    return cell * ROTATIONS_PER_CELL + quadrant * 2 + direction


def decode_action(a: int) -> Tuple[int, int, int]:
    cell, rest = divmod(a, ROTATIONS_PER_CELL)
    quadrant, direction = divmod(rest, 2)
    return cell, quadrant, direction


def _build_lines() -> Tuple[Tuple[int, ...], ...]:
    lines = []
    for r in range(SIZE):
        for c in range(SIZE):
            for dr, dc in ((0, 1), (1, 0), (1, 1), (1, -1)):
                end_r, end_c = r + 4 * dr, c + 4 * dc
                if 0 <= end_r < SIZE and 0 <= end_c < SIZE:
                    lines.append(tuple((r + i * dr) * SIZE + c + i * dc for i in range(5)))
    return tuple(lines)


def _build_rotations() -> Tuple[Tuple[Tuple[int, ...], ...], ...]:
    # rotations[q][d][i] is the source cell whose marble ends up in cell i
    rotations = []
    for q in range(4):
        ro, co = (q // 2) * 3, (q % 2) * 3
        per_direction = []
        for d in (CLOCKWISE, COUNTER_CLOCKWISE):
            perm = list(range(CELLS))
            for r in range(3):
                for c in range(3):
                    src_r, src_c = (2 - c, r) if d == CLOCKWISE else (c, 2 - r)
                    perm[(ro + r) * SIZE + co + c] = (ro + src_r) * SIZE + co + src_c
            per_direction.append(tuple(perm))
        rotations.append(tuple(per_direction))
    return tuple(rotations)


LINES = _build_lines()
LINES_THROUGH = tuple(tuple(line for line in LINES if cell in line) for cell in range(CELLS))
ROTATIONS = _build_rotations()


def has_five(board, player: int, lines=LINES) -> bool:
    v = player + 1
    return any(all(board[i] == v for i in line) for line in lines)


class PentagoEngine(Engine):
    """
    Pentago: place a marble on an empty cell, then rotate one 3x3 quadrant by 90 degrees.
    Every rotation stays a distinct action even when the quadrant is symmetric, so the action space is
    always 288 and an empty cell contributes its 8 consecutive action indices.
    """

    game_id = GameId.PENTAGO

    def new_game(self, params=None) -> GameState:
        if params is not None:
            raise InvalidConfigError("Pentago takes no parameters")
        return GameState(self.game_id, (0,) * CELLS)

    def max_plies(self, params=None) -> int:
        return CELLS

    def _legal_actions(self, s: GameState) -> List[int]:
        actions = []
        for cell, v in enumerate(s.board):
            if v == 0:
                actions.extend(range(cell * ROTATIONS_PER_CELL, (cell + 1) * ROTATIONS_PER_CELL))
        return actions

    def _apply(self, s: GameState, a: int) -> GameState:
        cell, quadrant, direction = decode_action(a)
        mover = s.to_move
        placed = list(s.board)
        placed[cell] = mover + 1

        # a five before the rotation ends the game on the spot
        if has_five(placed, mover, LINES_THROUGH[cell]):
            return GameState(self.game_id, tuple(placed), 1 - mover, s.turn + 1, result=Outcome.win(mover))

        perm = ROTATIONS[quadrant][direction]
        board = tuple(placed[src] for src in perm)
        mover_five = has_five(board, mover)
        other_five = has_five(board, 1 - mover)
        if mover_five and other_five:
            result = Outcome.draw()
        elif mover_five:
            result = Outcome.win(mover)
        elif other_five:
            result = Outcome.win(1 - mover)
        elif s.turn + 1 == CELLS:
            result = Outcome.draw()
        else:
            result = ONGOING
        return GameState(self.game_id, board, 1 - mover, s.turn + 1, result=result)
