from __future__ import annotations

import numpy as np
import pytest

from conftest import SMALL_BOARD, play, random_positions
from game_zipf.definitions import GameId
from game_zipf.engines import ConnectFourParams, GameState, get_engine
from game_zipf.errors import GameRuleError, SolverBudgetExceeded
from game_zipf.solver import (
    LOSS,
    WIN,
    Solver,
    SolverConfig,
    geometric_stats,
    ground_truth_value_loss,
    plain_negamax,
    rank_decades,
    solve,
    solve_timed,
    value_for_player0,
)


def _drawn_board_with_one_hole():
    """7x6 board without any line of four; the top of column 2 is left empty for player 1."""
    board = []
    for r in range(6):
        for c in range(7):
            board.append(1 if (c // 2 + r) % 2 == 0 else 2)
    board[2] = 0
    return GameState(GameId.CONNECT_FOUR, tuple(board), to_move=1, turn=41, params=ConnectFourParams())


class TestSolve:
    def test_immediate_win(self):
        s = play(GameId.CONNECT_FOUR, [0, 0, 1, 1, 2, 2], SMALL_BOARD)
        result = solve(s)
        assert result.value == WIN
        assert 3 in result.optimal_actions

    def test_last_empty_cell_draws(self):
        result = solve(_drawn_board_with_one_hole())
        assert result.value == 0
        assert result.optimal_actions == (2,)

    def test_all_losing_position_is_flagged(self):
        # player 0 has an open three on the bottom row of a 5-wide board and cannot be stopped at both ends
        s = play(GameId.CONNECT_FOUR, [1, 1, 2, 2, 3], ConnectFourParams(5, 4))
        result = solve(s)
        assert result.value == LOSS
        assert result.skip
        assert result.optimal_actions == tuple(get_engine(GameId.CONNECT_FOUR).legal_actions(s))

    def test_matches_plain_negamax_on_small_boards(self, rng):
        solver = Solver()
        positions = random_positions(rng, 60, 10, SMALL_BOARD) + random_positions(rng, 20, 14, ConnectFourParams(5, 4))
        for s in positions:
            result = solver.solve(s)
            assert (result.value, result.optimal_actions) == plain_negamax(s)

    def test_one_solver_across_board_sizes(self, rng):
        solver = Solver()
        small = random_positions(rng, 100, 10, SMALL_BOARD)
        wide = random_positions(rng, 100, 14, ConnectFourParams(5, 4))
        for s in [p for pair in zip(small, wide) for p in pair]:
            result = solver.solve(s)
            assert (result.value, result.optimal_actions) == plain_negamax(s)

    def test_symmetry_folding_keeps_values(self, rng):
        plain, folded = Solver(), Solver(SolverConfig(fold_symmetry=True))
        for s in random_positions(rng, 30, 8, SMALL_BOARD):
            a, b = plain.solve(s), folded.solve(s)
            assert (a.value, a.optimal_actions) == (b.value, b.optimal_actions)

    def test_negamax_consistency(self, rng):
        engine = get_engine(GameId.CONNECT_FOUR)
        solver = Solver()
        for s in random_positions(rng, 20, 8, SMALL_BOARD):
            children = []
            for a in engine.legal_actions(s):
                child = engine.apply(s, a)
                if child.is_terminal:
                    children.append(child.result.value_for(s.to_move))
                else:
                    children.append(-solver.value(child))
            assert solver.value(s) == max(children)

    def test_repeated_solves_agree(self):
        s = play(GameId.CONNECT_FOUR, [1, 2, 1, 2], SMALL_BOARD)
        solver = Solver()
        first, second = solver.solve(s), solver.solve(s)
        assert (first.value, first.optimal_actions) == (second.value, second.optimal_actions)


class TestLimits:
    def test_node_budget(self):
        s = get_engine(GameId.CONNECT_FOUR).new_game(SMALL_BOARD)
        with pytest.raises(SolverBudgetExceeded):
            Solver(SolverConfig(max_nodes=1)).solve(s)

    def test_remaining_plies(self):
        with pytest.raises(SolverBudgetExceeded):
            Solver(SolverConfig(max_remaining_plies=20)).solve(get_engine(GameId.CONNECT_FOUR).new_game())

    def test_only_connect_four(self):
        with pytest.raises(GameRuleError):
            solve(get_engine(GameId.PENTAGO).new_game())

    def test_terminal_positions(self):
        with pytest.raises(GameRuleError):
            solve(play(GameId.CONNECT_FOUR, [0, 1, 0, 1, 0, 1, 0]))


class TestTiming:
    def test_geometric_stats(self):
        mean, std = geometric_stats([0.01, 0.01, 0.01])
        assert mean == pytest.approx(0.01)
        assert std == pytest.approx(1.0)
        mean, _ = geometric_stats([0.1, 10.0])
        assert mean == pytest.approx(1.0)

    def test_rank_decades(self):
        assert rank_decades(500) == [(1, 10), (10, 100), (100, 1000)]

    def test_empty_buckets_are_omitted(self, rng):
        states = random_positions(rng, 3, 10, SMALL_BOARD)
        buckets, results = solve_timed(list(zip((1, 2, 500), states)))
        assert [(b.lo, b.hi, b.n) for b in buckets] == [(1, 10, 2), (100, 1000, 1)]
        assert len(results) == 3
        assert all(r.cpu_time > 0 for r in results)


class TestValueLoss:
    def test_exact_estimates_have_no_loss(self, rng):
        solver = Solver()
        states = random_positions(rng, 5, 10, SMALL_BOARD)
        per_state, per_bucket = ground_truth_value_loss([(s, solver.value(s)) for s in states])
        assert np.all(per_state["loss"] == 0)
        assert per_bucket["n"].sum() == 5

    def test_neutral_estimate_of_a_win(self):
        s = play(GameId.CONNECT_FOUR, [0, 0, 1, 1, 2, 2], SMALL_BOARD)
        per_state, _ = ground_truth_value_loss([(s, 0.0)])
        assert per_state["loss"].tolist() == [1.0]

    def test_perspective(self):
        assert value_for_player0(1, 0) == 1
        assert value_for_player0(1, 1) == -1
        for value in (LOSS, 0, WIN):
            assert value_for_player0(value_for_player0(value, 1), 1) == value
