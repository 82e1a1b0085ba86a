from __future__ import annotations

import numpy as np
import pytest

from conftest import SMALL_BOARD, random_positions
from game_zipf.definitions import GameId, PolicyKind
from game_zipf.engines import ConnectFourParams, ToyParams, get_engine, state_from_key
from game_zipf.harness import HarnessConfig, rank_turn_correlation, run_selfplay, turn_statistics
from game_zipf.search import SearchConfig
from game_zipf.solver import Solver, plain_negamax, solve_timed
from game_zipf.zipfstats import fit_power_law, ideal_monte_carlo, ideal_state_count, rank_curve, tail_exponent

pytestmark = pytest.mark.slow


def _exact_values(root):
    """Memoized exhaustive negamax below `root`: key -> (value, optimal actions, state)."""
    engine = get_engine(GameId.CONNECT_FOUR)
    values = {}

    def value(s):
        key = engine.observation_key(s)
        if key not in values:
            children = {}
            for a in engine.legal_actions(s):
                child = engine.apply(s, a)
                children[a] = child.result.value_for(s.to_move) if child.is_terminal else -value(child)
            best = max(children.values())
            values[key] = (best, tuple(sorted(a for a, v in children.items() if v == best)), s)
        return values[key][0]

    value(root)
    return values


def test_ideal_game_monte_carlo():
    df = ideal_monte_carlo(2, 3, games=10**6, seed=7, workers=4)
    assert len(df) == ideal_state_count(2, 3)
    assert np.all(np.abs(df["z"]) < 5)


def test_biased_toy_game_smooths_into_zipf():
    cfg = HarnessConfig(
        GameId.TOY_IDEAL, ToyParams(2, 16, (0.6, 0.4)), PolicyKind.BIASED, num_games=10**6, seed=3, workers=8
    )
    fit = fit_power_law(rank_curve(run_selfplay(cfg)), rank_range=(10, 10**4))
    assert 0.9 <= fit.alpha <= 1.1


def test_random_connect_four_is_a_single_power_law():
    cfg = HarnessConfig(GameId.CONNECT_FOUR, num_games=10**6, seed=1, workers=8)
    fit = fit_power_law(rank_curve(run_selfplay(cfg)), rank_range=(10, 10**4))
    assert fit.r_squared >= 0.97
    assert fit.alpha > 0


class TestSolverAgainstExhaustiveSearch:
    def test_late_positions_match_plain_negamax(self, rng):
        solver = Solver()
        positions = []
        for remaining in range(6, 11):
            positions += random_positions(rng, 40, 42 - remaining)
        for s in positions:
            result = solver.solve(s)
            assert (result.value, result.optimal_actions) == plain_negamax(s)

    def test_positions_fourteen_plies_from_the_end(self, rng):
        solver = Solver()
        for root in random_positions(rng, 10, 28):
            expected = _exact_values(root)[get_engine(GameId.CONNECT_FOUR).observation_key(root)]
            result = solver.solve(root)
            assert (result.value, result.optimal_actions) == expected[:2]

    def test_every_small_board_position(self):
        values = _exact_values(get_engine(GameId.CONNECT_FOUR).new_game(SMALL_BOARD))
        solver = Solver()
        for value, optimal, s in values.values():
            result = solver.solve(s)
            assert (result.value, result.optimal_actions) == (value, optimal)


def test_solve_time_falls_with_rank(rng):
    # a 5x4 board keeps every position within 20 plies of the end
    params = ConnectFourParams(5, 4)
    curve = rank_curve(run_selfplay(HarnessConfig(GameId.CONNECT_FOUR, params, num_games=10**5, seed=5, workers=8)))
    ranked = []
    for lo, hi in ((1, 10), (10, 100), (100, 1000), (1000, 10**4)):
        population = np.arange(lo, min(hi, len(curve) + 1))
        for rank in sorted(rng.choice(population, size=min(30, len(population)), replace=False)):
            ranked.append((int(rank), state_from_key(curve.keys[rank - 1], params)))
    buckets, _ = solve_timed(ranked)
    means = [b.geometric_mean for b in buckets]
    assert len(means) == 4
    assert means[1] > means[2] > means[3]


def test_temperature_bend():
    unique, alphas = [], []
    for T in (0.05, 0.1, 0.25, 0.5):
        cfg = HarnessConfig(
            GameId.CONNECT_FOUR,
            policy=PolicyKind.MCTS,
            num_games=10**4,
            seed=11,
            workers=8,
            search=SearchConfig(simulations=100, temperature=T),
            evaluator="rollout",
        )
        curve = rank_curve(run_selfplay(cfg))
        unique.append(len(curve))
        alphas.append(tail_exponent(curve, 10**3, include_tail_plateau=True).alpha)
    assert all(a <= b for a, b in zip(unique, unique[1:]))
    assert all(a >= b for a, b in zip(alphas, alphas[1:]))


def test_turn_structure_contrast():
    stats = {}
    for game in (GameId.CONNECT_FOUR, GameId.OWARE, GameId.CHECKERS):
        # Oware is keyed by board configuration so late positions with different scores are counted together
        cfg = HarnessConfig(game, num_games=10**6, seed=13, workers=8, include_scores_in_key=game != GameId.OWARE)
        stats[game] = turn_statistics(run_selfplay(cfg))

    connect_four = rank_turn_correlation(stats[GameId.CONNECT_FOUR], top=10**4)
    oware = rank_turn_correlation(stats[GameId.OWARE], top=10**4)
    assert connect_four - oware >= 0.1

    for game in (GameId.OWARE, GameId.CHECKERS):
        top = stats[game].mean_turn[: 10**3]
        assert top.min() < 10 and top.max() > 40
    top = stats[GameId.CONNECT_FOUR].mean_turn[: 10**3]
    assert not (top.min() < 10 and top.max() > 40)
