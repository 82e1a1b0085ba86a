from __future__ import annotations

import numpy as np
import pytest

from game_zipf.definitions import GameId, PolicyKind
from game_zipf.engines import ToyParams, get_engine
from game_zipf.errors import GameRuleError, InvalidConfigError
from game_zipf.harness import (
    FrequencyTable,
    HarnessConfig,
    _play_chunk,
    capture_difference_histogram,
    game_chunks,
    play_game,
    rank_turn_correlation,
    run_selfplay,
    turn_statistics,
)
from game_zipf.search import BiasedPolicy, UniformPolicy


def _toy_config(**kwargs):
    params = kwargs.pop("params", ToyParams(2, 3))
    return HarnessConfig(GameId.TOY_IDEAL, params, **kwargs)


class TestPlayGame:
    def test_toy_game_records_the_post_move_states(self, rng):
        trajectory = play_game(GameId.TOY_IDEAL, UniformPolicy(), rng, params=ToyParams(2, 5))
        assert len(trajectory.records) == 5
        assert [r.turn for r in trajectory.records] == [1, 2, 3, 4, 5]
        assert trajectory.plies == 5

    def test_connect_four_records_initial_and_non_terminal_states(self, rng):
        engine = get_engine(GameId.CONNECT_FOUR)
        trajectory = play_game(GameId.CONNECT_FOUR, UniformPolicy(), rng)
        assert 7 <= trajectory.plies <= 42
        assert len(trajectory.records) == trajectory.plies
        assert trajectory.records[0].key == engine.observation_key(engine.new_game())
        assert trajectory.records[0].turn == 1
        assert trajectory.outcome.is_terminal

    def test_deterministic_policy_gives_identical_games(self):
        policy = BiasedPolicy((1.0, 0.0))
        a = play_game(GameId.TOY_IDEAL, policy, np.random.default_rng(1), params=ToyParams(2, 4, (1.0, 0.0)))
        b = play_game(GameId.TOY_IDEAL, policy, np.random.default_rng(2), params=ToyParams(2, 4, (1.0, 0.0)))
        assert a.records == b.records

    def test_ply_cap(self, rng):
        trajectory = play_game(GameId.CHECKERS, UniformPolicy(), rng, ply_cap=30)
        assert trajectory.plies <= 30
        assert all(r.capture_counts is not None for r in trajectory.records)

    def test_ply_cap_records_only_played_states(self, rng):
        for _ in range(20):
            trajectory = play_game(GameId.CONNECT_FOUR, UniformPolicy(), rng, ply_cap=5)
            assert len(trajectory.records) == trajectory.plies
            assert max(r.turn for r in trajectory.records) <= 5

    def test_toy_ply_cap_keeps_the_capped_state(self, rng):
        trajectory = play_game(GameId.TOY_IDEAL, UniformPolicy(), rng, params=ToyParams(2, 6), ply_cap=3)
        assert [r.turn for r in trajectory.records] == [1, 2, 3]


class TestSelfPlay:
    def test_count_conservation(self):
        table = run_selfplay(HarnessConfig(GameId.CONNECT_FOUR, num_games=20, seed=3))
        assert table.games_played == 20
        assert sum(e.count for e in table.entries.values()) == table.states_recorded

    def test_toy_counts_every_state_once_per_game(self):
        table = run_selfplay(_toy_config(params=ToyParams(2, 5), num_games=1))
        assert table.states_recorded == 5
        assert len(table) == 5

    def test_worker_count_does_not_change_the_table(self):
        single = run_selfplay(HarnessConfig(GameId.CONNECT_FOUR, num_games=24, seed=11, workers=1))
        pooled = run_selfplay(HarnessConfig(GameId.CONNECT_FOUR, num_games=24, seed=11, workers=2))
        assert single == pooled

    def test_chunk_tables_add_up(self):
        cfg = HarnessConfig(GameId.CONNECT_FOUR, num_games=10, seed=4)
        whole = _play_chunk(cfg, 0, 10)
        parts = _play_chunk(cfg, 0, 4).merge(_play_chunk(cfg, 4, 10))
        assert whole == parts

    def test_merge_is_commutative_and_associative(self):
        a, b, c = (run_selfplay(_toy_config(num_games=15, seed=seed)) for seed in (1, 2, 3))
        assert a.merge(b) == b.merge(a)
        assert a.merge(b.merge(c)) == a.merge(b).merge(c)
        assert a.merge(b).states_recorded == a.states_recorded + b.states_recorded

    def test_merge_keeps_the_inputs(self):
        a = run_selfplay(_toy_config(num_games=5, seed=1))
        before = {k: e.count for k, e in a.entries.items()}
        a.merge(a)
        assert {k: e.count for k, e in a.entries.items()} == before

    def test_merging_different_games_fails(self):
        with pytest.raises(InvalidConfigError):
            FrequencyTable(GameId.OWARE).merge(FrequencyTable(GameId.CHECKERS))

    def test_game_chunks_cover_all_games(self):
        chunks = game_chunks(10, 2)
        assert chunks[0][0] == 0 and chunks[-1][1] == 10
        assert all(a[1] == b[0] for a, b in zip(chunks, chunks[1:]))


class TestHarnessConfig:
    def test_validation(self):
        with pytest.raises(InvalidConfigError):
            HarnessConfig(GameId.CONNECT_FOUR, num_games=0)
        with pytest.raises(InvalidConfigError):
            HarnessConfig(GameId.TOY_IDEAL)
        with pytest.raises(InvalidConfigError):
            _toy_config(policy=PolicyKind.BIASED)
        with pytest.raises(InvalidConfigError):
            HarnessConfig(GameId.OWARE, evaluator="solver")

    def test_digest_fields_ignore_workers(self):
        a = HarnessConfig(GameId.PENTAGO, num_games=3, workers=1).digest_fields()
        b = HarnessConfig(GameId.PENTAGO, num_games=3, workers=4).digest_fields()
        assert a == b
        assert a["ply_cap"] == 36


class TestTurnStatistics:
    def test_toy_plateaus_have_constant_turn(self):
        table = run_selfplay(_toy_config(num_games=2000, seed=9))
        stats = turn_statistics(table)
        np.testing.assert_array_equal(stats.mean_turn[:2], [1, 1])
        np.testing.assert_array_equal(stats.mean_turn[2:6], [2, 2, 2, 2])
        np.testing.assert_array_equal(stats.mean_turn[6:14], [3] * 8)
        assert np.all(stats.turn_variance == 0)
        assert rank_turn_correlation(stats) > 0.8

    def test_initial_state_leads_connect_four(self):
        table = run_selfplay(HarnessConfig(GameId.CONNECT_FOUR, num_games=50, seed=2))
        stats = turn_statistics(table)
        assert stats.frequency[0] == 50
        assert stats.mean_turn[0] == 1

    def test_only_initial_states(self):
        table = FrequencyTable(GameId.CONNECT_FOUR)
        for key in (b"a", b"b", b"a"):
            table.record(key, 1)
        stats = turn_statistics(table, late_threshold=5.0, window=2)
        np.testing.assert_array_equal(stats.mean_turn, [1.0, 1.0])
        np.testing.assert_array_equal(stats.late_fraction, [0.0, 0.0])

    def test_late_fraction_is_a_fraction(self):
        table = run_selfplay(HarnessConfig(GameId.CONNECT_FOUR, num_games=30, seed=5))
        stats = turn_statistics(table, late_threshold=10, window=20)
        assert np.all((stats.late_fraction >= 0) & (stats.late_fraction <= 1))
        assert list(stats.to_frame().columns) == ["rank", "frequency", "mean_turn", "turn_variance", "late_fraction"]


class TestCaptureHistogram:
    def test_oware_mass_is_conserved(self):
        table = run_selfplay(HarnessConfig(GameId.OWARE, num_games=10, seed=6, ply_cap=200))
        histogram = capture_difference_histogram(table)
        assert sum(histogram.values()) == table.states_recorded
        assert sum(capture_difference_histogram(table, min_count=2).values()) <= table.states_recorded

    def test_games_without_captures(self):
        table = FrequencyTable(GameId.CHECKERS)
        table.record(b"x", 1, 0)
        table.record(b"y", 2, 0)
        assert capture_difference_histogram(table) == {0: 2}

    def test_unsupported_game(self):
        with pytest.raises(GameRuleError):
            capture_difference_histogram(FrequencyTable(GameId.CONNECT_FOUR))
