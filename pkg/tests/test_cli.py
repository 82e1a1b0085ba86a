from __future__ import annotations

import json

import pandas as pd
import pytest

from conftest import SMALL_BOARD, random_positions
from game_zipf.cli import main
from game_zipf.definitions import ExitCode, GameId
from game_zipf.engines import get_engine


def _manifest(out):
    with open(f"{out}.manifest.json", encoding="utf-8") as f:
        return json.load(f)


def _simulate(out, *extra):
    return main(["simulate", "-o", str(out), "--no_log", *extra])


def _write_keys(path, states):
    engine = get_engine(GameId.CONNECT_FOUR)
    pd.DataFrame({"key_hex": [engine.observation_key(s).hex() for s in states]}).to_csv(path, index=False)


class TestSimulate:
    def test_writes_table_export_and_manifest(self, tmp_path):
        out = tmp_path / "toy.gzl"
        assert _simulate(out, "--game", "toy", "--branching", "2", "--length", "3", "--games", "200", "-s", "7") == 0
        manifest = _manifest(out)
        assert manifest["subcommand"] == "simulate"
        assert manifest["seed"] == 7
        export = pd.read_csv(tmp_path / "toy.csv", dtype={"key_hex": str})
        assert manifest["outputs"][str(tmp_path / "toy.csv")] == len(export)
        assert export["count"].sum() == 200 * 3

    def test_reproducible_for_any_worker_count(self, tmp_path):
        flags = ["--game", "connect4", "--games", "30", "-s", "3"]
        assert _simulate(tmp_path / "a.gzl", *flags) == 0
        assert _simulate(tmp_path / "b.gzl", *flags, "--workers", "2") == 0
        assert (tmp_path / "a.gzl").read_bytes() == (tmp_path / "b.gzl").read_bytes()

    def test_flags_beat_config_file(self, tmp_path):
        config = tmp_path / "config.json"
        config.write_text(json.dumps({"games": 5, "seed": 3, "ply_cap": 4}))
        out = tmp_path / "c4.gzl"
        assert _simulate(out, "--game", "connect4", "--config", str(config), "--games", "7") == 0
        manifest = _manifest(out)
        assert manifest["config"]["games"] == 7
        assert manifest["seed"] == 3

    def test_unknown_config_key(self, tmp_path):
        config = tmp_path / "config.json"
        config.write_text(json.dumps({"gamez": 5}))
        assert _simulate(tmp_path / "x.gzl", "--game", "connect4", "--config", str(config)) == ExitCode.INVALID_CONFIG

    def test_seed_from_environment(self, tmp_path, monkeypatch):
        monkeypatch.setenv("GZL_SEED", "42")
        out = tmp_path / "env.gzl"
        assert _simulate(out, "--game", "toy", "--branching", "2", "--length", "2", "--games", "3") == 0
        assert _manifest(out)["seed"] == 42

    def test_toy_needs_its_parameters(self, tmp_path):
        assert _simulate(tmp_path / "x.gzl", "--game", "toy") == ExitCode.INVALID_CONFIG

    def test_unknown_flag_is_a_usage_error(self, tmp_path):
        with pytest.raises(SystemExit) as e:
            _simulate(tmp_path / "x.gzl", "--game", "connect4", "--bogus")
        assert e.value.code == ExitCode.USAGE


class TestAnalysis:
    @pytest.fixture(scope="class")
    def c4_table(self, tmp_path_factory):
        out = tmp_path_factory.mktemp("c4") / "c4.gzl"
        assert _simulate(out, "--game", "connect4", "--games", "1000", "-s", "1") == 0
        return out

    def test_zipf(self, c4_table, tmp_path):
        out = tmp_path / "curve.csv"
        assert main(["zipf", "-i", str(c4_table), "-o", str(out), "--no_log"]) == 0
        curve = pd.read_csv(out)
        assert list(curve.columns) == ["rank", "frequency", "mean_turn", "cumulative_fraction"]
        assert curve["frequency"].iloc[0] == 1000
        with open(tmp_path / "curve.fit.json", encoding="utf-8") as f:
            fit = json.load(f)["fit"]
        assert fit["alpha"] > 0
        assert fit["lo"] == 1

    def test_turns(self, c4_table, tmp_path):
        out = tmp_path / "turns.csv"
        assert main(["turns", "-i", str(c4_table), "-o", str(out), "--no_log", "--late_threshold", "20"]) == 0
        df = pd.read_csv(out)
        assert df["mean_turn"].iloc[0] == 1
        assert "late_fraction" in df.columns

    def test_capture_needs_a_capture_game(self, c4_table, tmp_path):
        assert main(["capture", "-i", str(c4_table), "-o", str(tmp_path / "h.csv"), "--no_log"]) == ExitCode.GAME_RULE

    def test_capture(self, tmp_path):
        table = tmp_path / "oware.gzl"
        assert _simulate(table, "--game", "oware", "--games", "5", "--ply_cap", "100") == 0
        out = tmp_path / "captures.csv"
        assert main(["capture", "-i", str(table), "-o", str(out), "--no_log"]) == 0
        assert pd.read_csv(out)["frequency"].sum() == pd.read_csv(tmp_path / "oware.csv")["count"].sum()

    def test_missing_input_is_an_io_error(self, tmp_path):
        code = main(["zipf", "-i", str(tmp_path / "nope.gzl"), "-o", str(tmp_path / "z.csv"), "--no_log"])
        assert code == ExitCode.IO_ERROR


class TestIdealAndScaling:
    def test_plateau(self, tmp_path):
        out = tmp_path / "plateau.csv"
        assert main(["plateau", "--b", "2", "--K", "5", "-o", str(out), "--no_log"]) == 0
        assert len(pd.read_csv(out)) == 62
        with open(tmp_path / "plateau.json", encoding="utf-8") as f:
            report = json.load(f)
        assert report["violations"] == 0
        assert report["equality_at_plateau_starts"]
        assert report["probability_sum"] == pytest.approx(1.0)

    def test_plateau_with_montecarlo(self, tmp_path):
        out = tmp_path / "mc.csv"
        assert main(["plateau", "--b", "2", "--K", "3", "--montecarlo", "5000", "-o", str(out), "--no_log"]) == 0
        assert len(pd.read_csv(tmp_path / "mc.montecarlo.csv")) == 14

    def test_plateau_rejects_b_one(self, tmp_path):
        assert main(["plateau", "--b", "1", "--K", "5", "-o", str(tmp_path / "p.csv"), "--no_log"]) == ExitCode.INVALID_CONFIG

    def test_scaling(self, tmp_path):
        out = tmp_path / "scaling.csv"
        assert main(["scaling", "--alpha", "2", "--n", "1,10,100", "-o", str(out), "--no_log"]) == 0
        assert len(pd.read_csv(out)) == 3
        with open(tmp_path / "scaling.json", encoding="utf-8") as f:
            assert json.load(f)["alpha_N"] == pytest.approx(1.0)

    def test_scaling_degenerate_alpha(self, tmp_path):
        code = main(["scaling", "--alpha", "1", "-o", str(tmp_path / "s.csv"), "--no_log"])
        assert code == ExitCode.INVALID_CONFIG


class TestSolverCommands:
    def test_solve(self, tmp_path, rng):
        states = random_positions(rng, 4, 10, SMALL_BOARD)
        keys = tmp_path / "keys.csv"
        _write_keys(keys, states)
        out = tmp_path / "solved.csv"
        args = ["solve", "-i", str(keys), "-o", str(out), "--width", "4", "--height", "4", "--buckets", "--no_log"]
        assert main(args) == 0
        df = pd.read_csv(out, dtype={"key_hex": str, "optimal_actions": str})
        assert len(df) == 4
        assert set(df["value"]) <= {-1, 0, 1}
        assert (tmp_path / "solved.buckets.csv").exists()

    def test_solve_budget(self, tmp_path):
        keys = tmp_path / "empty.csv"
        _write_keys(keys, [get_engine(GameId.CONNECT_FOUR).new_game(SMALL_BOARD)])
        args = ["solve", "-i", str(keys), "-o", str(tmp_path / "s.csv"), "--width", "4", "--height", "4",
                "--budget", "1", "--no_log"]
        assert main(args) == ExitCode.SOLVER_BUDGET

    def test_mcts_probe(self, tmp_path, rng):
        keys = tmp_path / "keys.csv"
        _write_keys(keys, random_positions(rng, 3, 10, SMALL_BOARD))
        out = tmp_path / "probe.csv"
        args = ["mcts-probe", "-i", str(keys), "-o", str(out), "--width", "4", "--height", "4", "--sims", "20",
                "--temperatures", "0.5,1.0", "--no_log"]
        assert main(args) == 0
        df = pd.read_csv(out)
        assert df["temperature"].tolist() == [0.5, 1.0]
        assert (df["n_states"] + df["n_skipped"] == 3).all()
