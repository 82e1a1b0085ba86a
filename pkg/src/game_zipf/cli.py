from __future__ import annotations

import logging
import math
import pathlib
import sys
import time
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from typing import Dict, List, Optional

import numpy as np
import pandas as pd

from game_zipf import __version__
from game_zipf.api import get_evaluator, get_game_params, get_harness_config, get_solver
from game_zipf.data import (
    export_table_csv,
    load_states_csv,
    load_table,
    save_table,
    write_annotated_csv,
    write_csv,
    write_json,
)
from game_zipf.definitions import ExitCode, GameId
from game_zipf.errors import GameZipfError, InvalidConfigError
from game_zipf.harness import capture_difference_histogram, rank_turn_correlation, run_selfplay, turn_statistics
from game_zipf.scalinglaws import (
    QuantizationParams,
    exponent_correlation_dataset,
    exponent_discrepancy,
    exponent_pairs_frame,
    model_curve_report,
    size_scaling_exponent,
)
from game_zipf.search import SearchConfig, mcts_search, optimal_move_probability, temperature_policy
from game_zipf.solver import SolverConfig, solve_timed
from game_zipf.utils.argparser import parse_args, setup_environment_and_adapt_args
from game_zipf.utils.helper import TerminationHandler, handle_exception
from game_zipf.zipfstats import (
    bounds_check,
    fit_power_law,
    ideal_monte_carlo,
    ideal_plateaus,
    rank_curve,
    tail_exponent,
)

logger = logging.getLogger("game_zipf")

MANIFEST_SUFFIX = ".manifest.json"
# bookkeeping attributes that are not part of the run configuration
NOT_ECHOED = ("caller_args", "explicit", "cwd")


@dataclass
class RunManifest:
    """One per run, written as <primary output>.manifest.json; `outputs` maps every written file to its row count."""

    subcommand: str
    config: Dict[str, object]
    seed: int
    version: str
    git: str
    inputs: List[str] = field(default_factory=list)
    outputs: Dict[str, int] = field(default_factory=dict)
    started: str = ""
    duration_seconds: float = 0.0

    def write(self, primary_output) -> pathlib.Path:
        path = pathlib.Path(f"{primary_output}{MANIFEST_SUFFIX}")
        write_json(asdict(self), path)
        return path


def sibling(path, suffix: str) -> pathlib.Path:
    """`path` with its extension replaced by `suffix`, never `path` itself."""
    path = pathlib.Path(path)
    candidate = path.with_suffix(suffix)
    return candidate if candidate != path else pathlib.Path(f"{path}{suffix}")


def _load_merged(inputs: List[str]):
    tables = [load_table(p) for p in inputs]
    table = tables[0]
    for other in tables[1:]:
        table = table.merge(other)
    return table


def cmd_simulate(args, manifest: RunManifest) -> None:
    cfg = get_harness_config(args)
    table = run_selfplay(cfg)
    manifest.outputs[str(args.out)] = save_table(table, args.out, config=cfg.digest_fields())
    csv_path = sibling(args.out, ".csv")
    manifest.outputs[str(csv_path)] = export_table_csv(table, csv_path)


def cmd_zipf(args, manifest: RunManifest) -> None:
    manifest.inputs = list(args.inputs)
    resample = args.resample or None
    fit_kwargs = {"resample": resample, "include_tail_plateau": args.include_tail_plateau}

    if args.temperatures is not None:
        if len(args.temperatures) != len(args.inputs):
            raise InvalidConfigError(f"{len(args.temperatures)} temperatures for {len(args.inputs)} tables")
        if args.tail_split is None:
            raise InvalidConfigError("The exponent dataset needs --tail_split")
        curves = [rank_curve(load_table(p), min_count=args.min_count) for p in args.inputs]
        hi = args.rank_range[1] if args.rank_range else None
        pairs = exponent_correlation_dataset(list(zip(args.temperatures, curves)), args.tail_split, hi=hi, **fit_kwargs)
        manifest.outputs[str(args.out)] = write_csv(exponent_pairs_frame(pairs), args.out)
        return

    curve = rank_curve(_load_merged(args.inputs), min_count=args.min_count)
    manifest.outputs[str(args.out)] = write_csv(curve.to_frame(), args.out)
    fit = fit_power_law(curve, args.rank_range, **fit_kwargs)
    report = {"fit": fit.to_dict(), "unique_states": len(curve), "total": int(curve.total),
              "min_count": args.min_count}
    if args.tail_split is not None:
        report["tail"] = tail_exponent(curve, args.tail_split, **fit_kwargs).to_dict()
    logger.info(f"alpha = {fit.alpha:.4f} over ranks {fit.rank_range} (r2 = {fit.r_squared:.4f})")
    fit_path = sibling(args.out, ".fit.json")
    write_json(report, fit_path)
    manifest.outputs[str(fit_path)] = 1


def cmd_plateau(args, manifest: RunManifest) -> None:
    b, K = args.b, args.K
    report = bounds_check(b, K)
    t = ideal_plateaus(b, K)
    n = np.arange(len(t), dtype=np.int64)
    d = (b - 1) * n + b
    df = pd.DataFrame(
        {
            "rank": n,
            "plateau": t,
            "probability": 1.0 / (K * np.power(np.int64(b), t)),
            "lower": 1.0 / (K * d),
            "upper": b / (K * d.astype(np.float64)),
        }
    )
    manifest.outputs[str(args.out)] = write_csv(df, args.out)
    summary = report.to_dict()
    summary["probability_sum"] = math.fsum(df["probability"])

    if args.montecarlo > 0:
        mc = ideal_monte_carlo(b, K, args.montecarlo, seed=args.seed, workers=args.workers)
        mc_path = sibling(args.out, ".montecarlo.csv")
        manifest.outputs[str(mc_path)] = write_csv(mc, mc_path)
        summary["montecarlo"] = {
            "games": args.montecarlo,
            "states_seen": len(mc),
            "max_abs_z": float(np.abs(mc["z"]).max()),
        }
    report_path = sibling(args.out, ".json")
    write_json(summary, report_path)
    manifest.outputs[str(report_path)] = 1
    logger.info(f"{report.n_states} ranks, {len(report.violations)} bound violations")


def _load_state_rows(args):
    params = get_game_params(GameId.CONNECT_FOUR, width=args.width, height=args.height)
    rows = []
    for path in args.inputs:
        rows.extend(load_states_csv(path, params, limit=args.limit))
    live = [r for r in rows if not r.state.is_terminal]
    if len(live) < len(rows):
        logger.warning(f"Skipping {len(rows) - len(live)} terminal states")
    return live


def cmd_solve(args, manifest: RunManifest) -> None:
    manifest.inputs = list(args.inputs)
    rows = _load_state_rows(args)
    config = SolverConfig(args.budget, args.max_remaining, args.tt_size, args.fold_symmetry)
    if args.buckets:
        buckets, results = solve_timed([(r.rank, r.state) for r in rows], config=config)
        bucket_path = sibling(args.out, ".buckets.csv")
        frame = pd.DataFrame([b._asdict() for b in buckets], columns=["lo", "hi", "n", "geometric_mean",
                                                                     "geometric_std"])
        manifest.outputs[str(bucket_path)] = write_csv(frame, bucket_path)
    else:
        solver = get_solver(args.budget, args.max_remaining, args.tt_size, args.fold_symmetry)
        results = [solver.solve(r.state) for r in rows]
    annotated = [
        {
            "key_hex": r.key_hex,
            "value": res.value,
            "optimal_actions": res.optimal_actions,
            "nodes": res.nodes_visited,
            "cpu_seconds": res.cpu_time,
        }
        for r, res in zip(rows, results)
    ]
    manifest.outputs[str(args.out)] = write_annotated_csv(annotated, args.out)


def cmd_turns(args, manifest: RunManifest) -> None:
    manifest.inputs = list(args.inputs)
    table = _load_merged(args.inputs)
    curve = rank_curve(table, min_count=args.min_count)
    stats = turn_statistics(table, curve, late_threshold=args.late_threshold, window=args.window)
    df = stats.to_frame()
    if args.top is not None:
        df = df.head(args.top)
    manifest.outputs[str(args.out)] = write_csv(df, args.out)
    summary = {
        "game": table.game.short_name,
        "ranks": len(df),
        "spearman_rank_turn": rank_turn_correlation(stats, args.top) if len(df) > 1 else None,
        "min_mean_turn": float(df["mean_turn"].min()),
        "max_mean_turn": float(df["mean_turn"].max()),
        "late_threshold": args.late_threshold,
        "window": args.window,
    }
    summary_path = sibling(args.out, ".json")
    write_json(summary, summary_path)
    manifest.outputs[str(summary_path)] = 1


def cmd_capture(args, manifest: RunManifest) -> None:
    manifest.inputs = list(args.inputs)
    histogram = capture_difference_histogram(_load_merged(args.inputs), min_count=args.min_count)
    df = pd.DataFrame({"capture_diff": list(histogram), "frequency": list(histogram.values())},
                      columns=["capture_diff", "frequency"])
    manifest.outputs[str(args.out)] = write_csv(df, args.out)


def cmd_scaling(args, manifest: RunManifest) -> None:
    q = QuantizationParams(args.alpha, args.deltaL, args.Linf, args.capacity)
    df = exponent_discrepancy(q, args.ns, args.cutoff_factor)
    manifest.outputs[str(args.out)] = write_csv(df, args.out)
    report = model_curve_report(q, args.ns, args.cutoff_factor)
    report["alpha_N"] = size_scaling_exponent(q.alpha)
    report_path = sibling(args.out, ".json")
    write_json(report, report_path)
    manifest.outputs[str(report_path)] = 1


def cmd_mcts_probe(args, manifest: RunManifest) -> None:
    manifest.inputs = list(args.inputs)
    rows = _load_state_rows(args)
    solver = get_solver(args.budget)
    solved = [(r, solver.solve(r.state)) for r in rows]
    probe = [(i, r, res) for i, (r, res) in enumerate(solved) if not res.skip]
    n_skipped = len(solved) - len(probe)
    logger.info(f"{len(probe)} states with optimal actions, {n_skipped} all-losing states skipped")

    records = []
    for t_index, T in enumerate(args.temperatures):
        cfg = SearchConfig(args.sims, args.c_puct, T, args.rollouts, args.seed)
        evaluator = get_evaluator(args.evaluator, cfg, SolverConfig(args.budget))
        values = []
        for i, r, res in probe:
            rng = np.random.default_rng([args.seed, t_index, i])
            root = mcts_search(r.state, evaluator, cfg, rng)
            pi = temperature_policy(root.visit_counts, T, root.actions)
            values.append(optimal_move_probability(pi, res.optimal_actions))
        values = np.asarray(values, dtype=np.float64)
        stderr = float(values.std(ddof=1) / math.sqrt(len(values))) if len(values) > 1 else float("nan")
        records.append(
            {
                "temperature": T,
                "mean_p_optimal": float(values.mean()) if len(values) else float("nan"),
                "stderr": stderr,
                "n_states": len(values),
                "n_skipped": n_skipped,
            }
        )
        logger.info(f"T={T}: p(optimal) = {records[-1]['mean_p_optimal']:.4f} +- {stderr:.4f}")
    manifest.outputs[str(args.out)] = write_csv(pd.DataFrame(records), args.out)


COMMANDS = {
    "simulate": cmd_simulate,
    "zipf": cmd_zipf,
    "plateau": cmd_plateau,
    "solve": cmd_solve,
    "turns": cmd_turns,
    "capture": cmd_capture,
    "scaling": cmd_scaling,
    "mcts-probe": cmd_mcts_probe,
}


def run(args) -> int:
    for arg in vars(args):
        if arg not in NOT_ECHOED:
            logger.info("USING:: {} = {}".format(arg, getattr(args, arg)))
    config = {k: v for k, v in vars(args).items() if k not in NOT_ECHOED + ("git",)}
    manifest = RunManifest(args.command, config, args.seed, __version__, args.git,
                           started=datetime.now(timezone.utc).isoformat())
    start_time = time.time()
    COMMANDS[args.command](args, manifest)
    manifest.duration_seconds = time.time() - start_time
    path = manifest.write(args.out)
    logger.info(f"Manifest written to {path}")
    return int(ExitCode.OK)


def main(argv: Optional[List[str]] = None) -> int:
    args = parse_args(argv)
    try:
        args, _ = setup_environment_and_adapt_args(args)
        sys.excepthook = handle_exception
        TerminationHandler(args)
        return run(args)
    except GameZipfError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return int(e.exit_code)
    except OSError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return int(ExitCode.IO_ERROR)
