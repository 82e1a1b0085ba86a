from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.stats import linregress

from game_zipf.errors import DataFormatError, InvalidConfigError, StateSpaceTooLarge
from game_zipf.utils.helper import timeit

logger = logging.getLogger("game_zipf")

MIN_FIT_POINTS = 10
DEFAULT_RESAMPLE_POINTS = 200
MAX_IDEAL_STATES = 10**7


@dataclass(frozen=True, eq=False)
class RankCurve:
    """
    Frequencies sorted in descending order; rank n (1-indexed) is freqs[n - 1].
    Ties are broken by ascending observation key, so the order is deterministic.
    `keys` and `mean_turns` are aligned with `freqs` when the curve was built from a table.
    """

    freqs: np.ndarray
    keys: Optional[Tuple[bytes, ...]] = None
    mean_turns: Optional[np.ndarray] = None

    def __post_init__(self):
        freqs = np.asarray(self.freqs)
        object.__setattr__(self, "freqs", freqs)
        if freqs.ndim != 1 or len(freqs) == 0:
            raise DataFormatError("A rank curve needs at least one frequency")
        if np.any(np.diff(freqs) > 0):
            raise DataFormatError("Rank curve frequencies have to be non-increasing")
        if freqs.sum() <= 0:
            raise DataFormatError("Rank curve total has to be positive")

    @classmethod
    def from_frequencies(cls, freqs: Sequence[float]) -> "RankCurve":
        return cls(np.sort(np.asarray(freqs))[::-1].copy())

    def __len__(self) -> int:
        return len(self.freqs)

    @property
    def total(self) -> float:
        return self.freqs.sum()

    @property
    def ranks(self) -> np.ndarray:
        return np.arange(1, len(self.freqs) + 1)

    def cumulative_fraction(self) -> np.ndarray:
        return np.cumsum(self.freqs) / self.total

    def to_frame(self) -> pd.DataFrame:
        df = pd.DataFrame({"rank": self.ranks, "frequency": self.freqs})
        df["mean_turn"] = self.mean_turns if self.mean_turns is not None else np.nan
        df["cumulative_fraction"] = self.cumulative_fraction()
        return df


@dataclass(frozen=True)
class PowerLawFit:
    """S(n) = exp(log_intercept) * n^-alpha fitted over ranks [lo, hi] from n_points points."""

    alpha: float
    log_intercept: float
    r_squared: float
    rank_range: Tuple[int, int]
    n_points: int

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "intercept": self.log_intercept,
            "r2": self.r_squared,
            "lo": int(self.rank_range[0]),
            "hi": int(self.rank_range[1]),
            "n_points": int(self.n_points),
        }


def to_one_indexed(n):
    """Zero-indexed plateau rank (ideal-game formulas) to the 1-indexed rank used by the fits."""
    return n + 1


def to_zero_indexed(rank):
    return rank - 1


def rank_curve(table, min_count: int = 1) -> RankCurve:
    """Sorts the table entries by descending count, ties by ascending key. `min_count` drops rarer states."""
    items = [(k, e) for k, e in table.entries.items() if e.count >= min_count]
    if not items:
        raise DataFormatError(f"No states with count >= {min_count} in the table")
    items.sort(key=lambda kv: (-kv[1].count, kv[0]))
    return RankCurve(
        np.array([e.count for _, e in items], dtype=np.int64),
        tuple(k for k, _ in items),
        np.array([e.turn_sum / e.count for _, e in items]),
    )


def tail_plateau_start(curve: RankCurve) -> int:
    """1-indexed rank where the trailing run of equal frequencies starts."""
    last = curve.freqs[-1]
    idx = len(curve.freqs) - 1
    while idx > 0 and curve.freqs[idx - 1] == last:
        idx -= 1
    return idx + 1


def log_uniform_ranks(lo: int, hi: int, points: int) -> np.ndarray:
    """Unique integer ranks spaced evenly in log(rank), so the dense high ranks do not dominate the fit."""
    if points is None or hi - lo + 1 <= points:
        return np.arange(lo, hi + 1)
    return np.unique(np.rint(np.logspace(math.log10(lo), math.log10(hi), points)).astype(np.int64))


def fit_power_law(
    curve: RankCurve,
    rank_range: Optional[Tuple[int, int]] = None,
    resample: Optional[int] = DEFAULT_RESAMPLE_POINTS,
    include_tail_plateau: bool = False,
) -> PowerLawFit:
    """
    Least-squares line through (ln n, ln S(n)) over log-uniformly resampled ranks; alpha = -slope.

    Args:
        curve: the rank curve.
        rank_range: inclusive 1-indexed ranks [lo, hi]. Defaults to the whole curve.
        resample: number of log-spaced ranks to fit on, None fits every rank in range.
        include_tail_plateau: keep the trailing run of equal (typically count-1) frequencies, which only
            reflects the finite sample size.
    """
    lo, hi = (1, len(curve)) if rank_range is None else (int(rank_range[0]), int(rank_range[1]))
    if lo < 1 or hi > len(curve) or lo >= hi:
        raise InvalidConfigError(f"Rank range [{lo}, {hi}] does not fit a curve of length {len(curve)}")
    if not include_tail_plateau:
        plateau = tail_plateau_start(curve)
        if plateau < len(curve):
            hi = min(hi, plateau - 1)
    if hi - lo + 1 < MIN_FIT_POINTS:
        raise DataFormatError(f"Only {max(hi - lo + 1, 0)} ranks in [{lo}, {hi}], at least {MIN_FIT_POINTS} needed")

    ranks = log_uniform_ranks(lo, hi, resample)
    freqs = curve.freqs[ranks - 1].astype(np.float64)
    if np.any(freqs <= 0):
        raise DataFormatError("Power-law fits need positive frequencies")
    if len(ranks) < MIN_FIT_POINTS:
        raise DataFormatError(f"Only {len(ranks)} distinct ranks after resampling, at least {MIN_FIT_POINTS} needed")
    fit = linregress(np.log(ranks), np.log(freqs))
    result = PowerLawFit(float(-fit.slope), float(fit.intercept), float(fit.rvalue**2), (lo, hi), len(ranks))
    logger.debug(f"Power-law fit over [{lo}, {hi}]: alpha={result.alpha:.4f}, r2={result.r_squared:.4f}")
    return result


def tail_exponent(curve: RankCurve, split_rank: int, hi: Optional[int] = None, **kwargs) -> PowerLawFit:
    """Power-law fit restricted to ranks above `split_rank`."""
    if split_rank < 1 or split_rank >= len(curve) - MIN_FIT_POINTS:
        raise DataFormatError(f"Split rank {split_rank} leaves fewer than {MIN_FIT_POINTS} tail ranks")
    return fit_power_law(curve, (split_rank + 1, len(curve) if hi is None else hi), **kwargs)


def _check_ideal_params(b: int, K: int) -> None:
    if int(b) != b or b < 2:
        raise InvalidConfigError(f"Branching factor b has to be an integer >= 2, got {b}")
    if int(K) != K or K < 1:
        raise InvalidConfigError(f"Game length K has to be an integer >= 1, got {K}")


def ideal_state_count(b: int, K: int) -> int:
    """States of the ideal game: sum of b^t for t = 1..K = (b^(K+1) - b) / (b - 1)."""
    _check_ideal_params(b, K)
    return (b ** (K + 1) - b) // (b - 1)


def plateau_of_rank(n: int, b: int) -> int:
    """Largest t with b^t <= (b - 1) n + b, i.e. floor(log((b - 1) n + b) / log b) in exact integers."""
    m = (b - 1) * n + b
    t, power = 0, 1
    while power * b <= m:
        power *= b
        t += 1
    return t


def ideal_probability(n: int, b: int, K: int) -> float:
    """Probability of the state at zero-indexed rank n: 1 / (K b^t(n))."""
    total = ideal_state_count(b, K)
    if int(n) != n or not 0 <= n < total:
        raise InvalidConfigError(f"Rank {n} outside [0, {total}) for b={b}, K={K}")
    t = plateau_of_rank(int(n), b)
    return 1.0 / (K * b**t)


def plateau_start(t: int, b: int) -> int:
    """Zero-indexed rank of the first state of plateau t."""
    if int(t) != t or t < 1:
        raise InvalidConfigError(f"Plateau index t has to be >= 1, got {t}")
    _check_ideal_params(b, 1)
    return (b**t - b) // (b - 1)


def plateau_widths(b: int, K: int) -> List[int]:
    _check_ideal_params(b, K)
    return [b**t for t in range(1, K + 1)]


def _check_state_space(b: int, K: int) -> int:
    total = ideal_state_count(b, K)
    if total > MAX_IDEAL_STATES:
        raise StateSpaceTooLarge(f"b={b}, K={K} has {total} states, the limit is {MAX_IDEAL_STATES}")
    return total


def ideal_plateaus(b: int, K: int) -> np.ndarray:
    """Plateau index t of every zero-indexed rank."""
    _check_state_space(b, K)
    return np.repeat(np.arange(1, K + 1, dtype=np.int64), plateau_widths(b, K))


def ideal_distribution(b: int, K: int) -> np.ndarray:
    """Exact probabilities of all ranks, highest first."""
    t = ideal_plateaus(b, K)
    return 1.0 / (K * np.power(np.int64(b), t))


@dataclass(frozen=True)
class BoundsReport:
    b: int
    K: int
    n_states: int
    violations: Tuple[int, ...]
    max_lower_slack: float
    max_upper_slack: float
    equality_ranks: Tuple[int, ...]
    plateau_starts: Tuple[int, ...]
    log_form_mismatches: int

    @property
    def equality_at_plateau_starts(self) -> bool:
        return self.equality_ranks == self.plateau_starts

    def to_dict(self) -> dict:
        return {
            "b": self.b,
            "K": self.K,
            "n_states": self.n_states,
            "violations": len(self.violations),
            "violating_ranks": list(self.violations[:100]),
            "max_lower_slack": self.max_lower_slack,
            "max_upper_slack": self.max_upper_slack,
            "equality_at_plateau_starts": self.equality_at_plateau_starts,
            "log_form_mismatches": self.log_form_mismatches,
        }


@timeit
def bounds_check(b: int, K: int) -> BoundsReport:
    """
    Checks 1/(K((b-1)n + b)) <= P(n) < b/(K((b-1)n + b)) at every zero-indexed rank n.

    The comparison is done in integers (b^t <= (b-1)n + b < b^(t+1)), so equality at the plateau starts is exact.
    Slacks are reported as P - lower and upper - P.
    """
    n_states = _check_state_space(b, K)
    t = ideal_plateaus(b, K)
    n = np.arange(n_states, dtype=np.int64)
    d = (b - 1) * n + b
    power = np.power(np.int64(b), t)
    ok = (power <= d) & (d < power * b)
    violations = tuple(int(i) for i in np.flatnonzero(~ok))

    p = 1.0 / (K * power)
    lower = 1.0 / (K * d)
    upper = b / (K * d.astype(np.float64))
    equality = tuple(int(i) for i in np.flatnonzero(power == d))
    starts = tuple(plateau_start(tt, b) for tt in range(1, K + 1))
    log_form = np.floor(np.log(d) / math.log(b)).astype(np.int64)

    report = BoundsReport(
        b,
        K,
        n_states,
        violations,
        float(np.max(p - lower)),
        float(np.max(upper - p)),
        equality,
        starts,
        int(np.count_nonzero(log_form != t)),
    )
    logger.info(f"Bounds check b={b}, K={K}: {n_states} ranks, {len(violations)} violations")
    return report


def ideal_monte_carlo(b: int, K: int, games: int, seed: int = 0, workers: int = 1) -> pd.DataFrame:
    """
    Plays `games` uniform toy games and compares every observed state with its exact probability.

    A state reached after t moves appears at most once per game, so its count is Binomial(games, b^-t);
    the `z` column is the binomial z-score of the observed count.
    """
    from game_zipf.definitions import GameId, PolicyKind
    from game_zipf.engines import ToyParams
    from game_zipf.harness import HarnessConfig, run_selfplay

    _check_state_space(b, K)
    cfg = HarnessConfig(GameId.TOY_IDEAL, ToyParams(b, K), PolicyKind.UNIFORM, num_games=games, seed=seed,
                        workers=workers)
    table = run_selfplay(cfg)
    curve = rank_curve(table)
    # key = game byte + move bytes + side-to-move byte
    t = np.array([len(k) - 2 for k in curve.keys], dtype=np.int64)
    q = 1.0 / np.power(np.float64(b), t)
    expected_count = games * q
    df = pd.DataFrame(
        {
            "rank": curve.ranks,
            "key_hex": [k.hex() for k in curve.keys],
            "turn": t,
            "count": curve.freqs,
            "empirical": curve.freqs / (games * K),
            "expected": q / K,
            "z": (curve.freqs - expected_count) / np.sqrt(expected_count * (1.0 - q)),
        }
    )
    logger.info(
        f"Monte-Carlo b={b}, K={K}: {len(df)} of {ideal_state_count(b, K)} states seen, "
        f"max |z| = {np.abs(df['z']).max():.2f}"
    )
    return df
