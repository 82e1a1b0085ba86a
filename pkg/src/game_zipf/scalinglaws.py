from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, List, Mapping, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from game_zipf.errors import InvalidConfigError
from game_zipf.utils.helper import timeit

logger = logging.getLogger("game_zipf")

ZETA_TERMS = 10**6
ELO_SCALE = 400.0
SUM_CHUNK = 10**6
EXTERNAL_SOURCE = "external"


@dataclass(frozen=True)
class QuantizationParams:
    """
    Args:
        alpha: Zipf exponent of the quanta frequencies.
        delta_L: loss drop per learned quantum.
        L_inf: irreducible loss.
        capacity: parameters needed per quantum, so a model of N parameters learns n = N / capacity quanta.
    """

    alpha: float
    delta_L: float = 1.0
    L_inf: float = 0.0
    capacity: float = 1.0

    def __post_init__(self):
        if not self.alpha > 0 or math.isinf(self.alpha):
            raise InvalidConfigError(f"alpha has to be a finite positive number, got {self.alpha}")
        if self.delta_L < 0 or math.isnan(self.delta_L):
            raise InvalidConfigError(f"delta_L has to be >= 0, got {self.delta_L}")
        if self.L_inf < 0 or math.isnan(self.L_inf):
            raise InvalidConfigError(f"L_inf has to be >= 0, got {self.L_inf}")
        if not self.capacity > 0:
            raise InvalidConfigError(f"capacity has to be positive, got {self.capacity}")


@dataclass(frozen=True)
class ExponentPair:
    """Zipf (tail) exponent of one run next to its size-scaling exponent; the latter may come from elsewhere."""

    zipf_alpha: float
    scaling_alpha_N: float
    metadata: Dict[str, object] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"zipf_alpha": self.zipf_alpha, "scaling_alpha_N": self.scaling_alpha_N, **self.metadata}


class TailSum(NamedTuple):
    """Partial tail sum plus the interval that contains the cutoff -> infinity limit."""

    value: float
    lower: float
    upper: float


@lru_cache(maxsize=128)
def _zeta(s: float) -> float:
    k = np.arange(1, ZETA_TERMS + 1, dtype=np.float64)
    partial = float(np.sum(k**-s))
    n = float(ZETA_TERMS)
    # Euler-Maclaurin remainder of the sum over k > N
    return partial + n ** (1 - s) / (s - 1) - 0.5 * n**-s + s * n ** (-s - 1) / 12.0


@timeit
def riemann_zeta(s: float) -> float:
    """zeta(s) for real s > 1 from a 10^6 term partial sum plus the integral remainder."""
    if not s > 1:
        raise InvalidConfigError(f"riemann_zeta needs s > 1, got {s}")
    return _zeta(float(s))


def expected_loss_quanta(n: float, q: QuantizationParams) -> float:
    """L(n) = delta_L / (alpha zeta(alpha + 1)) n^(1 - alpha) + L_inf for a model that learned n quanta."""
    if not n >= 1:
        raise InvalidConfigError(f"n has to be >= 1, got {n}")
    if q.alpha == 1:
        raise InvalidConfigError("The loss formula is degenerate at alpha = 1")
    return q.delta_L / (q.alpha * riemann_zeta(q.alpha + 1)) * n ** (1 - q.alpha) + q.L_inf


def expected_loss_size(N: float, q: QuantizationParams) -> float:
    """Loss of a model with N parameters, n = N / capacity quanta."""
    return expected_loss_quanta(N / q.capacity, q)


def _power_sum(lo: int, hi: int, exponent: float) -> float:
    """sum_{k=lo}^{hi} k^-exponent in chunks, smallest terms first."""
    total = 0.0
    stop = hi + 1
    while stop > lo:
        start = max(lo, stop - SUM_CHUNK)
        k = np.arange(start, stop, dtype=np.float64)
        total += float(np.sum(k**-exponent))
        stop = start
    return total


def brute_force_quanta_loss(n: int, q: QuantizationParams, cutoff: Optional[int] = None) -> TailSum:
    """
    Loss left after learning the n most frequent quanta when quantum k has frequency k^-(alpha+1) / zeta(alpha+1):
    delta_L * sum_{k=n+1}^{cutoff} k^-(alpha+1) / zeta(alpha+1) + L_inf.

    The neglected tail beyond the cutoff lies between (cutoff+1)^-alpha / alpha and cutoff^-alpha / alpha,
    which gives the lower and upper ends of the returned interval.
    """
    if int(n) != n or n < 0:
        raise InvalidConfigError(f"n has to be a nonnegative integer, got {n}")
    n = int(n)
    cutoff = max(10 * n, ZETA_TERMS) if cutoff is None else int(cutoff)
    if cutoff < max(10 * n, 1):
        raise InvalidConfigError(f"cutoff has to be >= 10 n = {10 * n}, got {cutoff}")
    s = q.alpha + 1
    norm = q.delta_L / riemann_zeta(s)
    partial = _power_sum(n + 1, cutoff, s) if cutoff > n else 0.0
    value = norm * partial + q.L_inf
    lower = value + norm * (cutoff + 1) ** -q.alpha / q.alpha
    upper = value + norm * cutoff**-q.alpha / q.alpha
    return TailSum(value, lower, upper)


def size_scaling_exponent(zipf_alpha: float) -> float:
    """alpha_N = alpha - 1."""
    if not math.isfinite(zipf_alpha):
        raise InvalidConfigError(f"zipf_alpha has to be finite, got {zipf_alpha}")
    return zipf_alpha - 1.0


def zipf_alpha_from_scaling(alpha_N: float) -> float:
    if not math.isfinite(alpha_N):
        raise InvalidConfigError(f"alpha_N has to be finite, got {alpha_N}")
    return alpha_N + 1.0


def gamma_to_elo(gamma: float, anchor: float = 0.0) -> float:
    """Elo = 400 log10(gamma) + anchor."""
    if not gamma > 0:
        raise InvalidConfigError(f"Bradley-Terry strength has to be positive, got {gamma}")
    return ELO_SCALE * math.log10(gamma) + anchor


def elo_to_gamma(elo: float, anchor: float = 0.0) -> float:
    return 10.0 ** ((elo - anchor) / ELO_SCALE)


def gamma_elo_convert(gamma: Optional[float] = None, elo: Optional[float] = None, anchor: float = 0.0) -> float:
    """Converts whichever of gamma or elo is given into the other."""
    if (gamma is None) == (elo is None):
        raise InvalidConfigError("Pass exactly one of gamma or elo")
    if gamma is not None:
        return gamma_to_elo(gamma, anchor)
    return elo_to_gamma(elo, anchor)


def bradley_terry_win_probability(gamma_a: float, gamma_b: float) -> float:
    if not (gamma_a > 0 and gamma_b > 0):
        raise InvalidConfigError("Bradley-Terry strengths have to be positive")
    return gamma_a / (gamma_a + gamma_b)


def scaling_law_elo(N: float, alpha_N: float, anchor: float = 0.0, N_ref: float = 1.0) -> float:
    """Elo of a model of size N when its strength grows as gamma = (N / N_ref)^alpha_N."""
    if not (N > 0 and N_ref > 0):
        raise InvalidConfigError("Model sizes have to be positive")
    return ELO_SCALE * alpha_N * math.log10(N / N_ref) + anchor


def exponent_correlation_dataset(
    runs: Sequence[Tuple[float, object]],
    split_rank: int,
    hi: Optional[int] = None,
    scaling: Optional[Mapping[float, float]] = None,
    **fit_kwargs,
) -> List[ExponentPair]:
    """
    One row per (temperature, RankCurve) run with its tail Zipf exponent. The scaling exponent comes from
    `scaling` (keyed by temperature) when given; otherwise it is NaN and the row is marked as external.
    """
    from game_zipf.zipfstats import tail_exponent

    if len(runs) < 2:
        raise InvalidConfigError(f"At least two runs are needed, got {len(runs)}")
    pairs = []
    for temperature, curve in runs:
        fit = tail_exponent(curve, split_rank, hi=hi, **fit_kwargs)
        if scaling is not None and temperature in scaling:
            alpha_N, source = float(scaling[temperature]), "provided"
        else:
            alpha_N, source = float("nan"), EXTERNAL_SOURCE
        metadata = {
            "temperature": float(temperature),
            "r2": fit.r_squared,
            "lo": fit.rank_range[0],
            "hi": fit.rank_range[1],
            "n_points": fit.n_points,
            "unique_states": len(curve),
            "scaling_source": source,
        }
        pairs.append(ExponentPair(fit.alpha, alpha_N, metadata))
    return pairs


def exponent_pairs_frame(pairs: Sequence[ExponentPair]) -> pd.DataFrame:
    return pd.DataFrame([p.to_dict() for p in pairs])


def _local_slopes(ns: np.ndarray, values: np.ndarray) -> np.ndarray:
    slopes = np.full(len(ns), np.nan)
    if len(ns) > 1:
        slopes[1:] = np.diff(np.log(values)) / np.diff(np.log(ns))
    return slopes


def exponent_discrepancy(q: QuantizationParams, ns: Sequence[int], cutoff_factor: int = 10) -> pd.DataFrame:
    """
    Closed-form loss next to the tail-sum loss with the local log-log slopes of L - L_inf.
    The closed form falls as n^(1 - alpha) while the tail sum falls as n^-alpha; both are reported as they are.
    """
    ns = np.asarray(sorted(int(n) for n in ns), dtype=np.int64)
    if len(ns) == 0 or ns[0] < 1:
        raise InvalidConfigError("ns has to hold positive integers")
    formula = np.array([expected_loss_quanta(int(n), q) for n in ns])
    tails = [brute_force_quanta_loss(int(n), q, cutoff=max(cutoff_factor * int(n), ZETA_TERMS)) for n in ns]
    brute = np.array([t.value for t in tails])
    df = pd.DataFrame(
        {
            "n": ns,
            "L_formula": formula,
            "L_bruteforce": brute,
            "L_bruteforce_lower": [t.lower for t in tails],
            "L_bruteforce_upper": [t.upper for t in tails],
        }
    )
    if q.delta_L > 0:
        df["formula_slope"] = _local_slopes(ns, formula - q.L_inf)
        midpoint = (df["L_bruteforce_lower"].to_numpy() + df["L_bruteforce_upper"].to_numpy()) / 2
        df["bruteforce_slope"] = _local_slopes(ns, midpoint - q.L_inf)
    return df


def model_curve_report(q: QuantizationParams, ns: Sequence[int], cutoff_factor: int = 10) -> dict:
    """JSON-ready {alpha, delta_L, L_inf, points: [(n, L_formula, L_bruteforce)]}."""
    df = exponent_discrepancy(q, ns, cutoff_factor)
    return {
        "alpha": q.alpha,
        "delta_L": q.delta_L,
        "L_inf": q.L_inf,
        "points": [(int(n), float(f), float(b)) for n, f, b in zip(df["n"], df["L_formula"], df["L_bruteforce"])],
    }
