from __future__ import annotations

import math

import numpy as np
import pytest
from scipy.special import zeta

from game_zipf.errors import InvalidConfigError
from game_zipf.scalinglaws import (
    QuantizationParams,
    bradley_terry_win_probability,
    brute_force_quanta_loss,
    elo_to_gamma,
    expected_loss_quanta,
    expected_loss_size,
    exponent_correlation_dataset,
    exponent_discrepancy,
    exponent_pairs_frame,
    gamma_elo_convert,
    gamma_to_elo,
    model_curve_report,
    riemann_zeta,
    scaling_law_elo,
    size_scaling_exponent,
    zipf_alpha_from_scaling,
)
from game_zipf.zipfstats import RankCurve

ZETA_3 = 1.2020569031595942


class TestZeta:
    def test_known_values(self):
        assert riemann_zeta(2.0) == pytest.approx(math.pi**2 / 6, rel=1e-10)
        assert riemann_zeta(4.0) == pytest.approx(math.pi**4 / 90, rel=1e-10)
        assert riemann_zeta(3.0) == pytest.approx(ZETA_3, abs=1e-9)

    @pytest.mark.parametrize("s", [1.5, 2.5, 3.5, 5.0])
    def test_agrees_with_scipy(self, s):
        assert riemann_zeta(s) == pytest.approx(float(zeta(s, 1)), rel=1e-9)

    def test_domain(self):
        with pytest.raises(InvalidConfigError):
            riemann_zeta(1.0)


class TestQuantizationModel:
    def test_reference_value(self):
        q = QuantizationParams(alpha=2.0)
        assert expected_loss_quanta(1, q) == pytest.approx(1 / (2 * ZETA_3), rel=1e-9)
        assert expected_loss_quanta(1, q) == pytest.approx(0.41597, abs=1e-4)

    def test_scaling_ratio(self):
        q = QuantizationParams(alpha=2.0)
        assert expected_loss_quanta(4, q) / expected_loss_quanta(1, q) == pytest.approx(0.25)

    def test_no_loss_per_quantum(self):
        assert expected_loss_quanta(10, QuantizationParams(alpha=2.0, delta_L=0.0, L_inf=0.3)) == 0.3

    def test_decreasing_towards_the_floor(self):
        q = QuantizationParams(alpha=2.0, L_inf=0.1)
        losses = [expected_loss_quanta(n, q) for n in (1, 10, 100, 10**6)]
        assert all(a > b for a, b in zip(losses, losses[1:]))
        assert losses[-1] - q.L_inf < 1e-3

    def test_capacity(self):
        q = QuantizationParams(alpha=1.5, capacity=10.0)
        assert expected_loss_size(1000, q) == pytest.approx(expected_loss_quanta(100, q))

    def test_degenerate_alpha(self):
        with pytest.raises(InvalidConfigError):
            expected_loss_quanta(10, QuantizationParams(alpha=1.0))
        with pytest.raises(InvalidConfigError):
            QuantizationParams(alpha=-1.0)


class TestBruteForce:
    def test_nothing_learned_leaves_the_full_loss(self):
        q = QuantizationParams(alpha=2.0, delta_L=1.0, L_inf=0.5)
        tail = brute_force_quanta_loss(0, q)
        assert tail.lower - 1e-12 <= 1.5 <= tail.upper + 1e-12

    @pytest.mark.parametrize("alpha,n", [(0.5, 10), (1.0, 100), (2.0, 10), (3.0, 1000)])
    def test_bounds_contain_the_limit(self, alpha, n):
        q = QuantizationParams(alpha=alpha)
        s = alpha + 1
        head = math.fsum(k**-s for k in range(1, n + 1))
        limit = (riemann_zeta(s) - head) / riemann_zeta(s)
        tail = brute_force_quanta_loss(n, q)
        assert tail.lower <= tail.upper
        assert tail.lower - 1e-12 <= limit <= tail.upper + 1e-12

    def test_large_n_matches_the_asymptotic_form(self):
        q = QuantizationParams(alpha=1.5)
        n = 100
        asymptotic = n**-q.alpha / (q.alpha * riemann_zeta(q.alpha + 1))
        assert brute_force_quanta_loss(n, q).value == pytest.approx(asymptotic, rel=0.02)

    def test_partial_sum_grows_with_the_cutoff(self):
        q = QuantizationParams(alpha=1.0)
        values = [brute_force_quanta_loss(10, q, cutoff=c).value for c in (100, 1000, 10**4)]
        assert values[0] < values[1] < values[2]

    def test_cutoff_has_to_cover_the_head(self):
        with pytest.raises(InvalidConfigError):
            brute_force_quanta_loss(100, QuantizationParams(alpha=2.0), cutoff=50)

    def test_discrepancy_slopes(self):
        df = exponent_discrepancy(QuantizationParams(alpha=2.0), [100, 1000, 10000])
        np.testing.assert_allclose(df["formula_slope"].iloc[1:], -1.0, atol=1e-9)
        np.testing.assert_allclose(df["bruteforce_slope"].iloc[1:], -2.0, atol=0.01)
        assert np.isnan(df["formula_slope"].iloc[0])

    def test_report(self):
        report = model_curve_report(QuantizationParams(alpha=2.0), [1, 10])
        assert report["alpha"] == 2.0
        assert [p[0] for p in report["points"]] == [1, 10]


class TestExponents:
    def test_relation(self):
        assert size_scaling_exponent(1.5) == pytest.approx(0.5)
        assert zipf_alpha_from_scaling(size_scaling_exponent(2.3)) == pytest.approx(2.3)
        with pytest.raises(InvalidConfigError):
            size_scaling_exponent(float("inf"))

    def test_correlation_dataset(self):
        curve = RankCurve(1000.0 * np.arange(1, 2001, dtype=np.float64) ** -1.5)
        pairs = exponent_correlation_dataset([(0.5, curve), (1.0, curve)], split_rank=100, scaling={1.0: 0.4})
        assert pairs[0].zipf_alpha == pytest.approx(pairs[1].zipf_alpha)
        assert pairs[0].zipf_alpha == pytest.approx(1.5, abs=1e-6)
        assert np.isnan(pairs[0].scaling_alpha_N)
        assert pairs[0].metadata["scaling_source"] == "external"
        assert pairs[1].scaling_alpha_N == 0.4
        df = exponent_pairs_frame(pairs)
        assert list(df["temperature"]) == [0.5, 1.0]

    def test_correlation_dataset_needs_two_runs(self):
        curve = RankCurve(np.arange(100, 0, -1, dtype=np.float64))
        with pytest.raises(InvalidConfigError):
            exponent_correlation_dataset([(1.0, curve)], split_rank=10)


class TestElo:
    def test_conversions(self):
        assert gamma_to_elo(1.0) == 0.0
        assert gamma_to_elo(10.0) == pytest.approx(400.0)
        for gamma in (0.01, 0.5, 3.0, 1e4):
            assert elo_to_gamma(gamma_to_elo(gamma, anchor=1500), anchor=1500) == pytest.approx(gamma, rel=1e-9)

    def test_convert_exactly_one(self):
        assert gamma_elo_convert(elo=400.0) == pytest.approx(10.0)
        with pytest.raises(InvalidConfigError):
            gamma_elo_convert()
        with pytest.raises(InvalidConfigError):
            gamma_elo_convert(gamma=1.0, elo=0.0)
        with pytest.raises(InvalidConfigError):
            gamma_to_elo(0.0)

    def test_bradley_terry(self):
        assert bradley_terry_win_probability(2.0, 2.0) == 0.5
        assert bradley_terry_win_probability(3.0, 1.0) == pytest.approx(0.75)

    def test_scaling_law_elo(self):
        assert scaling_law_elo(10.0, 1.0) == pytest.approx(400.0)
        assert scaling_law_elo(100.0, 0.5, anchor=100.0) == pytest.approx(500.0)
