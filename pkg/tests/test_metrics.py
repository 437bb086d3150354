import numpy as np
import pytest

from filmsim.cascade import objective
from filmsim.metrics import (
    LinkBudget,
    ber_monte_carlo,
    dbm_to_watt,
    nmse,
    sum_rate,
    uniform_budget,
    water_filling,
)


class TestNmse:
    def test_exact_fit(self):
        assert nmse(1.7 * np.eye(4), 1.7) == 0.0

    def test_zero_channel_normalizes_to_one(self):
        assert nmse(np.zeros((4, 4)), 0.3) == pytest.approx(1.0)

    def test_linear_in_deviation_power(self, rng):
        alpha, k = 0.8, 4
        e = rng.standard_normal((k, k)) + 1j * rng.standard_normal((k, k))
        e *= np.sqrt(0.01 * alpha**2 * k) / np.linalg.norm(e)
        assert nmse(alpha * np.eye(k) + e, alpha) == pytest.approx(0.01, rel=1e-10)

    def test_identity_with_objective(self, rng):
        for _ in range(20):
            k = int(rng.integers(1, 6))
            g = rng.standard_normal((k, k)) + 1j * rng.standard_normal((k, k))
            alpha = rng.uniform(0.1, 3.0)
            assert nmse(g, alpha) * alpha**2 * k == pytest.approx(
                objective(g, alpha), rel=1e-12)

    def test_zero_alpha_rejected(self):
        with pytest.raises(ValueError):
            nmse(np.eye(2), 0.0)


class TestSumRate:
    def test_perfect_fit_meets_simplified_bound(self):
        alpha, k, p_t, sig = 2e-6, 4, 1.0, 1e-15
        rep = sum_rate(alpha * np.eye(k), alpha, uniform_budget(p_t, sig, k))
        expected = k * np.log2(1 + alpha**2 * p_t / (k * sig))
        assert rep.sum_rate == pytest.approx(expected, rel=1e-12)
        assert rep.upper_bound == pytest.approx(expected, rel=1e-12)

    def test_vanishing_gain_kills_rate(self):
        rep = sum_rate(np.zeros((3, 3)), 0.0, uniform_budget(1.0, 1e-12, 3))
        assert rep.sum_rate == 0.0

    def test_deviation_strictly_below_bound(self, rng):
        k = 4
        g = 1.0 * np.eye(k) + 0.05 * (rng.standard_normal((k, k))
                                      + 1j * rng.standard_normal((k, k)))
        rep = sum_rate(g, 1.0, uniform_budget(2.0, 1e-10, k))
        assert rep.sum_rate < rep.upper_bound
        assert rep.sum_rate == pytest.approx(np.sum(rep.per_user_rates), rel=1e-14)

    def test_interference_uses_full_row(self):
        # diagonal mismatch alone must already cost rate
        g = np.diag([1.0, 1.2])
        rep = sum_rate(g, 1.0, uniform_budget(1.0, 1e-12, 2))
        c_row1 = abs(1.2 - 1.0) ** 2
        expected = np.log2(1 + 0.5 / (0.0 + 1e-12)) + np.log2(1 + 0.5 / (c_row1 + 1e-12))
        assert rep.sum_rate == pytest.approx(expected, rel=1e-12)


class TestWaterFilling:
    def test_equal_noise_uniform_split(self):
        p = water_filling(2e-6, np.full(4, 1e-15), 1.0)
        np.testing.assert_allclose(p, 0.25, rtol=1e-12)

    def test_weak_user_shut_off(self):
        alpha = 1.0
        sigma2 = np.array([1e-6, 1e-6, 10.0])
        p = water_filling(alpha, sigma2, 1.0)
        assert p[2] == 0.0
        np.testing.assert_allclose(p[:2], 0.5, rtol=1e-9)

    def test_kkt_on_random_instances(self, rng):
        for _ in range(25):
            k = int(rng.integers(2, 8))
            alpha = rng.uniform(1e-6, 1.0)
            sigma2 = rng.uniform(1e-16, 1e-10, k)
            p_t = rng.uniform(0.1, 10.0)
            p = water_filling(alpha, sigma2, p_t)
            assert np.all(p >= 0)
            assert p.sum() == pytest.approx(p_t, rel=1e-12)
            active = p > 0
            levels = p[active] + sigma2[active] / alpha**2
            assert np.ptp(levels) <= 1e-9 * levels.mean()
            # inactive users justify their exclusion
            if np.any(~active):
                assert np.min(sigma2[~active] / alpha**2) >= levels.mean() * (1 - 1e-9)

    def test_validation(self):
        with pytest.raises(ValueError):
            water_filling(0.0, np.array([1e-12]), 1.0)
        with pytest.raises(ValueError):
            water_filling(1.0, np.array([1e-12]), 0.0)


class TestBoundDominance:
    def test_fuzz(self, rng):
        for _ in range(500):
            k = int(rng.integers(1, 7))
            g = rng.standard_normal((k, k)) + 1j * rng.standard_normal((k, k))
            alpha = rng.uniform(-2.0, 2.0)
            p_t = rng.uniform(0.01, 10.0)
            sigma2 = rng.uniform(1e-14, 1e-8, k)
            powers = rng.uniform(0, 1, k)
            powers *= p_t / powers.sum()
            budget = LinkBudget(p_total=p_t, sigma2=sigma2, powers=powers)
            rep = sum_rate(g, alpha, budget)
            assert rep.sum_rate <= rep.upper_bound + 1e-9


class TestBerMonteCarlo:
    def test_noiseless_identity_channel(self):
        per_user, avg = ber_monte_carlo(2.0 * np.eye(4), 2.0,
                                        uniform_budget(1.0, 0.0, 4), 20_000, seed=1)
        assert avg == 0.0
        np.testing.assert_array_equal(per_user, np.zeros(4))

    def test_seed_determinism(self):
        g = np.eye(2) * 1.0
        budget = uniform_budget(1.0, 0.5, 2)
        r1 = ber_monte_carlo(g, 1.0, budget, 123_456, seed=42)
        r2 = ber_monte_carlo(g, 1.0, budget, 123_456, seed=42)
        assert r1[1] == r2[1]
        np.testing.assert_array_equal(r1[0], r2[0])
        r3 = ber_monte_carlo(g, 1.0, budget, 123_456, seed=43)
        assert r3[1] != r1[1]

    def test_monotone_in_power_identity_channel(self):
        g = np.eye(2)
        bers = []
        for p_t in (0.5, 1.0, 2.0, 4.0, 8.0):
            _, avg = ber_monte_carlo(g, 1.0, uniform_budget(p_t, 0.5, 2),
                                     200_000, seed=11)
            bers.append(avg)
        assert all(b1 >= b2 for b1, b2 in zip(bers, bers[1:]))

    def test_matches_qpsk_theory(self):
        # BER = Q(sqrt(Es/N0)) per bit for Gray QPSK
        from math import erfc, sqrt
        p_t, sigma2 = 2.0, 0.25
        es_n0 = (p_t / 2) / sigma2
        theory = 0.5 * erfc(sqrt(es_n0 / 2))
        _, avg = ber_monte_carlo(np.eye(2), 1.0, uniform_budget(p_t, sigma2, 2),
                                 2_000_000, seed=3)
        assert avg == pytest.approx(theory, rel=0.02)

    def test_realized_equalizer_fixes_gain_mismatch(self):
        g = np.diag([1.0, 0.4])
        budget = uniform_budget(8.0, 1e-6, 2)
        _, miss = ber_monte_carlo(g, 1.0, budget, 50_000, seed=5)
        _, fixed = ber_monte_carlo(g, 1.0, budget, 50_000, seed=5,
                                   equalize_by="realized")
        assert fixed == 0.0
        assert miss == 0.0  # pure positive gain mismatch never flips QPSK signs

    def test_interference_floor(self):
        # off-diagonal leakage beyond the decision margin floors the error
        # rate no matter how large the transmit power gets
        g = np.array([[1.0, 1.1], [1.1, 1.0]], dtype=complex)
        _, lo = ber_monte_carlo(g, 1.0, uniform_budget(100.0, 1e-9, 2),
                                100_000, seed=7)
        _, hi = ber_monte_carlo(g, 1.0, uniform_budget(10_000.0, 1e-9, 2),
                                100_000, seed=7)
        assert lo > 1e-2
        assert hi > 1e-2

    def test_confidence_shrinks_with_more_symbols(self):
        g = np.eye(2)
        budget = uniform_budget(1.0, 0.5, 2)
        small = [ber_monte_carlo(g, 1.0, budget, 4_000, seed=s)[1] for s in range(24)]
        large = [ber_monte_carlo(g, 1.0, budget, 16_000, seed=s)[1] for s in range(24)]
        ratio = np.std(small) / np.std(large)
        assert 1.3 < ratio < 3.2  # 4x symbols -> ~2x tighter

    def test_chunk_boundaries_do_not_matter(self):
        # n_symbols straddling the substream size still deterministic and sane
        from filmsim import metrics
        g = np.eye(2)
        budget = uniform_budget(1.0, 0.5, 2)
        n = metrics._BER_CHUNK + 17
        r1 = ber_monte_carlo(g, 1.0, budget, n, seed=2)
        r2 = ber_monte_carlo(g, 1.0, budget, n, seed=2)
        assert r1[1] == r2[1]


class TestBudgets:
    def test_dbm_conversion(self):
        assert dbm_to_watt(30.0) == pytest.approx(1.0)
        assert dbm_to_watt(0.0) == pytest.approx(1e-3)

    def test_budget_validation(self):
        with pytest.raises(ValueError):
            LinkBudget(p_total=1.0, sigma2=np.array([1e-12, 1e-12]),
                       powers=np.array([0.8, 0.4]))
        with pytest.raises(ValueError):
            LinkBudget(p_total=1.0, sigma2=np.array([-1e-12]), powers=np.array([0.5]))
