"""Risk functional: frozen values, axioms, and the exponential-utility backup."""

import math

import numpy as np
import pytest

from conftest import random_mdp
from softrobust.risk import (
    MEAN_FALLBACK_ALPHA,
    RiskConfig,
    WeightedSamples,
    certainty_equivalent,
    entropic_bellman,
    entropic_risk,
)

# -(1/1) * log((e^0 + e^-1) / 2), computed at 30-digit precision
TWO_POINT_RISK = 0.37988549304172247


def dist(values, weights):
    return WeightedSamples(np.asarray(values, float), np.asarray(weights, float))


class TestEntropicRisk:
    def test_two_point_frozen_value(self):
        got = entropic_risk(dist([0.0, 1.0], [0.5, 0.5]), alpha=1.0)
        assert math.isclose(got, TWO_POINT_RISK, rel_tol=1e-13)

    def test_degenerate_distribution_returns_value(self):
        for alpha in (1e-6, 0.5, 3.0, 50.0):
            assert entropic_risk(dist([2.5], [1.0]), alpha) == pytest.approx(2.5, abs=1e-12)

    def test_mean_fallback_below_threshold(self):
        d = dist([1.0, 3.0, -2.0], [0.2, 0.5, 0.3])
        assert entropic_risk(d, MEAN_FALLBACK_ALPHA / 10) == d.mean

    def test_translation_covariance(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            n = int(rng.integers(2, 8))
            values = rng.normal(scale=3.0, size=n)
            weights = rng.dirichlet(np.ones(n))
            alpha = float(rng.uniform(0.05, 5.0))
            c = float(rng.normal(scale=4.0))
            base = entropic_risk(dist(values, weights), alpha)
            shifted = entropic_risk(dist(values + c, weights), alpha)
            assert shifted == pytest.approx(base + c, abs=1e-9)

    def test_monotone_decreasing_in_alpha(self):
        rng = np.random.default_rng(11)
        alphas = [0.01, 0.1, 0.5, 1.0, 2.0, 10.0]
        for _ in range(100):
            n = int(rng.integers(2, 6))
            d = dist(rng.normal(size=n), rng.dirichlet(np.ones(n)))
            risks = [entropic_risk(d, a) for a in alphas]
            for lo, hi in zip(risks[1:], risks[:-1]):
                assert lo <= hi + 1e-12

    def test_bounded_by_min_and_mean(self):
        rng = np.random.default_rng(13)
        for _ in range(100):
            n = int(rng.integers(2, 6))
            d = dist(rng.normal(size=n), rng.dirichlet(np.ones(n)))
            alpha = float(rng.uniform(0.05, 20.0))
            r = entropic_risk(d, alpha)
            assert float(d.values.min()) - 1e-12 <= r <= d.mean + 1e-12

    def test_large_alpha_approaches_minimum(self):
        d = dist([0.0, 1.0, 5.0], [1 / 3, 1 / 3, 1 / 3])
        assert entropic_risk(d, 1e4) == pytest.approx(0.0, abs=1e-3)

    def test_extreme_values_stay_finite(self):
        # the max-shift keeps exponents bounded even far outside exp range
        r = entropic_risk(dist([-2000.0, 3000.0], [0.5, 0.5]), alpha=2.0)
        assert math.isfinite(r)
        assert r == pytest.approx(-2000.0 + math.log(2.0) / 2.0, abs=1e-9)

    def test_zero_weight_outcomes_ignored(self):
        with_zero = entropic_risk(dist([5.0, 0.0, 1.0], [0.0, 0.5, 0.5]), 1.0)
        without = entropic_risk(dist([0.0, 1.0], [0.5, 0.5]), 1.0)
        assert with_zero == pytest.approx(without, abs=1e-14)

    def test_negative_alpha_rejected(self):
        with pytest.raises(ValueError):
            entropic_risk(dist([0.0, 1.0], [0.5, 0.5]), -1.0)


class TestWeightedSamples:
    def test_weights_are_normalized(self):
        d = dist([1.0, 2.0], [2.0, 6.0])
        np.testing.assert_allclose(d.weights, [0.25, 0.75])

    @pytest.mark.parametrize(
        "values,weights",
        [
            ([], []),
            ([1.0], [1.0, 2.0]),
            ([1.0, 2.0], [-0.1, 1.1]),
            ([1.0, 2.0], [0.0, 0.0]),
            ([np.nan, 2.0], [0.5, 0.5]),
            ([1.0, 2.0], [np.inf, 1.0]),
        ],
    )
    def test_invalid_inputs_rejected(self, values, weights):
        with pytest.raises(ValueError):
            dist(values, weights)


class TestCertaintyEquivalent:
    def test_identity_on_scalars(self):
        assert certainty_equivalent(3.25, alpha=0.9) == 3.25
        assert certainty_equivalent(-7.0, alpha=2.0) == -7.0

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            certainty_equivalent(float("nan"), 1.0)


class TestRiskConfig:
    def test_valid(self):
        cfg = RiskConfig(alpha=0.9, beta=1.0)
        assert cfg.alpha == 0.9 and cfg.beta == 1.0

    @pytest.mark.parametrize("alpha,beta", [(0.0, 1.0), (-1.0, 1.0), (np.inf, 1.0), (1.0, np.nan)])
    def test_invalid(self, alpha, beta):
        with pytest.raises(ValueError):
            RiskConfig(alpha, beta)


def single_state_mdp(reward, discount):
    from softrobust.mdp import TabularMdp

    return TabularMdp(
        n_states=1,
        n_actions=1,
        rewards=np.array([[reward]]),
        transitions=np.ones((1, 1, 1)),
        discount=discount,
        initial_dist=np.array([1.0]),
    )


def bellman_oracle(mdp, v):
    """Triple-loop reference for the exponential-utility backup."""
    out = np.empty(mdp.n_states)
    for s in range(mdp.n_states):
        best = -np.inf
        for a in range(mdp.n_actions):
            cont = 0.0
            for s2 in range(mdp.n_states):
                cont += mdp.transitions[s, a, s2] * v[s2]
            best = max(best, -math.exp(-mdp.rewards[s, a]) + mdp.discount * cont)
        out[s] = best
    return out


class TestEntropicBellman:
    def test_matches_triple_loop_oracle(self):
        rng = np.random.default_rng(17)
        for _ in range(50):
            mdp = random_mdp(rng, int(rng.integers(2, 6)), int(rng.integers(1, 4)))
            v = rng.normal(size=mdp.n_states)
            np.testing.assert_allclose(entropic_bellman(mdp, v), bellman_oracle(mdp, v), atol=1e-12)

    def test_single_state_backup_by_hand(self):
        mdp = single_state_mdp(reward=1.0, discount=0.5)
        v = np.array([2.0])
        # one state, one action: T[v] = -e^{-1} + 0.5 * 2
        assert entropic_bellman(mdp, v)[0] == pytest.approx(-math.exp(-1.0) + 1.0, abs=1e-12)

    def test_contraction_in_sup_norm(self):
        rng = np.random.default_rng(19)
        for _ in range(100):
            mdp = random_mdp(rng, int(rng.integers(2, 6)), int(rng.integers(1, 4)),
                             discount=float(rng.uniform(0.1, 0.99)))
            u = rng.normal(scale=3.0, size=mdp.n_states)
            v = rng.normal(scale=3.0, size=mdp.n_states)
            lhs = np.max(np.abs(entropic_bellman(mdp, u) - entropic_bellman(mdp, v)))
            assert lhs <= mdp.discount * np.max(np.abs(u - v)) + 1e-12

    def test_monotone_in_v(self):
        rng = np.random.default_rng(23)
        for _ in range(50):
            mdp = random_mdp(rng, 4, 2)
            u = rng.normal(size=4)
            v = u + rng.uniform(0.0, 1.0, size=4)
            assert np.all(entropic_bellman(mdp, u) <= entropic_bellman(mdp, v) + 1e-12)

    def test_shape_mismatch_rejected(self):
        mdp = random_mdp(np.random.default_rng(0), 3, 2)
        with pytest.raises(ValueError):
            entropic_bellman(mdp, np.zeros(4))

    def test_non_finite_v_rejected(self):
        mdp = random_mdp(np.random.default_rng(0), 3, 2)
        with pytest.raises(ValueError):
            entropic_bellman(mdp, np.array([0.0, np.inf, 0.0]))
