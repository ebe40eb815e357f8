"""Tabular model core: returns, simulation, evaluation, enumeration, IO."""

import numpy as np
import pytest

from conftest import random_mdp, random_policy
from softrobust.mdp import (
    EnumerationCapError,
    TabularMdp,
    Trajectory,
    discounted_return,
    enumerate_trajectories,
    exact_policy_value,
    finite_horizon_policy_value,
    simulate,
    trajectory_probability,
)
from softrobust.policy import SoftmaxPolicy


def make_traj(states, actions, rewards):
    return Trajectory(np.asarray(states), np.asarray(actions), np.asarray(rewards))


class TestDiscountedReturn:
    def test_unit_rewards_hand_value(self):
        traj = make_traj([0, 0, 0], [0, 0, 0], [1.0, 1.0, 1.0])
        assert discounted_return(traj, 0.9) == pytest.approx(2.71, abs=1e-12)

    def test_matches_horner_oracle(self):
        rng = np.random.default_rng(29)
        for _ in range(100):
            n = int(rng.integers(1, 30))
            rewards = rng.normal(scale=3.0, size=n)
            gamma = float(rng.uniform(0.0, 1.0))
            traj = make_traj(np.zeros(n, int), np.zeros(n, int), rewards)
            acc = 0.0
            for r in rewards[::-1]:
                acc = r + gamma * acc
            assert discounted_return(traj, gamma) == pytest.approx(acc, rel=1e-10, abs=1e-12)

    def test_gamma_out_of_range_rejected(self):
        traj = make_traj([0], [0], [1.0])
        with pytest.raises(ValueError):
            discounted_return(traj, 1.5)


class TestTrajectory:
    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            make_traj([0, 1], [0], [1.0, 2.0])

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            make_traj([], [], [])

    def test_steps_iteration(self):
        traj = make_traj([3, 1], [0, 2], [0.5, -1.0])
        assert list(traj.steps()) == [(3, 0, 0.5), (1, 2, -1.0)]
        assert traj.horizon == 2


class TestValidate:
    def test_valid_model_has_no_violations(self):
        mdp = random_mdp(np.random.default_rng(1))
        assert mdp.validate() == []

    def test_bad_row_sum_reported(self):
        mdp = random_mdp(np.random.default_rng(2))
        mdp.transitions[0, 0, 0] += 0.5
        assert any("sums to" in v for v in mdp.validate())

    def test_negative_probability_reported(self):
        mdp = random_mdp(np.random.default_rng(3))
        mdp.transitions[1, 0, 0] = -0.2
        assert mdp.validate()

    def test_discount_out_of_range_reported(self):
        mdp = random_mdp(np.random.default_rng(4))
        mdp.discount = 1.0
        assert any("discount" in v for v in mdp.validate())

    def test_shape_mismatch_reported(self):
        mdp = random_mdp(np.random.default_rng(5))
        mdp.rewards = np.zeros((2, 2))
        assert any("rewards" in v for v in mdp.validate())

    def test_require_valid_raises_with_details(self):
        mdp = random_mdp(np.random.default_rng(6))
        mdp.initial_dist = np.array([0.5, 0.2, 0.2])
        with pytest.raises(ValueError, match="initial_dist"):
            mdp.require_valid()


class TestSimulate:
    def test_shape_and_reward_consistency(self):
        rng = np.random.default_rng(31)
        mdp = random_mdp(rng, 4, 3)
        policy = random_policy(rng, 4, 3)
        traj = simulate(mdp, policy, 25, rng)
        assert traj.horizon == 25
        assert np.all((traj.states >= 0) & (traj.states < 4))
        assert np.all((traj.actions >= 0) & (traj.actions < 3))
        for s, a, r in traj.steps():
            assert r == mdp.rewards[s, a]
        assert traj.final_state is not None and 0 <= traj.final_state < 4

    def test_deterministic_given_seed(self):
        mdp = random_mdp(np.random.default_rng(37), 5, 2)
        policy = random_policy(np.random.default_rng(38), 5, 2)
        t1 = simulate(mdp, policy, 40, np.random.default_rng(99))
        t2 = simulate(mdp, policy, 40, np.random.default_rng(99))
        np.testing.assert_array_equal(t1.states, t2.states)
        np.testing.assert_array_equal(t1.actions, t2.actions)
        assert t1.final_state == t2.final_state

    def test_transition_frequencies_within_3_sigma(self):
        # two states, single action, P(next=1) = 0.7
        mdp = TabularMdp(
            n_states=2, n_actions=1,
            rewards=np.zeros((2, 1)),
            transitions=np.array([[[0.3, 0.7]], [[0.3, 0.7]]]),
            discount=0.9, initial_dist=np.array([1.0, 0.0]),
        )
        policy = SoftmaxPolicy.uniform(2, 1)
        rng = np.random.default_rng(41)
        n = 10_000
        hits = sum(simulate(mdp, policy, 1, rng).final_state for _ in range(n))
        se = np.sqrt(0.3 * 0.7 / n)
        assert abs(hits / n - 0.7) < 3 * se

    def test_invalid_model_rejected(self):
        mdp = random_mdp(np.random.default_rng(43))
        mdp.transitions[0, 0, 0] += 1.0
        with pytest.raises(ValueError):
            simulate(mdp, SoftmaxPolicy.uniform(3, 2), 5, np.random.default_rng(0))

    def test_zero_probability_states_never_visited(self):
        # deterministic cycle 0 -> 1 -> 0; state 2 unreachable
        t = np.zeros((3, 1, 3))
        t[0, 0, 1] = 1.0
        t[1, 0, 0] = 1.0
        t[2, 0, 2] = 1.0
        mdp = TabularMdp(3, 1, np.zeros((3, 1)), t, 0.9, np.array([1.0, 0.0, 0.0]))
        traj = simulate(mdp, SoftmaxPolicy.uniform(3, 1), 50, np.random.default_rng(5))
        assert 2 not in traj.states


def value_iteration_oracle(mdp, policy, iters=1500):
    """Plain fixed-point iteration for the policy's value, explicit loops."""
    pi = policy.probability_table()
    v = np.zeros(mdp.n_states)
    for _ in range(iters):
        nxt = np.empty_like(v)
        for s in range(mdp.n_states):
            total = 0.0
            for a in range(mdp.n_actions):
                cont = float(mdp.transitions[s, a] @ v)
                total += pi[s, a] * (mdp.rewards[s, a] + mdp.discount * cont)
            nxt[s] = total
        v = nxt
    return v


class TestExactPolicyValue:
    def test_matches_value_iteration_oracle(self):
        rng = np.random.default_rng(47)
        for _ in range(15):
            mdp = random_mdp(rng, int(rng.integers(2, 5)), int(rng.integers(1, 4)),
                             discount=float(rng.uniform(0.3, 0.95)))
            policy = random_policy(rng, mdp.n_states, mdp.n_actions)
            got = exact_policy_value(mdp, policy)
            want = value_iteration_oracle(mdp, policy)
            np.testing.assert_allclose(got, want, atol=1e-7)

    def test_single_state_closed_form(self):
        mdp = TabularMdp(1, 1, np.array([[2.0]]), np.ones((1, 1, 1)), 0.5, np.array([1.0]))
        v = exact_policy_value(mdp, SoftmaxPolicy.uniform(1, 1))
        assert v[0] == pytest.approx(2.0 / (1.0 - 0.5), abs=1e-10)


class TestFiniteHorizonValue:
    def test_horizon_one_is_immediate_reward(self):
        rng = np.random.default_rng(53)
        mdp = random_mdp(rng, 4, 2)
        policy = random_policy(rng, 4, 2)
        pi = policy.probability_table()
        want = np.einsum("sa,sa->s", pi, mdp.rewards)
        np.testing.assert_allclose(finite_horizon_policy_value(mdp, policy, 1), want, atol=1e-12)

    def test_converges_to_infinite_horizon(self):
        rng = np.random.default_rng(59)
        mdp = random_mdp(rng, 3, 2, discount=0.8)
        policy = random_policy(rng, 3, 2)
        finite = finite_horizon_policy_value(mdp, policy, 200)
        np.testing.assert_allclose(finite, exact_policy_value(mdp, policy), atol=1e-8)


class TestEnumeration:
    def test_probabilities_sum_to_one(self):
        rng = np.random.default_rng(61)
        for _ in range(10):
            mdp = random_mdp(rng, 3, 2)
            policy = random_policy(rng, 3, 2)
            trajs = enumerate_trajectories(mdp, policy, 3)
            assert sum(p for _, p in trajs) == pytest.approx(1.0, abs=1e-9)

    def test_each_probability_matches_direct_computation(self):
        rng = np.random.default_rng(67)
        mdp = random_mdp(rng, 2, 2)
        policy = random_policy(rng, 2, 2)
        for traj, p in enumerate_trajectories(mdp, policy, 3):
            assert p == pytest.approx(trajectory_probability(mdp, policy, traj), rel=1e-12)

    def test_expected_return_matches_backward_induction(self):
        # enumeration route vs dynamic-programming route
        rng = np.random.default_rng(71)
        for _ in range(10):
            mdp = random_mdp(rng, 3, 2, discount=float(rng.uniform(0.2, 0.99)))
            policy = random_policy(rng, 3, 2)
            horizon = 3
            total = sum(
                p * discounted_return(t, mdp.discount)
                for t, p in enumerate_trajectories(mdp, policy, horizon)
            )
            want = float(mdp.initial_dist @ finite_horizon_policy_value(mdp, policy, horizon))
            assert total == pytest.approx(want, rel=1e-9, abs=1e-11)

    def test_monte_carlo_mean_within_3_sigma(self):
        rng = np.random.default_rng(73)
        mdp = random_mdp(rng, 2, 2)
        policy = random_policy(rng, 2, 2)
        horizon = 3
        exact = sum(
            p * discounted_return(t, mdp.discount)
            for t, p in enumerate_trajectories(mdp, policy, horizon)
        )
        n = 4000
        returns = np.array([
            discounted_return(simulate(mdp, policy, horizon, rng), mdp.discount)
            for _ in range(n)
        ])
        se = returns.std(ddof=1) / np.sqrt(n)
        assert abs(returns.mean() - exact) < 3 * se

    def test_cap_raises_before_work(self):
        mdp = random_mdp(np.random.default_rng(79), 4, 4)
        with pytest.raises(EnumerationCapError):
            enumerate_trajectories(mdp, SoftmaxPolicy.uniform(4, 4), 8, cap=1000)

    def test_zero_probability_branches_pruned(self):
        t = np.zeros((2, 1, 2))
        t[0, 0, 1] = 1.0
        t[1, 0, 1] = 1.0
        mdp = TabularMdp(2, 1, np.ones((2, 1)), t, 0.9, np.array([1.0, 0.0]))
        trajs = enumerate_trajectories(mdp, SoftmaxPolicy.uniform(2, 1), 3)
        assert len(trajs) == 1
        states = trajs[0][0].states
        np.testing.assert_array_equal(states, [0, 1, 1])


class TestSerialization:
    def test_dict_round_trip(self):
        mdp = random_mdp(np.random.default_rng(83), 4, 3)
        back = TabularMdp.from_dict(mdp.to_dict())
        np.testing.assert_array_equal(back.rewards, mdp.rewards)
        np.testing.assert_array_equal(back.transitions, mdp.transitions)
        np.testing.assert_array_equal(back.initial_dist, mdp.initial_dist)
        assert back.discount == mdp.discount

    def test_file_round_trip(self, tmp_path):
        mdp = random_mdp(np.random.default_rng(89), 3, 2)
        path = tmp_path / "model.json"
        mdp.save(path)
        back = TabularMdp.load(path)
        np.testing.assert_array_equal(back.transitions, mdp.transitions)
        assert back.validate() == []
