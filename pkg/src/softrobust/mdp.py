"""Finite tabular decision processes: representation, simulation, evaluation.

A model is (S, A, R, P, gamma, p0) with dense arrays. Serialization is a flat
JSON object: n_states, n_actions, rewards (row-major S*A list), transitions
(row-major S*A*S list), discount, initial_dist.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

DEFAULT_ENUMERATION_CAP = 10**6

# tolerance for "rows sum to one" checks
ROW_SUM_TOL = 1e-9


class EnumerationCapError(RuntimeError):
    """Exhaustive trajectory enumeration would exceed the branch cap."""


@dataclass(eq=False)
class TabularMdp:
    n_states: int
    n_actions: int
    rewards: np.ndarray      # (S, A)
    transitions: np.ndarray  # (S, A, S), rows sum to 1
    discount: float
    initial_dist: np.ndarray  # (S,), sums to 1

    def __post_init__(self):
        self.rewards = np.asarray(self.rewards, dtype=float)
        self.transitions = np.asarray(self.transitions, dtype=float)
        self.initial_dist = np.asarray(self.initial_dist, dtype=float)
        self._cdf_cache = None
        self._validated = False

    def validate(self) -> list[str]:
        """Return a list of contract violations, empty when the model is valid."""
        out = []
        s, a = self.n_states, self.n_actions
        if s < 1 or a < 1:
            out.append(f"need at least one state and action, got S={s}, A={a}")
            return out
        if self.rewards.shape != (s, a):
            out.append(f"rewards shape {self.rewards.shape}, expected {(s, a)}")
        if self.transitions.shape != (s, a, s):
            out.append(f"transitions shape {self.transitions.shape}, expected {(s, a, s)}")
        if self.initial_dist.shape != (s,):
            out.append(f"initial_dist shape {self.initial_dist.shape}, expected {(s,)}")
        if out:
            return out
        if not np.all(np.isfinite(self.rewards)):
            out.append("rewards contain non-finite entries")
        if not np.all(np.isfinite(self.transitions)) or np.any(self.transitions < 0):
            out.append("transition entries must be finite and nonnegative")
        else:
            sums = self.transitions.sum(axis=2)
            if np.max(np.abs(sums - 1.0)) > ROW_SUM_TOL:
                bad = np.unravel_index(np.argmax(np.abs(sums - 1.0)), sums.shape)
                out.append(f"transition row {bad} sums to {sums[bad]!r}")
        if np.any(self.initial_dist < 0) or not np.all(np.isfinite(self.initial_dist)):
            out.append("initial_dist entries must be finite and nonnegative")
        elif abs(self.initial_dist.sum() - 1.0) > ROW_SUM_TOL:
            out.append(f"initial_dist sums to {self.initial_dist.sum()!r}")
        if not (0.0 <= self.discount < 1.0):
            out.append(f"discount must be in [0, 1), got {self.discount}")
        return out

    def require_valid(self):
        if self._validated:
            return
        violations = self.validate()
        if violations:
            raise ValueError("invalid model: " + "; ".join(violations))
        self._validated = True

    def transition_cdf(self) -> np.ndarray:
        """Cumulative transition rows, cached; used by inverse-CDF sampling."""
        if self._cdf_cache is None:
            self._cdf_cache = np.cumsum(self.transitions, axis=2)
        return self._cdf_cache

    def to_dict(self) -> dict:
        return {
            "n_states": self.n_states,
            "n_actions": self.n_actions,
            "rewards": self.rewards.ravel().tolist(),
            "transitions": self.transitions.ravel().tolist(),
            "discount": self.discount,
            "initial_dist": self.initial_dist.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TabularMdp":
        s, a = int(d["n_states"]), int(d["n_actions"])
        return cls(
            n_states=s,
            n_actions=a,
            rewards=np.asarray(d["rewards"], dtype=float).reshape(s, a),
            transitions=np.asarray(d["transitions"], dtype=float).reshape(s, a, s),
            discount=float(d["discount"]),
            initial_dist=np.asarray(d["initial_dist"], dtype=float),
        )

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict()), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "TabularMdp":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


@dataclass(eq=False)
class Trajectory:
    """A recorded rollout: arrays of states, actions, rewards of equal length.

    final_state is the state reached after the last recorded step when known
    (simulation records it; enumeration leaves it None because trajectories
    are enumerated over the recorded steps only).
    """

    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    final_state: int | None = None

    def __post_init__(self):
        self.states = np.asarray(self.states, dtype=np.int64)
        self.actions = np.asarray(self.actions, dtype=np.int64)
        self.rewards = np.asarray(self.rewards, dtype=float)
        n = self.states.size
        if n == 0:
            raise ValueError("trajectory must contain at least one step")
        if self.actions.size != n or self.rewards.size != n:
            raise ValueError("states, actions, rewards must have equal length")

    @property
    def horizon(self) -> int:
        return int(self.states.size)

    def steps(self):
        """Iterate (state, action, reward) tuples."""
        for s, a, r in zip(self.states, self.actions, self.rewards):
            yield int(s), int(a), float(r)


def discounted_return(traj: Trajectory, gamma: float) -> float:
    """sum_t gamma^t * r_t over the recorded steps."""
    if not (0.0 <= gamma <= 1.0):
        raise ValueError(f"gamma must be in [0, 1], got {gamma}")
    weights = gamma ** np.arange(traj.horizon)
    return float(weights @ traj.rewards)


def _sample_index(cdf: np.ndarray, u: float) -> int:
    # side='right': zero-probability entries have zero-width CDF intervals
    # and are never selected; clamp covers cdf[-1] rounding below 1
    return min(int(np.searchsorted(cdf, u, side="right")), cdf.size - 1)


def simulate(mdp: TabularMdp, policy, horizon: int, rng: np.random.Generator) -> Trajectory:
    """Roll one trajectory of exactly `horizon` steps under `policy`.

    policy needs sample_action(state, rng) -> action. The state reached after
    the final step is recorded as final_state.
    """
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    mdp.require_valid()
    cdf = mdp.transition_cdf()
    p0_cdf = np.cumsum(mdp.initial_dist)
    states = np.empty(horizon, dtype=np.int64)
    actions = np.empty(horizon, dtype=np.int64)
    rewards = np.empty(horizon, dtype=float)
    s = _sample_index(p0_cdf, rng.random())
    for t in range(horizon):
        a = policy.sample_action(s, rng)
        states[t] = s
        actions[t] = a
        rewards[t] = mdp.rewards[s, a]
        s = _sample_index(cdf[s, a], rng.random())
    return Trajectory(states, actions, rewards, final_state=s)


def exact_policy_value(mdp: TabularMdp, policy) -> np.ndarray:
    """Infinite-horizon discounted value of `policy`, by linear solve.

    policy needs probability_table() -> (S, A). Solves (I - gamma P_pi) v =
    r_pi and checks the residual before returning v.
    """
    mdp.require_valid()
    pi = policy.probability_table()
    if pi.shape != (mdp.n_states, mdp.n_actions):
        raise ValueError(
            f"policy table shape {pi.shape}, expected {(mdp.n_states, mdp.n_actions)}"
        )
    r_pi = np.einsum("sa,sa->s", pi, mdp.rewards)
    p_pi = np.einsum("sa,sat->st", pi, mdp.transitions)
    lhs = np.eye(mdp.n_states) - mdp.discount * p_pi
    v = np.linalg.solve(lhs, r_pi)
    residual = np.max(np.abs(lhs @ v - r_pi))
    if residual > 1e-8:
        raise ArithmeticError(f"policy evaluation residual {residual:g} exceeds 1e-8")
    return v


def finite_horizon_policy_value(mdp: TabularMdp, policy, horizon: int) -> np.ndarray:
    """Expected discounted return of `policy` over exactly `horizon` steps.

    Backward induction v_t = r_pi + gamma * P_pi v_{t+1} from v_horizon = 0;
    exact, no sampling. Returns the per-state value vector.
    """
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    mdp.require_valid()
    pi = policy.probability_table()
    r_pi = np.einsum("sa,sa->s", pi, mdp.rewards)
    p_pi = np.einsum("sa,sat->st", pi, mdp.transitions)
    v = np.zeros(mdp.n_states)
    for _ in range(horizon):
        v = r_pi + mdp.discount * (p_pi @ v)
    return v


def enumerate_trajectories(
    mdp: TabularMdp,
    policy,
    horizon: int,
    cap: int = DEFAULT_ENUMERATION_CAP,
):
    """Return [(Trajectory, probability)] for every positive-probability rollout.

    Branches only over the recorded steps: the state reached after the final
    action is marginalized out, so probabilities sum to one. Raises
    EnumerationCapError if (S*A)^horizon exceeds `cap` before any work.
    """
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    branches = (mdp.n_states * mdp.n_actions) ** horizon
    if branches > cap:
        raise EnumerationCapError(
            f"enumeration needs up to {branches} branches, cap is {cap}"
        )
    mdp.require_valid()
    pi = policy.probability_table()
    out = []
    states = np.empty(horizon, dtype=np.int64)
    actions = np.empty(horizon, dtype=np.int64)
    rewards = np.empty(horizon, dtype=float)

    def recurse(t: int, s: int, prob: float):
        states[t] = s
        for a in range(mdp.n_actions):
            p_a = prob * pi[s, a]
            if p_a == 0.0:
                continue
            actions[t] = a
            rewards[t] = mdp.rewards[s, a]
            if t == horizon - 1:
                out.append(
                    (Trajectory(states.copy(), actions.copy(), rewards.copy()), p_a)
                )
                continue
            row = mdp.transitions[s, a]
            for s2 in range(mdp.n_states):
                if row[s2] > 0.0:
                    recurse(t + 1, s2, p_a * row[s2])

    for s0 in range(mdp.n_states):
        if mdp.initial_dist[s0] > 0.0:
            recurse(0, s0, float(mdp.initial_dist[s0]))
    return out


def trajectory_probability(mdp: TabularMdp, policy, traj: Trajectory) -> float:
    """Probability of the recorded state/action sequence under mdp and policy.

    p0(s_0) * prod_t pi(a_t|s_t) * prod_{t<T-1} P(s_{t+1}|s_t, a_t); the
    transition out of the final step is marginalized out, matching
    enumerate_trajectories.
    """
    pi = policy.probability_table()
    p = float(mdp.initial_dist[traj.states[0]])
    for t in range(traj.horizon):
        s, a = int(traj.states[t]), int(traj.actions[t])
        p *= float(pi[s, a])
        if t < traj.horizon - 1:
            p *= float(mdp.transitions[s, a, traj.states[t + 1]])
    return p
