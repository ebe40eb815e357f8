"""Benchmark domains: asset selection, inventory restocking, aggregated cart-pole.

Each builder returns a TabularMdp (the data-generating "true" model) plus a
metadata dict describing the construction; generate_baseline_data rolls a
behavior policy through a true model to produce the transition log the
posterior is fit from.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .mdp import TabularMdp
from .policy import SoftmaxPolicy
from .posterior import TransitionLog

_erf = np.vectorize(math.erf)


def _normal_cdf(x: np.ndarray, mean: float, std: float) -> np.ndarray:
    z = (np.asarray(x, dtype=float) - mean) / (std * math.sqrt(2.0))
    return 0.5 * (1.0 + _erf(z))


def _pareto_cdf(x: np.ndarray, shape: float, scale: float) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    above = x >= scale
    out[above] = 1.0 - (scale / x[above]) ** shape
    return out


# ---------------------------------------------------------------------------
# asset selection
# ---------------------------------------------------------------------------

@dataclass
class AssetDomainSpec:
    """Three assets with known return laws, discretized onto a shared grid.

    Asset returns: N(mean1, std1), N(mean2, std2), Pareto(shape, scale).
    The grid has n_bins equal-width bins over [grid_lo, grid_hi] plus one
    overflow bin per side whose reward sits half a bin width outside the edge.
    """

    mean1: float = 0.0
    std1: float = 1.0
    mean2: float = 4.0
    std2: float = 6.0
    pareto_shape: float = 1.5
    pareto_scale: float = 1.0
    grid_lo: float = -20.0
    grid_hi: float = 30.0
    n_bins: int = 41
    discount: float = 0.95

    def __post_init__(self):
        if self.n_bins < 1:
            raise ValueError(f"n_bins must be >= 1, got {self.n_bins}")
        if self.grid_hi <= self.grid_lo:
            raise ValueError("grid_hi must exceed grid_lo")


def make_asset_env(spec: AssetDomainSpec) -> tuple[TabularMdp, dict]:
    """One decision state, one terminal-ish outcome state per bin, one sink.

    Choosing asset a from the decision state lands in an outcome state with
    the asset's discretized probability; the outcome state pays its bin
    midpoint (overflow bins pay half a width outside the grid) on any action
    and falls into a zero-reward absorbing sink, so a trajectory of horizon
    >= 2 collects exactly discount * midpoint.
    """
    edges = np.linspace(spec.grid_lo, spec.grid_hi, spec.n_bins + 1)
    width = edges[1] - edges[0]
    midpoints = (edges[:-1] + edges[1:]) / 2.0
    # outcome order: low overflow, interior bins, high overflow
    bin_rewards = np.concatenate(
        ([spec.grid_lo - width / 2.0], midpoints, [spec.grid_hi + width / 2.0])
    )
    n_outcomes = bin_rewards.size

    def discretize(cdf_at):
        at_edges = cdf_at(edges)
        interior = np.diff(at_edges)
        return np.concatenate(([at_edges[0]], interior, [1.0 - at_edges[-1]]))

    probs = np.stack(
        [
            discretize(lambda x: _normal_cdf(x, spec.mean1, spec.std1)),
            discretize(lambda x: _normal_cdf(x, spec.mean2, spec.std2)),
            discretize(lambda x: _pareto_cdf(x, spec.pareto_shape, spec.pareto_scale)),
        ]
    )
    probs = probs / probs.sum(axis=1, keepdims=True)

    n_assets = probs.shape[0]
    n_states = 1 + n_outcomes + 1
    decision, sink = 0, n_states - 1
    rewards = np.zeros((n_states, n_assets))
    rewards[1 : 1 + n_outcomes, :] = bin_rewards[:, None]
    transitions = np.zeros((n_states, n_assets, n_states))
    transitions[decision, :, 1 : 1 + n_outcomes] = probs
    transitions[1 : 1 + n_outcomes, :, sink] = 1.0
    transitions[sink, :, sink] = 1.0
    initial = np.zeros(n_states)
    initial[decision] = 1.0
    mdp = TabularMdp(
        n_states=n_states,
        n_actions=n_assets,
        rewards=rewards,
        transitions=transitions,
        discount=spec.discount,
        initial_dist=initial,
    )
    metadata = {
        "domain": "asset",
        "decision_state": decision,
        "sink_state": sink,
        "outcome_states": list(range(1, 1 + n_outcomes)),
        "bin_edges": edges.tolist(),
        "bin_width": float(width),
        "bin_rewards": bin_rewards.tolist(),
        "asset_names": ["normal_narrow", "normal_wide", "pareto_heavy"],
        "outcome_probs": probs.tolist(),
        "discretized_means": (probs @ bin_rewards).tolist(),
        "discount": spec.discount,
    }
    return mdp, metadata


# ---------------------------------------------------------------------------
# inventory restocking
# ---------------------------------------------------------------------------

@dataclass
class InventoryDomainSpec:
    """Single-item inventory with normal demand and lost sales.

    State is on-hand stock 0..max_inventory; action is order size
    0..max_order (clamped to capacity room). Demand is N(demand_mean,
    demand_std) discretized to integers with tails lumped at 0 and at
    max_inventory + max_order. The immediate reward is the expected period
    profit: price * E[sold] - cost * order - holding * E[leftover].
    """

    demand_mean: float = 8.0
    demand_std: float = 3.0
    purchase_cost: float = 2.49
    sale_price: float = 3.99
    holding_cost: float = 0.03
    max_inventory: int = 20
    max_order: int = 10
    discount: float = 0.95

    def __post_init__(self):
        if self.max_inventory < 1 or self.max_order < 1:
            raise ValueError("max_inventory and max_order must be >= 1")
        if self.demand_std <= 0:
            raise ValueError(f"demand_std must be positive, got {self.demand_std}")


def demand_pmf(spec: InventoryDomainSpec) -> np.ndarray:
    """P(demand = k) for k = 0..max_inventory + max_order, tails lumped."""
    d_max = spec.max_inventory + spec.max_order
    ks = np.arange(d_max + 1)
    upper = _normal_cdf(ks + 0.5, spec.demand_mean, spec.demand_std)
    lower = _normal_cdf(ks - 0.5, spec.demand_mean, spec.demand_std)
    pmf = upper - lower
    pmf[0] = upper[0]          # everything below 0.5 counts as zero demand
    pmf[-1] = 1.0 - lower[-1]  # demand beyond d_max behaves identically to d_max
    return pmf / pmf.sum()


def make_inventory_env(spec: InventoryDomainSpec) -> tuple[TabularMdp, dict]:
    n_states = spec.max_inventory + 1
    n_actions = spec.max_order + 1
    pmf = demand_pmf(spec)
    d_vals = np.arange(pmf.size)
    rewards = np.zeros((n_states, n_actions))
    transitions = np.zeros((n_states, n_actions, n_states))
    for s in range(n_states):
        for a in range(n_actions):
            order = min(a, spec.max_inventory - s)  # no ordering past capacity
            stock = s + order
            sold = np.minimum(stock, d_vals)
            leftover = stock - sold
            rewards[s, a] = (
                spec.sale_price * float(pmf @ sold)
                - spec.purchase_cost * order
                - spec.holding_cost * float(pmf @ leftover)
            )
            np.add.at(transitions[s, a], leftover, pmf)
    initial = np.zeros(n_states)
    initial[0] = 1.0  # start empty
    mdp = TabularMdp(
        n_states=n_states,
        n_actions=n_actions,
        rewards=rewards,
        transitions=transitions,
        discount=spec.discount,
        initial_dist=initial,
    )
    metadata = {
        "domain": "inventory",
        "demand_pmf": pmf.tolist(),
        "max_inventory": spec.max_inventory,
        "max_order": spec.max_order,
        "discount": spec.discount,
    }
    return mdp, metadata


# ---------------------------------------------------------------------------
# cart-pole, aggregated
# ---------------------------------------------------------------------------

@dataclass
class CartPoleDomainSpec:
    """Pole balancing reduced to a tabular model.

    Physics rollouts under a random policy produce (state, action, next)
    samples; a per-action linear model is fit to them; synthetic rollouts of
    the fitted model produce a state cloud; `resolution` states drawn from
    the cloud become the aggregate states, with nearest-neighbor transition
    assignment. Aggregate states inside the failure region are absorbing
    with reward 0, the rest pay 1 per step.
    """

    gravity: float = 9.8
    cart_mass: float = 1.0
    pole_mass: float = 0.1
    pole_half_length: float = 0.5
    force: float = 10.0
    dt: float = 0.02
    x_limit: float = 2.4
    angle_limit: float = 12.0 * math.pi / 180.0
    n_physics_samples: int = 4000
    n_synthetic: int = 10000
    resolution: int = 200
    max_episode_steps: int = 200
    discount: float = 0.95

    def __post_init__(self):
        if self.resolution < 2:
            raise ValueError(f"resolution must be >= 2, got {self.resolution}")
        if self.n_physics_samples < 10 * 2:
            raise ValueError("n_physics_samples too small to fit the linear model")


def _cartpole_step(state: np.ndarray, action: int, spec: CartPoleDomainSpec) -> np.ndarray:
    x, x_dot, theta, theta_dot = state
    force = spec.force if action == 1 else -spec.force
    total_mass = spec.cart_mass + spec.pole_mass
    pml = spec.pole_mass * spec.pole_half_length
    cos_t, sin_t = math.cos(theta), math.sin(theta)
    temp = (force + pml * theta_dot**2 * sin_t) / total_mass
    theta_acc = (spec.gravity * sin_t - cos_t * temp) / (
        spec.pole_half_length * (4.0 / 3.0 - spec.pole_mass * cos_t**2 / total_mass)
    )
    x_acc = temp - pml * theta_acc * cos_t / total_mass
    return np.array(
        [
            x + spec.dt * x_dot,
            x_dot + spec.dt * x_acc,
            theta + spec.dt * theta_dot,
            theta_dot + spec.dt * theta_acc,
        ]
    )


def _is_failure(states: np.ndarray, spec: CartPoleDomainSpec) -> np.ndarray:
    states = np.atleast_2d(states)
    return (np.abs(states[:, 0]) > spec.x_limit) | (np.abs(states[:, 2]) > spec.angle_limit)


def _collect_physics(spec: CartPoleDomainSpec, rng) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    states, actions, nexts = [], [], []
    while len(states) < spec.n_physics_samples:
        s = rng.uniform(-0.05, 0.05, size=4)
        for _ in range(spec.max_episode_steps):
            a = int(rng.integers(0, 2))
            s2 = _cartpole_step(s, a, spec)
            states.append(s)
            actions.append(a)
            nexts.append(s2)
            if len(states) >= spec.n_physics_samples or _is_failure(s2, spec)[0]:
                break
            s = s2
    return np.asarray(states), np.asarray(actions), np.asarray(nexts)


def _fit_linear(states, actions, nexts) -> list[np.ndarray]:
    """Per-action least squares next = [state, 1] @ W; returns [W_0, W_1]."""
    weights = []
    for a in (0, 1):
        mask = actions == a
        if mask.sum() < 5:
            raise ValueError(f"only {int(mask.sum())} samples for action {a}, need >= 5")
        x = np.hstack([states[mask], np.ones((int(mask.sum()), 1))])
        w, *_ = np.linalg.lstsq(x, nexts[mask], rcond=None)
        weights.append(w)
    return weights


def _linear_next(states: np.ndarray, w: np.ndarray) -> np.ndarray:
    states = np.atleast_2d(states)
    return np.hstack([states, np.ones((states.shape[0], 1))]) @ w


def _synthetic_cloud(spec: CartPoleDomainSpec, weights, rng) -> np.ndarray:
    """States visited by random-action rollouts of the fitted model.

    Rollouts reset once they leave twice the failure box, so the cloud covers
    both the viable region and the failure fringe the aggregation needs.
    """
    batch = 100
    states = rng.uniform(-0.05, 0.05, size=(batch, 4))
    cloud = []
    while sum(len(c) for c in cloud) < spec.n_synthetic:
        actions = rng.integers(0, 2, size=batch)
        nxt = np.where(
            (actions == 1)[:, None],
            _linear_next(states, weights[1]),
            _linear_next(states, weights[0]),
        )
        escaped = (
            (np.abs(nxt[:, 0]) > 2.0 * spec.x_limit)
            | (np.abs(nxt[:, 2]) > 2.0 * spec.angle_limit)
            | ~np.all(np.isfinite(nxt), axis=1)
        )
        if np.any(escaped):
            nxt[escaped] = rng.uniform(-0.05, 0.05, size=(int(escaped.sum()), 4))
        cloud.append(nxt.copy())
        states = nxt
    return np.concatenate(cloud)[: spec.n_synthetic]


def make_cartpole_env(spec: CartPoleDomainSpec, rng: np.random.Generator) -> tuple[TabularMdp, dict]:
    p_states, p_actions, p_nexts = _collect_physics(spec, rng)
    weights = _fit_linear(p_states, p_actions, p_nexts)

    fit_sse = 0.0
    zero_dynamics_sse = 0.0  # baseline predictor: state does not move
    for a in (0, 1):
        mask = p_actions == a
        pred = _linear_next(p_states[mask], weights[a])
        fit_sse += float(((p_nexts[mask] - pred) ** 2).sum())
        zero_dynamics_sse += float(((p_nexts[mask] - p_states[mask]) ** 2).sum())

    cloud = _synthetic_cloud(spec, weights, rng)
    idx = rng.choice(cloud.shape[0], size=spec.resolution, replace=False)
    centroids = cloud[idx]
    failing = _is_failure(centroids, spec)

    n = spec.resolution
    rewards = np.zeros((n, 2))
    rewards[~failing, :] = 1.0
    transitions = np.zeros((n, 2, n))
    for a in (0, 1):
        nxt = _linear_next(centroids, weights[a])
        d2 = ((nxt[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        nearest = d2.argmin(axis=1)
        for i in range(n):
            if failing[i]:
                transitions[i, a, i] = 1.0  # absorbing
            else:
                transitions[i, a, nearest[i]] = 1.0
    start = int(((centroids**2).sum(axis=1)).argmin())  # nearest the upright origin
    initial = np.zeros(n)
    initial[start] = 1.0
    mdp = TabularMdp(
        n_states=n,
        n_actions=2,
        rewards=rewards,
        transitions=transitions,
        discount=spec.discount,
        initial_dist=initial,
    )
    metadata = {
        "domain": "cartpole",
        "resolution": n,
        "n_failing_states": int(failing.sum()),
        "start_state": start,
        "fit_sse": fit_sse,
        "zero_dynamics_sse": zero_dynamics_sse,
        "centroids": centroids.tolist(),
        "discount": spec.discount,
    }
    return mdp, metadata


# ---------------------------------------------------------------------------
# baseline data
# ---------------------------------------------------------------------------

def generate_baseline_data(
    mdp: TabularMdp,
    policy: SoftmaxPolicy,
    n_transitions: int,
    rng: np.random.Generator,
    episode_length: int = 50,
) -> TransitionLog:
    """Roll `policy` through `mdp`, restarting every episode_length steps,
    until n_transitions (state, action, next_state) records are logged."""
    if n_transitions < 1:
        raise ValueError(f"n_transitions must be >= 1, got {n_transitions}")
    if episode_length < 1:
        raise ValueError(f"episode_length must be >= 1, got {episode_length}")
    mdp.require_valid()
    cdf = mdp.transition_cdf()
    p0_cdf = np.cumsum(mdp.initial_dist)
    records = np.empty((n_transitions, 3), dtype=np.int64)
    i = 0
    while i < n_transitions:
        s = min(int(np.searchsorted(p0_cdf, rng.random(), side="right")), mdp.n_states - 1)
        for _ in range(episode_length):
            a = policy.sample_action(s, rng)
            s2 = min(
                int(np.searchsorted(cdf[s, a], rng.random(), side="right")),
                mdp.n_states - 1,
            )
            records[i] = (s, a, s2)
            i += 1
            s = s2
            if i >= n_transitions:
                break
    return TransitionLog(n_states=mdp.n_states, n_actions=mdp.n_actions, records=records)
