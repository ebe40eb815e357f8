"""Training loops: batch policy gradient and incremental actor-critic.

Both optimize the soft-robust Lagrangian by stochastic ascent in the policy
logits and projected descent in the multiplier. Per episode, a fresh set of
models is drawn from the posterior (or the posterior mean is reused, for the
aleatoric-only variant); all updates within an episode are computed against
the pre-update parameters and applied simultaneously at episode end.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .lagrangian import (
    EXP_ARG_MAX,
    LagrangianState,
    grad_estimates_sampled,
    penalty_sigma,
)
from .mdp import discounted_return, simulate
from .policy import SoftmaxPolicy
from .risk import RiskConfig, WeightedSamples, certainty_equivalent, entropic_risk

TD_MODES = ("paper", "standard")
MODEL_SOURCES = ("posterior", "mean")


@dataclass(frozen=True)
class StepSchedule:
    """zeta(k) = base / (1 + k)^exponent.

    base may be zero: a switched-off schedule is how the risk-neutral compare
    variant pins its multiplier. exponent stays in (0.5, 1].
    """

    base: float
    exponent: float

    def __post_init__(self):
        if not np.isfinite(self.base) or self.base < 0:
            raise ValueError(f"schedule base must be >= 0 and finite, got {self.base}")
        if not (0.5 < self.exponent <= 1.0):
            raise ValueError(f"schedule exponent must be in (0.5, 1], got {self.exponent}")

    def __call__(self, k: int) -> float:
        if k < 0:
            raise ValueError(f"episode index must be >= 0, got {k}")
        return self.base / (1.0 + k) ** self.exponent


def td_error(
    reward: float,
    v_state: float,
    v_next: float,
    alpha: float,
    gamma: float,
    mode: str = "standard",
) -> float:
    """One-step temporal difference with the reward passed through the
    scalar risk (identity for a single sample).

    'standard': rho(r) + gamma * v_next - v_state.
    'paper':    rho(r) + v_state - v_next (no discount on the bootstrap,
                and the value difference is reversed).
    """
    rho = certainty_equivalent(reward, alpha)
    if mode == "standard":
        return rho + gamma * v_next - v_state
    if mode == "paper":
        return rho + v_state - v_next
    raise ValueError(f"td mode must be one of {TD_MODES}, got {mode!r}")


@dataclass(eq=False)
class CriticWeights:
    """Linear state-value critic: v(s) = features[s] @ w."""

    w: np.ndarray
    features: np.ndarray  # (S, D)

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=float)
        self.features = np.asarray(self.features, dtype=float)
        if self.features.ndim != 2:
            raise ValueError("features must be (S, D)")
        if self.w.shape != (self.features.shape[1],):
            raise ValueError(
                f"w shape {self.w.shape}, expected ({self.features.shape[1]},)"
            )

    @classmethod
    def one_hot(cls, n_states: int) -> "CriticWeights":
        return cls(np.zeros(n_states), np.eye(n_states))

    def value(self, s: int) -> float:
        return float(self.features[s] @ self.w)

    def values(self) -> np.ndarray:
        return self.features @ self.w


def _default_zeta1():
    return StepSchedule(0.01, 1.0)


def _default_zeta2():
    return StepSchedule(0.05, 0.8)


def _default_zeta3():
    return StepSchedule(0.1, 0.6)


@dataclass
class TrainConfig:
    """Everything the training loops need besides the posterior and rng."""

    episodes: int
    n_models: int
    horizon: int
    alpha: float = 0.9
    beta: float = 1.0
    penalty_sign: str = "robust"
    td_mode: str = "standard"
    n_trajectories: int = 5
    lambda0: float = 0.0
    lambda_max: float = 100.0
    zeta1: StepSchedule = field(default_factory=_default_zeta1)  # multiplier
    zeta2: StepSchedule = field(default_factory=_default_zeta2)  # actor
    zeta3: StepSchedule = field(default_factory=_default_zeta3)  # critic
    model_source: str = "posterior"

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.episodes < 0:
            raise ValueError(f"episodes must be >= 0, got {self.episodes}")
        if self.n_models < 1:
            raise ValueError(f"n_models must be >= 1, got {self.n_models}")
        if self.horizon < 1:
            raise ValueError(f"horizon must be >= 1, got {self.horizon}")
        if self.n_trajectories < 1:
            raise ValueError(f"n_trajectories must be >= 1, got {self.n_trajectories}")
        RiskConfig(self.alpha, self.beta)  # validates alpha/beta
        penalty_sigma(self.penalty_sign)
        if self.td_mode not in TD_MODES:
            raise ValueError(f"td_mode must be one of {TD_MODES}, got {self.td_mode!r}")
        if self.model_source not in MODEL_SOURCES:
            raise ValueError(
                f"model_source must be one of {MODEL_SOURCES}, got {self.model_source!r}"
            )
        if not np.isfinite(self.lambda0) or self.lambda0 < 0:
            raise ValueError(f"lambda0 must be >= 0 and finite, got {self.lambda0}")
        if not np.isfinite(self.lambda_max) or self.lambda_max < self.lambda0:
            raise ValueError(
                f"lambda_max must be finite and >= lambda0, got {self.lambda_max}"
            )

    def risk(self) -> RiskConfig:
        return RiskConfig(self.alpha, self.beta)


@dataclass(eq=False)
class EpisodeTrace:
    """Post-update snapshot of one training episode. Carries no timing, so
    traces are bit-identical across runs with the same seed and config."""

    episode: int
    lam: float
    constraint_estimate: float
    mean_return: float
    min_return: float
    per_model_returns: np.ndarray
    theta_norm: float
    initial_state_probs: np.ndarray


@dataclass(eq=False)
class TrainResult:
    policy: SoftmaxPolicy
    critic: CriticWeights | None
    traces: list
    wall_ms_total: float


def _episode_models(config: TrainConfig, posterior, rng, mean_model):
    if config.model_source == "mean":
        return [mean_model] * config.n_models
    return posterior.sample_models(config.n_models, rng)


def _make_trace(
    k: int,
    per_model_returns: np.ndarray,
    lam: float,
    policy: SoftmaxPolicy,
    risk: RiskConfig,
    start_state: int,
) -> EpisodeTrace:
    dist = WeightedSamples(
        per_model_returns, np.full(per_model_returns.size, 1.0 / per_model_returns.size)
    )
    return EpisodeTrace(
        episode=k,
        lam=float(lam),
        constraint_estimate=entropic_risk(dist, risk.alpha),
        mean_return=float(per_model_returns.mean()),
        min_return=float(per_model_returns.min()),
        per_model_returns=per_model_returns,
        theta_norm=float(np.linalg.norm(policy.theta)),
        initial_state_probs=policy.action_probabilities(start_state),
    )


def run_policy_gradient(
    config: TrainConfig,
    posterior,
    rng: np.random.Generator,
    theta0: np.ndarray | None = None,
) -> TrainResult:
    """Batch trajectory policy gradient on the soft-robust Lagrangian.

    Per episode: draw n_models models, roll n_trajectories per model, form
    the sampled Lagrangian gradients, then ascend theta and descend lam (with
    projection onto [0, lambda_max]).
    """
    config.validate()
    t_start = time.perf_counter()
    s_count, a_count = posterior.n_states, posterior.n_actions
    theta = np.zeros(s_count * a_count) if theta0 is None else np.asarray(theta0, float)
    policy = SoftmaxPolicy(theta, s_count, a_count)
    lam = config.lambda0
    risk = config.risk()
    gamma = posterior.discount
    mean_model = posterior.mean_model() if config.model_source == "mean" else None
    start_state = int(np.argmax(posterior.initial_dist))
    traces = []
    for k in range(config.episodes):
        models = _episode_models(config, posterior, rng, mean_model)
        batches = [
            [simulate(m, policy, config.horizon, rng) for _ in range(config.n_trajectories)]
            for m in models
        ]
        state = LagrangianState(
            lam=lam, risk=risk, horizon=config.horizon, penalty_sign=config.penalty_sign
        )
        theta_grad, lambda_grad = grad_estimates_sampled(
            batches, policy, state, gamma=gamma
        )
        policy = policy.updated(config.zeta2(k) * theta_grad)
        lam = float(np.clip(lam - config.zeta1(k) * lambda_grad, 0.0, config.lambda_max))
        batch_means = np.asarray(
            [np.mean([discounted_return(t, gamma) for t in batch]) for batch in batches]
        )
        traces.append(_make_trace(k, batch_means, lam, policy, risk, start_state))
    wall_ms = (time.perf_counter() - t_start) * 1000.0
    return TrainResult(policy=policy, critic=None, traces=traces, wall_ms_total=wall_ms)


def run_actor_critic(
    config: TrainConfig,
    posterior,
    rng: np.random.Generator,
    theta0: np.ndarray | None = None,
    features: np.ndarray | None = None,
) -> TrainResult:
    """Incremental actor-critic on the soft-robust Lagrangian.

    Per episode: draw n_models models and roll one horizon-length trajectory
    per model, accumulating per-step actor, multiplier, and critic increments
    against the pre-update parameters; per-model accumulators are divided by
    the horizon, averaged over models, and applied once at episode end.
    """
    config.validate()
    t_start = time.perf_counter()
    s_count, a_count = posterior.n_states, posterior.n_actions
    theta = np.zeros(s_count * a_count) if theta0 is None else np.asarray(theta0, float)
    policy = SoftmaxPolicy(theta, s_count, a_count)
    feats = np.eye(s_count) if features is None else np.asarray(features, dtype=float)
    one_hot = feats.shape == (s_count, s_count) and np.array_equal(feats, np.eye(s_count))
    w = np.zeros(feats.shape[1])
    lam = config.lambda0
    alpha, gamma = config.alpha, posterior.discount
    sigma = penalty_sigma(config.penalty_sign)
    e_beta = math.exp(-alpha * config.beta)
    risk = config.risk()
    mean_model = posterior.mean_model() if config.model_source == "mean" else None
    start_state = int(np.argmax(posterior.initial_dist))
    horizon, n_models = config.horizon, config.n_models
    traces = []
    for k in range(config.episodes):
        models = _episode_models(config, posterior, rng, mean_model)
        table = policy.probability_table()
        pi_cdf = np.cumsum(table, axis=1)
        theta_bar = np.zeros((s_count, a_count))
        lambda_bar = 0.0
        w_bar = np.zeros_like(w)
        ep_returns = np.empty(n_models)
        for i, model in enumerate(models):
            model.require_valid()
            cdf = model.transition_cdf()
            rewards = model.rewards
            p0_cdf = np.cumsum(model.initial_dist)
            u = rng.random(2 * horizon + 1)
            s = min(int(np.searchsorted(p0_cdf, u[0], side="right")), s_count - 1)
            theta_hat = np.zeros((s_count, a_count))
            lambda_hat = 0.0
            w_hat = np.zeros_like(w)
            ret = 0.0
            disc = 1.0
            for t in range(horizon):
                a = min(
                    int(np.searchsorted(pi_cdf[s], u[2 * t + 1], side="right")),
                    a_count - 1,
                )
                r = float(rewards[s, a])
                s2 = min(
                    int(np.searchsorted(cdf[s, a], u[2 * t + 2], side="right")),
                    s_count - 1,
                )
                if one_hot:
                    v_s, v_s2 = w[s], w[s2]
                else:
                    v_s = float(feats[s] @ w)
                    v_s2 = float(feats[s2] @ w)
                delta = td_error(r, v_s, v_s2, alpha, gamma, config.td_mode)
                e = math.exp(min(-alpha * delta, EXP_ARG_MAX))
                coeff = delta * (1.0 - sigma * alpha * lam * e)
                theta_hat[s] -= coeff * table[s]
                theta_hat[s, a] += coeff
                lambda_hat += sigma * (e - e_beta)
                if one_hot:
                    w_hat[s] += delta
                else:
                    w_hat += delta * feats[s]
                ret += disc * r
                disc *= gamma
                s = s2
            theta_bar += theta_hat / horizon
            lambda_bar += lambda_hat / horizon
            w_bar += w_hat / horizon
            ep_returns[i] = ret
        policy = policy.updated(config.zeta2(k) * (theta_bar / n_models).ravel())
        lam = float(
            np.clip(lam - config.zeta1(k) * (lambda_bar / n_models), 0.0, config.lambda_max)
        )
        w = w + config.zeta3(k) * (w_bar / n_models)
        traces.append(_make_trace(k, ep_returns, lam, policy, risk, start_state))
    wall_ms = (time.perf_counter() - t_start) * 1000.0
    return TrainResult(
        policy=policy,
        critic=CriticWeights(w, feats),
        traces=traces,
        wall_ms_total=wall_ms,
    )
