"""Soft-robust objective over a model ensemble, its Lagrangian, and gradients.

Per model m with weight P(m), F_m(theta) is the expected discounted return of
the policy. The objective maximizes sum_m P(m) F_m subject to the
exponential-utility risk of the F_m staying above a floor beta, i.e.

    -(1/alpha) log sum_m P(m) exp(-alpha F_m) >= beta,

equivalently g(theta) = sum_m P(m) exp(-alpha F_m) - exp(-alpha beta) <= 0.

penalty_sign selects how the multiplier term enters the Lagrangian:

  * 'paper'  : L = sum_m P(m) F_m + lam * g   (the multiplier term is a
               bonus that grows as returns drop, so ascent in theta is
               drawn toward violation)
  * 'robust' : L = sum_m P(m) F_m - lam * g   (violation is penalized;
               low-return models get up-weighted by 1 + alpha*lam*e^{-a F_m})

Both modes report gradients consistent with their own L, so finite
differences of lagrangian_value match grad_theta/grad_lambda either way.
'robust' is the shipped default.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mdp import (
    DEFAULT_ENUMERATION_CAP,
    Trajectory,
    discounted_return,
    enumerate_trajectories,
)
from .policy import SoftmaxPolicy
from .risk import RiskConfig, WeightedSamples, entropic_risk

PENALTY_SIGNS = ("paper", "robust")

# cap on exp() arguments: keeps gradients finite when a return estimate is
# catastrophically negative; e^700 already dwarfs every other term
EXP_ARG_MAX = 700.0


def exp_neg(alpha: float, x) -> np.ndarray | float:
    """exp(-alpha * x) with the argument capped to stay finite."""
    return np.exp(np.minimum(-alpha * np.asarray(x, dtype=float), EXP_ARG_MAX))


def penalty_sigma(penalty_sign: str) -> float:
    """+1 for 'paper', -1 for 'robust'."""
    if penalty_sign not in PENALTY_SIGNS:
        raise ValueError(f"penalty_sign must be one of {PENALTY_SIGNS}, got {penalty_sign!r}")
    return 1.0 if penalty_sign == "paper" else -1.0


@dataclass(eq=False)
class ModelEnsemble:
    """Finite weighted collection of transition models sharing (S, A)."""

    models: list
    weights: np.ndarray

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        if len(self.models) == 0:
            raise ValueError("ensemble needs at least one model")
        if self.weights.shape != (len(self.models),):
            raise ValueError(
                f"{len(self.models)} models but weight shape {self.weights.shape}"
            )
        if np.any(self.weights < 0) or not np.all(np.isfinite(self.weights)):
            raise ValueError("weights must be finite and nonnegative")
        if abs(self.weights.sum() - 1.0) > 1e-9:
            raise ValueError(f"weights sum to {self.weights.sum()!r}, expected 1")
        shapes = {(m.n_states, m.n_actions) for m in self.models}
        if len(shapes) != 1:
            raise ValueError(f"models disagree on (S, A): {sorted(shapes)}")

    @classmethod
    def from_posterior(cls, posterior, n_models: int, rng) -> "ModelEnsemble":
        """n_models posterior draws with uniform weights 1/n."""
        models = posterior.sample_models(n_models, rng)
        return cls(models=models, weights=np.full(n_models, 1.0 / n_models))

    def __len__(self) -> int:
        return len(self.models)


@dataclass(eq=False)
class LagrangianState:
    """Multiplier, risk levels, horizon, and sign convention for one step."""

    lam: float
    risk: RiskConfig
    horizon: int
    penalty_sign: str = "robust"
    theta: np.ndarray | None = None  # optional snapshot, not used by the ops

    def __post_init__(self):
        if not np.isfinite(self.lam) or self.lam < 0:
            raise ValueError(f"lam must be nonnegative and finite, got {self.lam}")
        if self.horizon < 1:
            raise ValueError(f"horizon must be >= 1, got {self.horizon}")
        penalty_sigma(self.penalty_sign)  # validates


def expected_return_per_model(
    ensemble: ModelEnsemble,
    policy: SoftmaxPolicy,
    horizon: int,
    cap: int = DEFAULT_ENUMERATION_CAP,
) -> np.ndarray:
    """F_m = sum over trajectories of P(xi) * return(xi), by enumeration."""
    out = np.empty(len(ensemble))
    for i, m in enumerate(ensemble.models):
        total = 0.0
        for traj, p in enumerate_trajectories(m, policy, horizon, cap=cap):
            total += p * discounted_return(traj, m.discount)
        out[i] = total
    return out


def constraint_value(
    ensemble: ModelEnsemble, policy: SoftmaxPolicy, state: LagrangianState
) -> float:
    """Risk of the per-model returns: -(1/alpha) log sum_m P(m) e^{-alpha F_m}."""
    f = expected_return_per_model(ensemble, policy, state.horizon)
    return entropic_risk(WeightedSamples(f, ensemble.weights), state.risk.alpha)


def _constraint_gap(f: np.ndarray, weights: np.ndarray, risk: RiskConfig) -> float:
    """g = sum_m P(m) e^{-alpha F_m} - e^{-alpha beta}; feasible iff g <= 0."""
    return float(weights @ exp_neg(risk.alpha, f) - np.exp(-risk.alpha * risk.beta))


def lagrangian_value(
    ensemble: ModelEnsemble, policy: SoftmaxPolicy, state: LagrangianState
) -> float:
    """sum_m P(m) F_m + sigma * lam * g under the state's sign convention."""
    f = expected_return_per_model(ensemble, policy, state.horizon)
    sigma = penalty_sigma(state.penalty_sign)
    return float(ensemble.weights @ f) + sigma * state.lam * _constraint_gap(
        f, ensemble.weights, state.risk
    )


def grad_theta_exact(
    ensemble: ModelEnsemble, policy: SoftmaxPolicy, state: LagrangianState
) -> np.ndarray:
    """grad_theta of the Lagrangian by trajectory enumeration.

    grad F_m = sum_xi P(xi) * return(xi) * sum_t score(s_t, a_t), and each
    model's contribution is scaled by (1 - sigma * alpha * lam * e^{-alpha F_m}),
    which in 'robust' mode becomes 1 + alpha*lam*e^{-alpha F_m}: models with
    low return get pushed harder.
    """
    alpha = state.risk.alpha
    sigma = penalty_sigma(state.penalty_sign)
    table = policy.probability_table()
    grad = np.zeros_like(policy.theta)
    f = np.empty(len(ensemble))
    grads_f = []
    for i, m in enumerate(ensemble.models):
        gf = np.zeros_like(policy.theta)
        total = 0.0
        for traj, p in enumerate_trajectories(m, policy, state.horizon):
            ret = discounted_return(traj, m.discount)
            total += p * ret
            gf += p * ret * _score_sum(traj, table, policy.n_actions)
        f[i] = total
        grads_f.append(gf)
    for i in range(len(ensemble)):
        factor = 1.0 - sigma * alpha * state.lam * exp_neg(alpha, f[i])
        grad += ensemble.weights[i] * factor * grads_f[i]
    return grad


def grad_lambda_exact(
    ensemble: ModelEnsemble, policy: SoftmaxPolicy, state: LagrangianState
) -> float:
    """dL/d lam = sigma * g. Positive in 'robust' mode iff the constraint holds."""
    f = expected_return_per_model(ensemble, policy, state.horizon)
    sigma = penalty_sigma(state.penalty_sign)
    return sigma * _constraint_gap(f, ensemble.weights, state.risk)


def _score_sum(traj: Trajectory, table: np.ndarray, n_actions: int) -> np.ndarray:
    """sum_t grad log pi(a_t|s_t), computed from visit counts.

    For each visited state s: (count of (s, a)) - (count of s) * pi(.|s).
    """
    n_states = table.shape[0]
    sa_counts = np.zeros((n_states, n_actions))
    np.add.at(sa_counts, (traj.states, traj.actions), 1.0)
    s_counts = sa_counts.sum(axis=1)
    return (sa_counts - s_counts[:, None] * table).ravel()


def grad_estimates_sampled(
    batches: list[list[Trajectory]],
    policy: SoftmaxPolicy,
    state: LagrangianState,
    gamma: float,
) -> tuple[np.ndarray, float]:
    """Monte-Carlo (grad_theta, grad_lambda) from per-model trajectory batches.

    batches[m] holds the trajectories sampled under model m; every trajectory
    gets empirical weight 1/len(batch). F_m is estimated by the batch mean
    return, the per-model contributions use the same (1 - sigma*alpha*lam*
    e^{-alpha F_m}) factor as the exact gradient, and the outputs are already
    averaged over models (apply them directly, no further 1/M).
    """
    if len(batches) == 0:
        raise ValueError("need at least one model batch")
    alpha = state.risk.alpha
    sigma = penalty_sigma(state.penalty_sign)
    table = policy.probability_table()
    e_beta = np.exp(-alpha * state.risk.beta)
    theta_grad = np.zeros_like(policy.theta)
    lambda_grad = 0.0
    for batch in batches:
        if len(batch) == 0:
            raise ValueError("empty trajectory batch")
        returns = np.asarray([discounted_return(t, gamma) for t in batch])
        f_hat = float(returns.mean())
        weighted = np.zeros_like(policy.theta)
        for ret, traj in zip(returns, batch):
            weighted += ret * _score_sum(traj, table, policy.n_actions)
        weighted /= len(batch)
        e_f = float(exp_neg(alpha, f_hat))
        theta_grad += (1.0 - sigma * alpha * state.lam * e_f) * weighted
        lambda_grad += sigma * (e_f - e_beta)
    n = len(batches)
    return theta_grad / n, lambda_grad / n
