"""Soft-robust policy optimization under model uncertainty, with an
exponential-utility risk constraint on across-model performance."""

from .algo import (
    CriticWeights,
    EpisodeTrace,
    StepSchedule,
    TrainConfig,
    TrainResult,
    run_actor_critic,
    run_policy_gradient,
    td_error,
)
from .lagrangian import (
    LagrangianState,
    ModelEnsemble,
    constraint_value,
    expected_return_per_model,
    grad_estimates_sampled,
    grad_lambda_exact,
    grad_theta_exact,
    lagrangian_value,
)
from .mdp import (
    TabularMdp,
    Trajectory,
    discounted_return,
    enumerate_trajectories,
    exact_policy_value,
    simulate,
    trajectory_probability,
)
from .policy import SoftmaxPolicy
from .posterior import DirichletPosterior, TransitionLog, posterior_from_data
from .risk import RiskConfig, WeightedSamples, entropic_bellman, entropic_risk

__version__ = "0.1.0"

__all__ = [
    "CriticWeights",
    "DirichletPosterior",
    "EpisodeTrace",
    "LagrangianState",
    "ModelEnsemble",
    "RiskConfig",
    "SoftmaxPolicy",
    "StepSchedule",
    "TabularMdp",
    "TrainConfig",
    "TrainResult",
    "Trajectory",
    "TransitionLog",
    "WeightedSamples",
    "constraint_value",
    "discounted_return",
    "entropic_bellman",
    "entropic_risk",
    "enumerate_trajectories",
    "exact_policy_value",
    "expected_return_per_model",
    "grad_estimates_sampled",
    "grad_lambda_exact",
    "grad_theta_exact",
    "lagrangian_value",
    "posterior_from_data",
    "run_actor_critic",
    "run_policy_gradient",
    "simulate",
    "td_error",
    "trajectory_probability",
]
