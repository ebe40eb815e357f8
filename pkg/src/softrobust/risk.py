"""Exponential-utility risk over discrete outcome distributions.

The risk functional is rho_alpha(X) = -(1/alpha) * log E[exp(-alpha * X)].
It interpolates between the expectation (alpha -> 0) and the essential
infimum (alpha -> inf), and shifts by c when every outcome shifts by c,
which is what makes it usable as a constraint level on returns.

Also provides the exponential-utility Bellman backup used by the planners:
the reward enters through the utility -exp(-r) while the continuation stays
a plain probability-weighted average.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .mdp import TabularMdp

# Below this alpha the log-sum-exp cancels to roundoff; the measure is within
# O(alpha) of the plain mean, so return the mean instead.
MEAN_FALLBACK_ALPHA = 1e-10


@dataclass(frozen=True, eq=False)
class WeightedSamples:
    """A finite outcome distribution: values with probability weights.

    Weights may arrive unnormalized; they are validated (nonnegative, finite,
    positive total) and stored normalized.
    """

    values: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if values.ndim != 1 or weights.ndim != 1:
            raise ValueError("values and weights must be 1-d")
        if values.shape != weights.shape:
            raise ValueError(
                f"length mismatch: {values.shape[0]} values, {weights.shape[0]} weights"
            )
        if values.size == 0:
            raise ValueError("empty distribution")
        if not np.all(np.isfinite(values)):
            raise ValueError("values must be finite")
        if not np.all(np.isfinite(weights)) or np.any(weights < 0):
            raise ValueError("weights must be finite and nonnegative")
        total = weights.sum()
        if total <= 0:
            raise ValueError("weights must have positive total mass")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "weights", weights / total)

    @property
    def mean(self) -> float:
        return float(self.values @ self.weights)


@dataclass(frozen=True)
class RiskConfig:
    """Risk-aversion level alpha and constraint floor beta."""

    alpha: float
    beta: float

    def __post_init__(self):
        if not np.isfinite(self.alpha) or self.alpha <= 0:
            raise ValueError(f"alpha must be positive and finite, got {self.alpha}")
        if not np.isfinite(self.beta):
            raise ValueError(f"beta must be finite, got {self.beta}")


def entropic_risk(dist: WeightedSamples, alpha: float) -> float:
    """-(1/alpha) * log E[exp(-alpha X)] for the discrete distribution dist.

    Computed with a max-shift so that large alpha*values never overflow:
    log sum_i w_i e^{-a x_i} = -a*m + log sum_i w_i e^{-a(x_i - m)} with
    m = min(x_i). For alpha below MEAN_FALLBACK_ALPHA the mean is returned.
    """
    if not np.isfinite(alpha) or alpha < 0:
        raise ValueError(f"alpha must be nonnegative and finite, got {alpha}")
    if alpha < MEAN_FALLBACK_ALPHA:
        return dist.mean
    support = dist.weights > 0
    values = dist.values[support]
    weights = dist.weights[support]
    m = float(values.min())
    # exponents are <= 0 after the shift, so the sum is in (0, 1]
    shifted = np.exp(-alpha * (values - m))
    return m - np.log(float(shifted @ weights)) / alpha


def certainty_equivalent(value: float, alpha: float) -> float:
    """Risk of a degenerate (single-outcome) distribution: the value itself."""
    if not math.isfinite(value):
        raise ValueError(f"value must be finite, got {value}")
    return float(value)


def entropic_bellman(mdp: TabularMdp, v: np.ndarray) -> np.ndarray:
    """One exponential-utility backup: max_a[-e^{-R(s,a)} + gamma * P v].

    The reward passes through the utility -exp(-r); the continuation term is
    the ordinary expectation of v under the transition row. Returns the
    backed-up value for every state.
    """
    v = np.asarray(v, dtype=float)
    if v.shape != (mdp.n_states,):
        raise ValueError(
            f"value vector must have shape ({mdp.n_states},), got {v.shape}"
        )
    if not np.all(np.isfinite(v)):
        raise ValueError("value vector must be finite")
    # (S, A) action values, then max over actions
    q = -np.exp(-mdp.rewards) + mdp.discount * (mdp.transitions @ v)
    return q.max(axis=1)
