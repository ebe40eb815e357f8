"""Tabular softmax policies with score-function gradients."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# logits live in [-LOGIT_CLIP, LOGIT_CLIP]; keeps exp() bounded and update
# magnitudes meaningful
LOGIT_CLIP = 50.0


@dataclass(eq=False)
class SoftmaxPolicy:
    """pi(a|s) = softmax over the state-s block of a flat logit vector.

    theta has length S*A, row-major by state. Logits are clipped into
    [-LOGIT_CLIP, LOGIT_CLIP] at construction, so any update lands back in
    the box and probabilities stay bounded away from exact 0/1.
    """

    theta: np.ndarray
    n_states: int
    n_actions: int

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=float)
        if theta.shape != (self.n_states * self.n_actions,):
            raise ValueError(
                f"theta must have shape ({self.n_states * self.n_actions},), got {theta.shape}"
            )
        if not np.all(np.isfinite(theta)):
            raise ValueError("theta must be finite")
        self.theta = np.clip(theta, -LOGIT_CLIP, LOGIT_CLIP)

    @classmethod
    def uniform(cls, n_states: int, n_actions: int) -> "SoftmaxPolicy":
        return cls(np.zeros(n_states * n_actions), n_states, n_actions)

    def _block(self, s: int) -> np.ndarray:
        return self.theta[s * self.n_actions : (s + 1) * self.n_actions]

    def action_probabilities(self, s: int) -> np.ndarray:
        z = self._block(s)
        e = np.exp(z - z.max())
        return e / e.sum()

    def probability_table(self) -> np.ndarray:
        """(S, A) table of action probabilities."""
        z = self.theta.reshape(self.n_states, self.n_actions)
        e = np.exp(z - z.max(axis=1, keepdims=True))
        return e / e.sum(axis=1, keepdims=True)

    def sample_action(self, s: int, rng: np.random.Generator) -> int:
        p = self.action_probabilities(s)
        idx = int(np.searchsorted(np.cumsum(p), rng.random(), side="right"))
        return min(idx, self.n_actions - 1)

    def score(self, s: int, a: int) -> np.ndarray:
        """grad_theta log pi(a|s): onehot(a) - pi(.|s) on the state-s block."""
        if not (0 <= a < self.n_actions):
            raise ValueError(f"action {a} out of range for A={self.n_actions}")
        g = np.zeros_like(self.theta)
        block = g[s * self.n_actions : (s + 1) * self.n_actions]
        block -= self.action_probabilities(s)
        block[a] += 1.0
        return g

    def updated(self, delta: np.ndarray) -> "SoftmaxPolicy":
        """New policy with theta + delta, re-clipped into the logit box."""
        delta = np.asarray(delta, dtype=float)
        if delta.shape != self.theta.shape:
            raise ValueError(f"delta shape {delta.shape}, expected {self.theta.shape}")
        if not np.all(np.isfinite(delta)):
            raise ValueError("update must be finite")
        return SoftmaxPolicy(self.theta + delta, self.n_states, self.n_actions)
