"""Dirichlet-categorical belief over transition rows, fit from logged data.

Each (state, action) transition row gets an independent Dirichlet with
concentration = prior + observed counts. Rewards, discount, and the initial
distribution are treated as known and carried through from a template model;
only the transition rows are uncertain.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .mdp import TabularMdp


@dataclass(eq=False)
class TransitionLog:
    """Logged (state, action, next_state) triples for a known (S, A) shape.

    File format: first line "S A", then one "s a s2" triple per line.
    """

    n_states: int
    n_actions: int
    records: np.ndarray  # (N, 3) int64

    def __post_init__(self):
        self.records = np.asarray(self.records, dtype=np.int64).reshape(-1, 3)
        s, a = self.n_states, self.n_actions
        if s < 1 or a < 1:
            raise ValueError(f"need S >= 1 and A >= 1, got S={s}, A={a}")
        if self.records.size:
            if self.records.min() < 0:
                raise ValueError("negative index in transition log")
            if self.records[:, 0].max() >= s or self.records[:, 2].max() >= s:
                raise ValueError(f"state index out of range for S={s}")
            if self.records[:, 1].max() >= a:
                raise ValueError(f"action index out of range for A={a}")

    def __len__(self) -> int:
        return int(self.records.shape[0])

    def save(self, path):
        lines = [f"{self.n_states} {self.n_actions}"]
        lines.extend(f"{s} {a} {s2}" for s, a, s2 in self.records)
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "TransitionLog":
        text = Path(path).read_text(encoding="utf-8").strip().split("\n")
        if not text or not text[0].strip():
            raise ValueError(f"empty transition log: {path}")
        header = text[0].split()
        if len(header) != 2:
            raise ValueError(f"bad transition log header: {text[0]!r}")
        s, a = int(header[0]), int(header[1])
        body = [ln.split() for ln in text[1:] if ln.strip()]
        records = np.asarray([[int(x) for x in row] for row in body], dtype=np.int64)
        return cls(n_states=s, n_actions=a, records=records.reshape(-1, 3))

    def counts(self) -> np.ndarray:
        """Observed transition counts as an (S, A, S) tensor."""
        c = np.zeros((self.n_states, self.n_actions, self.n_states))
        if len(self):
            np.add.at(c, (self.records[:, 0], self.records[:, 1], self.records[:, 2]), 1.0)
        return c


@dataclass(eq=False)
class DirichletPosterior:
    """Per-row Dirichlet belief plus the known parts of the model."""

    concentrations: np.ndarray  # (S, A, S), strictly positive
    rewards: np.ndarray         # (S, A)
    discount: float
    initial_dist: np.ndarray    # (S,)

    def __post_init__(self):
        self.concentrations = np.asarray(self.concentrations, dtype=float)
        self.rewards = np.asarray(self.rewards, dtype=float)
        self.initial_dist = np.asarray(self.initial_dist, dtype=float)
        s, a = self.rewards.shape
        if self.concentrations.shape != (s, a, s):
            raise ValueError(
                f"concentrations shape {self.concentrations.shape}, expected {(s, a, s)}"
            )
        if np.any(self.concentrations <= 0) or not np.all(np.isfinite(self.concentrations)):
            raise ValueError("concentrations must be strictly positive and finite")

    @property
    def n_states(self) -> int:
        return int(self.rewards.shape[0])

    @property
    def n_actions(self) -> int:
        return int(self.rewards.shape[1])

    def _wrap(self, transitions: np.ndarray) -> TabularMdp:
        return TabularMdp(
            n_states=self.n_states,
            n_actions=self.n_actions,
            rewards=self.rewards,
            transitions=transitions,
            discount=self.discount,
            initial_dist=self.initial_dist,
        )

    def sample_model(self, rng: np.random.Generator) -> TabularMdp:
        """Draw one transition model: each row is Dirichlet(concentrations)."""
        return self._wrap(self._normalize(rng.standard_gamma(self.concentrations)))

    def sample_models(self, n: int, rng: np.random.Generator) -> list[TabularMdp]:
        """Draw n models in one vectorized pass.

        Each model has the same marginal law as sample_model; the generator
        stream is consumed in a different order than n sequential calls.
        """
        if n < 1:
            raise ValueError(f"need n >= 1, got {n}")
        g = rng.standard_gamma(np.broadcast_to(self.concentrations, (n, *self.concentrations.shape)))
        return [self._wrap(self._normalize(g[i])) for i in range(n)]

    @staticmethod
    def _normalize(gamma_draws: np.ndarray) -> np.ndarray:
        sums = gamma_draws.sum(axis=-1, keepdims=True)
        # guards gamma underflow at tiny concentrations
        flat = sums == 0.0
        if np.any(flat):
            gamma_draws = np.where(flat, 1.0, gamma_draws)
            sums = gamma_draws.sum(axis=-1, keepdims=True)
        return gamma_draws / sums

    def mean_model(self) -> TabularMdp:
        """Posterior-mean transitions: normalized concentrations."""
        return self._wrap(self._normalize(self.concentrations.copy()))


def posterior_from_data(
    prior_concentration: float,
    log: TransitionLog,
    template: TabularMdp,
) -> DirichletPosterior:
    """prior + counts posterior over the template's transition rows.

    The template supplies rewards, discount, and initial distribution (the
    known structure); its transition rows are ignored. Log shape must match.
    """
    if prior_concentration <= 0 or not np.isfinite(prior_concentration):
        raise ValueError(
            f"prior_concentration must be positive and finite, got {prior_concentration}"
        )
    if (log.n_states, log.n_actions) != (template.n_states, template.n_actions):
        raise ValueError(
            f"log shape ({log.n_states}, {log.n_actions}) does not match "
            f"template ({template.n_states}, {template.n_actions})"
        )
    return DirichletPosterior(
        concentrations=prior_concentration + log.counts(),
        rewards=template.rewards,
        discount=template.discount,
        initial_dist=template.initial_dist,
    )


def point_mass_posterior(mdp: TabularMdp, scale: float = 1e9) -> DirichletPosterior:
    """Belief concentrated on one model: concentrations = scale * P + eps.

    Sampled models are within O(1/sqrt(scale)) of mdp's rows; useful for
    exercising the training loops against a known fixed model.
    """
    eps = 1e-12  # strictly positive even where P has zeros
    return DirichletPosterior(
        concentrations=scale * mdp.transitions + eps,
        rewards=mdp.rewards,
        discount=mdp.discount,
        initial_dist=mdp.initial_dist,
    )
