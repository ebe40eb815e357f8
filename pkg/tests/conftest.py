"""Shared helpers for the test suite.

Random instances are built with routes independent of the package code:
rng.dirichlet for transition rows (the package samples via gamma draws),
explicit Python loops for oracles.
"""

import numpy as np

from softrobust.mdp import TabularMdp
from softrobust.policy import SoftmaxPolicy

# Verdicts registered by test_acceptance.py; printed through the
# terminal-summary hook so they survive pytest's output capture.
ACCEPTANCE_RESULTS: list = []


def record_acceptance(name: str, ok: bool, detail: str = ""):
    ACCEPTANCE_RESULTS.append((name, bool(ok), detail))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance")
    for name, ok, detail in ACCEPTANCE_RESULTS:
        line = f"ACCEPTANCE {name}: {'PASS' if ok else 'FAIL'}"
        if detail:
            line += f"  ({detail})"
        terminalreporter.write_line(line)


def random_mdp(rng, n_states=3, n_actions=2, discount=0.9) -> TabularMdp:
    transitions = np.empty((n_states, n_actions, n_states))
    for s in range(n_states):
        for a in range(n_actions):
            transitions[s, a] = rng.dirichlet(np.ones(n_states))
    return TabularMdp(
        n_states=n_states,
        n_actions=n_actions,
        rewards=rng.normal(size=(n_states, n_actions)),
        transitions=transitions,
        discount=discount,
        initial_dist=rng.dirichlet(np.ones(n_states)),
    )


def random_policy(rng, n_states, n_actions, scale=1.0) -> SoftmaxPolicy:
    return SoftmaxPolicy(
        rng.normal(scale=scale, size=n_states * n_actions), n_states, n_actions
    )
