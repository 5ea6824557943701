"""Policy-gradient metacognitive learner.

The policy is a softmax over the available computations with logits
theta . f(b, c) / tau. After each trial the weight vector moves along the
per-step reward-weighted score function,

    g = sum_t  gamma^(t-1) * r_t * grad log pi(c_t | b_t),

passed through Adam and applied in the ascent direction. ``return_to_go``
switches the reward term r_t to the discounted return from step t onward,
the textbook estimator.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..beliefs import Computation
from ..features import N_FEATURES

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def zeros(cls, n: int) -> "AdamState":
        return cls(np.zeros(n), np.zeros(n), 0)

    def copy(self) -> "AdamState":
        return AdamState(self.m.copy(), self.v.copy(), self.t)


@dataclass
class ReinforceState:
    """Policy weights plus the three free parameters and optimizer moments."""

    theta: np.ndarray
    alpha: float
    gamma: float
    tau: float
    adam: AdamState
    return_to_go: bool = False

    def copy(self) -> "ReinforceState":
        return ReinforceState(
            self.theta.copy(), self.alpha, self.gamma, self.tau,
            self.adam.copy(), self.return_to_go,
        )

    def to_json(self) -> dict:
        return {
            "theta": self.theta.tolist(),
            "alpha": self.alpha,
            "gamma": self.gamma,
            "tau": self.tau,
            "adam": {"m": self.adam.m.tolist(), "v": self.adam.v.tolist(), "t": self.adam.t},
            "return_to_go": self.return_to_go,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ReinforceState":
        adam = AdamState(
            np.asarray(obj["adam"]["m"], dtype=float),
            np.asarray(obj["adam"]["v"], dtype=float),
            int(obj["adam"]["t"]),
        )
        return cls(
            np.asarray(obj["theta"], dtype=float),
            float(obj["alpha"]), float(obj["gamma"]), float(obj["tau"]),
            adam, bool(obj.get("return_to_go", False)),
        )


def make_reinforce_state(
    alpha: float,
    gamma: float,
    tau: float,
    theta0: np.ndarray | None = None,
    n_features: int = N_FEATURES,
    return_to_go: bool = False,
) -> ReinforceState:
    if alpha <= 0:
        raise ValueError("alpha must be > 0")
    if not 0 <= gamma <= 1:
        raise ValueError("gamma must be in [0, 1]")
    if tau <= 0:
        raise ValueError("tau must be > 0")
    theta = np.zeros(n_features) if theta0 is None else np.asarray(theta0, dtype=float).copy()
    if theta.shape != (n_features,):
        raise ValueError(f"theta0 must have shape ({n_features},)")
    return ReinforceState(theta, alpha, gamma, tau, AdamState.zeros(n_features), return_to_go)


@dataclass(frozen=True)
class TrajectoryStep:
    """One meta-decision: the feature rows offered, the index chosen, and
    the reward collected (cost, terminal value, plus pseudo-reward when on)."""

    features: np.ndarray  # (n_computations, n_features)
    chosen_index: int
    reward: float
    computation: Computation


Trajectory = Sequence[TrajectoryStep]


def policy_distribution(state: ReinforceState, features: np.ndarray) -> np.ndarray:
    """Softmax over computations; computed with max-subtraction."""
    features = np.atleast_2d(features)
    with np.errstate(invalid="ignore"):
        logits = features @ state.theta / state.tau
    if not np.all(np.isfinite(logits)):
        raise ValueError("non-finite policy logits")
    logits = logits - logits.max()
    weights = np.exp(logits)
    return weights / weights.sum()


def grad_log_policy(
    state: ReinforceState, features: np.ndarray, chosen_index: int
) -> np.ndarray:
    """(1/tau) * (f(chosen) - E_policy[f])."""
    probs = policy_distribution(state, features)
    return (features[chosen_index] - probs @ features) / state.tau


def episode_update(state: ReinforceState, trajectory: Trajectory) -> ReinforceState:
    """One Adam ascent step on the episode's policy-gradient estimate.

    Deterministic given (state, trajectory); returns a new state.
    """
    if len(trajectory) == 0:
        raise ValueError("empty trajectory")
    if state.return_to_go:
        weights = np.zeros(len(trajectory))
        running = 0.0
        for t in range(len(trajectory) - 1, -1, -1):
            running = trajectory[t].reward + state.gamma * running
            weights[t] = running
    else:
        weights = np.array([step.reward for step in trajectory])

    grad = np.zeros_like(state.theta)
    discount = 1.0
    for step, w in zip(trajectory, weights):
        if w != 0.0:
            grad += discount * w * grad_log_policy(state, step.features, step.chosen_index)
        discount *= state.gamma

    adam = state.adam.copy()
    adam.t += 1
    adam.m = ADAM_BETA1 * adam.m + (1 - ADAM_BETA1) * grad
    adam.v = ADAM_BETA2 * adam.v + (1 - ADAM_BETA2) * grad**2
    m_hat = adam.m / (1 - ADAM_BETA1**adam.t)
    v_hat = adam.v / (1 - ADAM_BETA2**adam.t)
    theta = state.theta + state.alpha * m_hat / (np.sqrt(v_hat) + ADAM_EPS)
    return ReinforceState(theta, state.alpha, state.gamma, state.tau, adam, state.return_to_go)
