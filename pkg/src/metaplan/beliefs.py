"""Belief states over concealed node values and the meta-level decision
problem built on them.

A belief assigns each non-root node either its observed value or the
generative prior (uniform over the condition's reward set, independent
across nodes). Meta-level actions are computations: clicking an unobserved
node, or terminating planning. Rewards are the click cost for clicks and
the best expected path value for termination. A pseudo-reward measures how
much a click improved the best path, both terms evaluated under the
post-click belief.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .env import AlreadyRevealedError, Condition, TaskError, TreeTopology, TrialState

PATH_TIE_TOL = 1e-9


class InconsistentObservationError(TaskError):
    """Raised when an observed value lies outside the reward support."""


class InvalidTransitionError(TaskError):
    """Raised when two beliefs are not related by a single observation."""


@dataclass(frozen=True)
class Computation:
    """A meta-level action: ``Computation(node)`` clicks that node,
    ``Computation(None)`` (the module constant TERMINATE) stops planning."""

    node: int | None = None

    @property
    def is_terminate(self) -> bool:
        return self.node is None

    def __repr__(self) -> str:
        return "Terminate" if self.node is None else f"Click({self.node})"


TERMINATE = Computation(None)


@dataclass(frozen=True)
class BeliefState:
    """Per-node belief: observed value, or the uniform generative prior.

    ``observed`` preserves click order (dict insertion order), which is
    what "the last observed node" features read.
    """

    topology: TreeTopology
    condition: Condition
    observed: Mapping[int, int]

    def is_observed(self, node: int) -> bool:
        return node in self.observed

    def node_mean(self, node: int) -> float:
        if node in self.observed:
            return float(self.observed[node])
        return self.condition.prior_mean

    def node_std(self, node: int) -> float:
        return 0.0 if node in self.observed else self.condition.prior_std

    def last_observed(self) -> int | None:
        if not self.observed:
            return None
        return next(reversed(self.observed))

    def unobserved(self) -> tuple[int, ...]:
        return tuple(n for n in self.topology.non_root if n not in self.observed)

    def to_json(self) -> dict:
        return {
            str(n): (self.observed[n] if n in self.observed else "unobserved")
            for n in self.topology.non_root
        }


def fresh_belief(topology: TreeTopology, condition: Condition) -> BeliefState:
    return BeliefState(topology, condition, {})


def belief_from_trial_state(state: TrialState) -> BeliefState:
    obs = {n: state.revealed[n] for n in state.clicks_made}
    return BeliefState(state.trial.topology, state.trial.condition, obs)


def available_computations(belief: BeliefState) -> tuple[Computation, ...]:
    """All clicks on unobserved nodes plus terminate, terminate last."""
    return tuple(Computation(n) for n in belief.unobserved()) + (TERMINATE,)


def transition(
    belief: BeliefState, computation: Computation, observed_value: int
) -> BeliefState:
    """Observe one node; all other entries are unchanged."""
    if computation.is_terminate:
        raise InvalidTransitionError("terminate does not produce a new belief")
    node = computation.node
    if node in belief.observed:
        raise AlreadyRevealedError(f"node {node} already observed")
    if node not in belief.topology.parent:
        raise InvalidTransitionError(f"unknown node {node}")
    if int(observed_value) not in belief.condition.reward_set:
        raise InconsistentObservationError(
            f"value {observed_value} outside reward set {belief.condition.reward_set}"
        )
    return BeliefState(
        belief.topology,
        belief.condition,
        {**belief.observed, node: int(observed_value)},
    )


def expected_path_value(belief: BeliefState, path: Sequence[int]) -> float:
    """Expected sum of values along a path under the belief."""
    return sum(belief.node_mean(n) for n in path)


def path_values(belief: BeliefState) -> np.ndarray:
    return np.array([expected_path_value(belief, p) for p in belief.topology.paths])


def best_paths(belief: BeliefState) -> tuple[tuple[int, ...], ...]:
    """Paths whose expected value attains the maximum (within tolerance)."""
    values = path_values(belief)
    best = values.max()
    return tuple(
        p for p, v in zip(belief.topology.paths, values) if v >= best - PATH_TIE_TOL
    )


def behavior_policy(
    belief: BeliefState, rng: np.random.Generator | int | None = None
) -> tuple[int, ...]:
    """The path maximizing expected value; ties broken uniformly at random."""
    candidates = best_paths(belief)
    if len(candidates) == 1:
        return candidates[0]
    rng = np.random.default_rng(rng)
    return candidates[int(rng.integers(len(candidates)))]


def meta_reward(belief: BeliefState, computation: Computation) -> float:
    """Click -> the click cost; terminate -> best expected path value."""
    if computation.is_terminate:
        return float(path_values(belief).max())
    if computation.node in belief.observed:
        raise AlreadyRevealedError(f"node {computation.node} already observed")
    return float(belief.condition.click_cost)


def pseudo_reward(
    belief_before: BeliefState, computation: Computation, belief_after: BeliefState
) -> float:
    """Improvement of the best path caused by one observation.

    Both terms are evaluated under the post-click belief: the new best
    path value minus the value of the pre-click choice. When the pre-click
    argmax is tied, the comparison takes the tied path that fares worst
    under the new belief, which makes the pseudo-reward a deterministic
    function and keeps it >= 0. Terminating yields no new belief, so its
    pseudo-reward is 0.
    """
    if computation.is_terminate:
        return 0.0
    node = computation.node
    extra = {n: v for n, v in belief_after.observed.items() if n not in belief_before.observed}
    removed = [n for n in belief_before.observed if n not in belief_after.observed]
    if removed or set(extra) != {node}:
        raise InvalidTransitionError(
            "beliefs are not related by a single observation of the clicked node"
        )
    new_best = float(path_values(belief_after).max())
    old_choice = min(
        expected_path_value(belief_after, p) for p in best_paths(belief_before)
    )
    return new_best - float(old_choice)
