"""Click-to-reveal planning environment: a tree maze with concealed rewards.

A trial runs in two phases. During planning, each click reveals one node's
value at a fixed cost. Once planning stops, the agent commits to a single
root-to-leaf path and scores the sum of the values along it plus the
accumulated click costs. Node values and scores are integers throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable, Mapping, Sequence

import numpy as np

DEFAULT_BRANCHING = (3, 1, 2)
DEFAULT_TRIALS_PER_SESSION = 35

HIGH_VARIANCE_REWARDS = (-1000, -100, -50, 50, 100)
LOW_VARIANCE_REWARDS = (-6, -4, -2, 2, 4, 6)
HIGH_CLICK_COST = -5
LOW_CLICK_COST = -1

CONDITION_LABELS = ("HVHC", "HVLC", "LVHC", "LVLC")


class TaskError(Exception):
    """Base class for task rule violations."""


class TopologyError(TaskError):
    """Raised when an edge map does not describe a directed tree."""


class InvalidNodeError(TaskError):
    """Raised when an operation targets the root or an unknown node."""


class AlreadyRevealedError(TaskError):
    """Raised when a node is clicked twice."""


class TrialTerminatedError(TaskError):
    """Raised when acting on a trial whose planning phase has ended."""


class PlanningActiveError(TaskError):
    """Raised when moving before planning has been terminated."""


class InvalidPathError(TaskError):
    """Raised when a committed path is not a root-to-leaf sequence."""


class TreeTopology:
    """Directed tree of integer node ids.

    The root is the start position; it carries no value and cannot be
    clicked. Paths are root-to-leaf node sequences excluding the root, so
    on the default layout every path has length 3.

    Derived structure (parents, depths, descendant sets, path membership)
    is precomputed once; instances are immutable.
    """

    def __init__(self, edges: Mapping[int, Iterable[int]], root: int = 0):
        children: dict[int, tuple[int, ...]] = {
            int(p): tuple(int(c) for c in cs) for p, cs in edges.items()
        }
        nodes = set(children)
        for cs in children.values():
            nodes.update(cs)
        if root not in nodes:
            raise TopologyError(f"root {root} does not appear in the edge map")
        for n in nodes:
            children.setdefault(n, ())

        parent: dict[int, int] = {}
        for p, cs in children.items():
            for c in cs:
                if c in parent:
                    raise TopologyError(f"node {c} has more than one parent")
                if c == root:
                    raise TopologyError("root cannot be a child")
                parent[c] = p

        # BFS from the root establishes depths and catches disconnected nodes.
        depth: dict[int, int] = {root: 0}
        frontier = [root]
        while frontier:
            nxt: list[int] = []
            for p in frontier:
                for c in children[p]:
                    if c in depth:
                        raise TopologyError(f"cycle through node {c}")
                    depth[c] = depth[p] + 1
                    nxt.append(c)
            frontier = nxt
        if set(depth) != nodes:
            missing = sorted(nodes - set(depth))
            raise TopologyError(f"nodes unreachable from root: {missing}")
        if len(nodes) < 2:
            raise TopologyError("tree needs at least one non-root node")

        self.root = root
        self.children = children
        self.parent = parent
        self.depth = depth
        self.nodes: tuple[int, ...] = tuple(sorted(nodes))
        self.non_root: tuple[int, ...] = tuple(n for n in self.nodes if n != root)
        self.leaves: tuple[int, ...] = tuple(
            n for n in self.nodes if not children[n] and n != root
        )

        paths: list[tuple[int, ...]] = []

        def walk(node: int, acc: list[int]) -> None:
            if not children[node]:
                paths.append(tuple(acc))
                return
            for c in children[node]:
                walk(c, acc + [c])

        walk(root, [])
        self.paths: tuple[tuple[int, ...], ...] = tuple(paths)

        self.ancestors: dict[int, tuple[int, ...]] = {}
        for n in self.non_root:
            anc: list[int] = []
            cur = n
            while parent[cur] != root:
                cur = parent[cur]
                anc.append(cur)
            self.ancestors[n] = tuple(anc)

        self.descendants: dict[int, tuple[int, ...]] = {}

        def collect(node: int) -> tuple[int, ...]:
            out: list[int] = []
            for c in children[node]:
                out.append(c)
                out.extend(collect(c))
            return tuple(out)

        for n in self.nodes:
            self.descendants[n] = collect(n)

        self.siblings: dict[int, tuple[int, ...]] = {
            n: tuple(s for s in children[parent[n]] if s != n) for n in self.non_root
        }
        self.paths_through: dict[int, tuple[int, ...]] = {
            n: tuple(i for i, p in enumerate(self.paths) if n in p)
            for n in self.non_root
        }

    @classmethod
    def from_branching(cls, branching: Sequence[int]) -> "TreeTopology":
        """Build the regular layout where every node at depth d has
        ``branching[d]`` children; nodes are numbered breadth-first."""
        if not branching or any(b < 1 for b in branching):
            raise TopologyError("branching factors must be positive")
        edges: dict[int, list[int]] = {}
        level = [0]
        next_id = 1
        for b in branching:
            nxt: list[int] = []
            for p in level:
                kids = list(range(next_id, next_id + b))
                next_id += b
                edges[p] = kids
                nxt.extend(kids)
            level = nxt
        return cls(edges)

    def to_json(self) -> dict:
        return {
            "root": self.root,
            "edges": {str(p): list(cs) for p, cs in sorted(self.children.items()) if cs},
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> "TreeTopology":
        edges = {int(p): [int(c) for c in cs] for p, cs in obj["edges"].items()}
        return cls(edges, root=int(obj.get("root", 0)))

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, TreeTopology)
            and self.root == other.root
            and self.children == other.children
        )

    def __hash__(self) -> int:
        return hash((self.root, tuple(sorted(self.children.items()))))

    def __repr__(self) -> str:
        return f"TreeTopology({len(self.non_root)} nodes, {len(self.paths)} paths)"


def default_topology() -> TreeTopology:
    return TreeTopology.from_branching(DEFAULT_BRANCHING)


@dataclass(frozen=True)
class Condition:
    """An experimental condition: the reward support and the click cost.

    Node values are drawn i.i.d. uniform from ``reward_set``; every click
    costs ``click_cost`` points (a non-positive integer).
    """

    label: str
    reward_set: tuple[int, ...]
    click_cost: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "reward_set", tuple(sorted(set(self.reward_set))))
        if not self.reward_set:
            raise ValueError("reward_set must be nonempty")
        if self.click_cost > 0:
            raise ValueError("click_cost must be <= 0")

    @property
    def prior_mean(self) -> float:
        return float(np.mean(self.reward_set))

    @property
    def prior_std(self) -> float:
        """Population standard deviation of the reward support."""
        return float(np.std(self.reward_set))

    @property
    def max_reward(self) -> int:
        return self.reward_set[-1]

    @property
    def min_reward(self) -> int:
        return self.reward_set[0]


def condition_presets() -> list[Condition]:
    """The four standard conditions: {high, low} reward variance x
    {high, low} click cost."""
    return [
        Condition("HVHC", HIGH_VARIANCE_REWARDS, HIGH_CLICK_COST),
        Condition("HVLC", HIGH_VARIANCE_REWARDS, LOW_CLICK_COST),
        Condition("LVHC", LOW_VARIANCE_REWARDS, HIGH_CLICK_COST),
        Condition("LVLC", LOW_VARIANCE_REWARDS, LOW_CLICK_COST),
    ]


def get_condition(label: str) -> Condition:
    for cond in condition_presets():
        if cond.label == label:
            return cond
    raise KeyError(f"unknown condition label {label!r}")


@dataclass(frozen=True)
class Trial:
    """One maze instance: a topology plus the concealed node values."""

    topology: TreeTopology
    condition: Condition
    ground_truth: Mapping[int, int]
    trial_index: int = 0

    def __post_init__(self) -> None:
        missing = [n for n in self.topology.non_root if n not in self.ground_truth]
        if missing:
            raise ValueError(f"ground_truth missing nodes {missing}")
        if self.topology.root in self.ground_truth:
            raise ValueError("root carries no value")


def sample_trial(
    topology: TreeTopology,
    condition: Condition,
    rng: np.random.Generator | int | None,
    trial_index: int = 0,
) -> Trial:
    """Draw one trial with node values i.i.d. uniform over the condition's
    reward set. Deterministic given the generator state."""
    rng = np.random.default_rng(rng)
    values = rng.choice(condition.reward_set, size=len(topology.non_root))
    ground_truth = {n: int(v) for n, v in zip(topology.non_root, values)}
    return Trial(topology, condition, ground_truth, trial_index)


def best_possible_path_value(topology: TreeTopology, condition: Condition) -> int:
    """Largest path sum attainable under the condition's reward support."""
    return max(len(p) * condition.max_reward for p in topology.paths)


@dataclass(frozen=True)
class TrialState:
    """Immutable snapshot of one trial in progress.

    During planning ``score`` is the accumulated click cost; after the
    move it is the final score (path sum plus click costs).
    """

    trial: Trial
    revealed: Mapping[int, int]
    clicks_made: tuple[int, ...]
    terminated: bool
    chosen_path: tuple[int, ...] | None
    score: int


def fresh_state(trial: Trial) -> TrialState:
    return TrialState(trial, {}, (), False, None, 0)


def click(state: TrialState, node: int) -> tuple[TrialState, int]:
    """Reveal one node. Returns the new state and the observed value."""
    if state.terminated:
        raise TrialTerminatedError("planning already terminated")
    topo = state.trial.topology
    if node == topo.root:
        raise InvalidNodeError("root cannot be clicked")
    if node not in topo.parent:
        raise InvalidNodeError(f"unknown node {node}")
    if node in state.revealed:
        raise AlreadyRevealedError(f"node {node} already revealed")
    value = int(state.trial.ground_truth[node])
    new_state = replace(
        state,
        revealed={**state.revealed, node: value},
        clicks_made=state.clicks_made + (node,),
        score=state.score + state.trial.condition.click_cost,
    )
    return new_state, value


def terminate_planning(state: TrialState) -> TrialState:
    if state.terminated:
        raise TrialTerminatedError("planning already terminated")
    return replace(state, terminated=True)


def act(state: TrialState, path: Sequence[int]) -> tuple[TrialState, int]:
    """Commit to a path and settle the trial. Returns the final state and
    score = path sum + click_cost * number of clicks."""
    if not state.terminated:
        raise PlanningActiveError("terminate planning before moving")
    if state.chosen_path is not None:
        raise TrialTerminatedError("path already committed")
    path = tuple(int(n) for n in path)
    if path not in state.trial.topology.paths:
        raise InvalidPathError(f"{path} is not a root-to-leaf path")
    final_score = state.score + sum(state.trial.ground_truth[n] for n in path)
    return replace(state, chosen_path=path, score=final_score), final_score
