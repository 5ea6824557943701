"""The 52-dimensional strategy representation over (belief, computation).

Each computation (a click on an unobserved node, or terminate) is described
by 52 features: a click-vs-stop constant, uncertainty measures, greedy value
heuristics, pruning and satisficing signals, stopping indicators, relational
observation counts, structural coordinates, and a constant bias slot.

Feature semantics for termination: features defined per-click are 0 at
terminate, the satisficing features (22-28) switch to -1 when the best
expected path value clears their threshold, and the bias slot stays 1.

All thresholds scale with the condition: pruning thresholds are fractions of
the worst single-node value, satisficing thresholds fractions of the best
achievable path sum. Both are overridable through ``FeatureConfig``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from .beliefs import BeliefState, Computation
from .env import Condition, TreeTopology, best_possible_path_value

N_FEATURES = 52

FAMILY_EFFORT = "mental_effort_avoidance"
FAMILY_METAREASONING = "model_based_metareasoning"
FAMILY_PAVLOVIAN = "pavlovian"
FAMILY_PRUNING = "pruning"
FAMILY_SATISFICING = "satisficing_stopping"
FAMILY_RELATIONAL = "model_free_relational"
FAMILY_STRUCTURAL = "structural"
FAMILY_BIAS = "bias"


@dataclass(frozen=True)
class FeatureConfig:
    """Threshold schedules and the bias slot.

    ``pruning_fractions`` multiply the absolute worst single-node value;
    ``satisficing_fractions`` multiply the best achievable path sum.
    Explicit threshold tuples override the derived ones.
    """

    pruning_fractions: tuple[float, ...] = (-0.25, -0.5, -0.75, -1.0)
    satisficing_fractions: tuple[float, ...] = (
        0.0, 1 / 6, 2 / 6, 3 / 6, 4 / 6, 5 / 6, 1.0,
    )
    pruning_thresholds: tuple[float, ...] | None = None
    satisficing_thresholds: tuple[float, ...] | None = None
    bias_value: float = 1.0

    def resolve_pruning(self, condition: Condition) -> tuple[float, ...]:
        if self.pruning_thresholds is not None:
            thresholds = self.pruning_thresholds
        else:
            thresholds = tuple(
                f * abs(condition.min_reward) for f in self.pruning_fractions
            )
        if len(thresholds) != 4:
            raise ValueError("exactly 4 pruning thresholds required")
        return thresholds

    def resolve_satisficing(
        self, topology: TreeTopology, condition: Condition
    ) -> tuple[float, ...]:
        if self.satisficing_thresholds is not None:
            thresholds = self.satisficing_thresholds
        else:
            best = best_possible_path_value(topology, condition)
            thresholds = tuple(f * best for f in self.satisficing_fractions)
        if len(thresholds) != 7:
            raise ValueError("exactly 7 satisficing thresholds required")
        return thresholds


DEFAULT_FEATURE_CONFIG = FeatureConfig()


class CrossTrialHistory:
    """Per-node and per-depth record of click-revealed values across the
    completed trials of one session. Append-only; empty at session start."""

    def __init__(self, topology: TreeTopology):
        self.topology = topology
        self._by_node: dict[int, list[int]] = {n: [] for n in topology.non_root}
        self._by_depth: dict[int, list[int]] = {}
        self.n_trials = 0

    def record_trial(self, observed: Mapping[int, int]) -> None:
        for n, v in observed.items():
            self._by_node[n].append(int(v))
            self._by_depth.setdefault(self.topology.depth[n], []).append(int(v))
        self.n_trials += 1

    def node_std(self, node: int, default: float) -> float:
        values = self._by_node[node]
        if len(values) >= 2:
            return float(np.std(values, ddof=1))
        return default


class FeatureSpec(NamedTuple):
    index: int
    name: str
    family: str
    termination_semantics: str


_CATALOG: tuple[FeatureSpec, ...] = (
    FeatureSpec(1, "Termination Constant", FAMILY_EFFORT, "zero"),
    FeatureSpec(2, "Uncertainty", FAMILY_METAREASONING, "zero"),
    FeatureSpec(3, "Max Uncertainty", FAMILY_METAREASONING, "zero"),
    FeatureSpec(4, "Successor Uncertainty", FAMILY_METAREASONING, "zero"),
    FeatureSpec(5, "Trial Level Standard Deviation", FAMILY_METAREASONING, "zero"),
    FeatureSpec(6, "Current Trial Level Standard Deviation", FAMILY_METAREASONING, "zero"),
    FeatureSpec(7, "On Second-Most-Promising Path", FAMILY_METAREASONING, "zero"),
    FeatureSpec(8, "Best Expected Value", FAMILY_PAVLOVIAN, "zero"),
    FeatureSpec(9, "Best Largest Value", FAMILY_PAVLOVIAN, "zero"),
    FeatureSpec(10, "On Most-Promising Path", FAMILY_PAVLOVIAN, "zero"),
    FeatureSpec(11, "Max Expected Return", FAMILY_PAVLOVIAN, "zero"),
    FeatureSpec(12, "Successor Has Max Value", FAMILY_PAVLOVIAN, "zero"),
    FeatureSpec(13, "Max Successor Value", FAMILY_PAVLOVIAN, "zero"),
    FeatureSpec(14, "Max Immediate Successor Value", FAMILY_PAVLOVIAN, "zero"),
    FeatureSpec(15, "Parent Value", FAMILY_PAVLOVIAN, "zero"),
    FeatureSpec(16, "Pruning Threshold 1", FAMILY_PRUNING, "zero"),
    FeatureSpec(17, "Pruning Threshold 2", FAMILY_PRUNING, "zero"),
    FeatureSpec(18, "Pruning Threshold 3", FAMILY_PRUNING, "zero"),
    FeatureSpec(19, "Pruning Threshold 4", FAMILY_PRUNING, "zero"),
    FeatureSpec(20, "Soft Pruning", FAMILY_PRUNING, "zero"),
    FeatureSpec(21, "Negative Child Just Observed", FAMILY_PRUNING, "zero"),
    FeatureSpec(22, "Satisficing Threshold 1", FAMILY_SATISFICING, "neg_one_above_threshold"),
    FeatureSpec(23, "Satisficing Threshold 2", FAMILY_SATISFICING, "neg_one_above_threshold"),
    FeatureSpec(24, "Satisficing Threshold 3", FAMILY_SATISFICING, "neg_one_above_threshold"),
    FeatureSpec(25, "Satisficing Threshold 4", FAMILY_SATISFICING, "neg_one_above_threshold"),
    FeatureSpec(26, "Satisficing Threshold 5", FAMILY_SATISFICING, "neg_one_above_threshold"),
    FeatureSpec(27, "Satisficing Threshold 6", FAMILY_SATISFICING, "neg_one_above_threshold"),
    FeatureSpec(28, "Satisficing Threshold 7", FAMILY_SATISFICING, "neg_one_above_threshold"),
    FeatureSpec(29, "Soft Satisficing", FAMILY_SATISFICING, "zero"),
    FeatureSpec(30, "All Max-Value Paths Observed", FAMILY_SATISFICING, "zero"),
    FeatureSpec(31, "Max-Value Path Observed", FAMILY_SATISFICING, "zero"),
    FeatureSpec(32, "Positive Node Observed", FAMILY_SATISFICING, "zero"),
    FeatureSpec(33, "Last Observation Maximal", FAMILY_SATISFICING, "zero"),
    FeatureSpec(34, "Complete Path Observed", FAMILY_SATISFICING, "zero"),
    FeatureSpec(35, "All Final Outcomes Observed", FAMILY_SATISFICING, "zero"),
    FeatureSpec(36, "All Immediate Outcomes Observed", FAMILY_SATISFICING, "zero"),
    FeatureSpec(37, "Final Outcomes Of Positive Immediates Observed", FAMILY_SATISFICING, "zero"),
    FeatureSpec(38, "Ancestor Count", FAMILY_RELATIONAL, "zero"),
    FeatureSpec(39, "Depth Count", FAMILY_RELATIONAL, "zero"),
    FeatureSpec(40, "Final Outcome With Positive Ancestor", FAMILY_RELATIONAL, "zero"),
    FeatureSpec(41, "Immediate Successor Count", FAMILY_RELATIONAL, "zero"),
    FeatureSpec(42, "Parent Observed", FAMILY_RELATIONAL, "zero"),
    FeatureSpec(43, "Successor Count", FAMILY_RELATIONAL, "zero"),
    FeatureSpec(44, "Squared Successor Count", FAMILY_RELATIONAL, "zero"),
    FeatureSpec(45, "Siblings Count", FAMILY_RELATIONAL, "zero"),
    FeatureSpec(46, "Min Observed On Branch", FAMILY_RELATIONAL, "zero"),
    FeatureSpec(47, "Last Observation Is Successor", FAMILY_RELATIONAL, "zero"),
    FeatureSpec(48, "Depth", FAMILY_STRUCTURAL, "zero"),
    FeatureSpec(49, "Immediate Outcome", FAMILY_STRUCTURAL, "zero"),
    FeatureSpec(50, "Final Outcome", FAMILY_STRUCTURAL, "zero"),
    FeatureSpec(51, "Observed Height", FAMILY_STRUCTURAL, "zero"),
    FeatureSpec(52, "Bias", FAMILY_BIAS, "bias"),
)


def feature_catalog() -> tuple[FeatureSpec, ...]:
    """All 52 feature definitions: (index, name, family, termination)."""
    return _CATALOG


def catalog_to_json() -> list[dict]:
    return [spec._asdict() for spec in _CATALOG]


def catalog_to_csv_rows() -> list[tuple]:
    return [tuple(spec) for spec in _CATALOG]


class _TopologyArrays:
    """Static per-topology index structures shared by all feature contexts."""

    def __init__(self, top: TreeTopology):
        non_root = top.non_root
        n = len(non_root)
        index = {node: i for i, node in enumerate(non_root)}
        self.n = n
        self.index = index
        self.depth = np.array([top.depth[node] for node in non_root])
        self.is_leaf = np.array([node in top.leaves for node in non_root])
        self.is_immediate = self.depth == 1
        # parent position, -1 when the parent is the root
        self.parent_pos = np.array(
            [index.get(top.parent[node], -1) for node in non_root]
        )
        p = len(top.paths)
        member = np.zeros((p, n), dtype=bool)
        for i, path in enumerate(top.paths):
            for node in path:
                member[i, index[node]] = True
        self.member = member
        self.member_f = member.astype(float)
        self.path_len = member.sum(axis=1)

        def relation(groups: Mapping[int, tuple[int, ...]]) -> np.ndarray:
            mat = np.zeros((n, n), dtype=bool)
            for node, others in groups.items():
                for o in others:
                    mat[index[node], index[o]] = True
            return mat

        self.desc = relation({node: top.descendants[node] for node in non_root})
        self.anc = relation({node: top.ancestors[node] for node in non_root})
        self.sib = relation({node: top.siblings[node] for node in non_root})
        self.child = relation({node: top.children[node] for node in non_root})
        self.n_by_depth = {
            d: np.flatnonzero(self.depth == d) for d in sorted(set(self.depth))
        }
        # children positions per node, deepest-first order for the
        # observed-height recursion
        self.children_pos = [
            [index[c] for c in top.children[node]] for node in non_root
        ]
        self.deepest_first = np.argsort(-self.depth, kind="stable")


@lru_cache(maxsize=32)
def _topology_arrays(top: TreeTopology) -> _TopologyArrays:
    return _TopologyArrays(top)


class FeatureContext:
    """All belief-level quantities needed to emit feature rows.

    Builds a (n_nodes, 52) matrix of click features for every non-root node
    plus the termination row; ``matrix`` then selects rows per computation.
    """

    def __init__(
        self,
        belief: BeliefState,
        history: CrossTrialHistory | None = None,
        config: FeatureConfig | None = None,
    ):
        config = config or DEFAULT_FEATURE_CONFIG
        self.belief = belief
        top = belief.topology
        cond = belief.condition
        ta = _topology_arrays(top)
        self._ta = ta
        n = ta.n

        prior_mean = cond.prior_mean
        prior_std = cond.prior_std
        max_reward = cond.max_reward

        obs = np.zeros(n, dtype=bool)
        values = np.zeros(n)
        for node, v in belief.observed.items():
            pos = ta.index[node]
            obs[pos] = True
            values[pos] = v
        means = np.where(obs, values, prior_mean)
        stds = np.where(obs, 0.0, prior_std)

        path_ev = ta.member_f @ means
        path_std = np.sqrt(ta.member_f @ (stds**2))
        path_obs = ta.member_f @ obs.astype(float)

        best_ev = path_ev.max()
        tol = 1e-9
        best_mask = path_ev >= best_ev - tol
        below = path_ev[~best_mask]
        second_ev = below.max() if below.size else None
        second_mask = (
            (path_ev >= second_ev - tol) & ~best_mask
            if second_ev is not None
            else np.zeros_like(best_mask)
        )
        self.best_ev = float(best_ev)

        on_best = ta.member[best_mask].any(axis=0)
        on_second = ta.member[second_mask].any(axis=0) & ~on_best

        neg_inf = np.full((len(path_ev), n), -np.inf)
        pos_inf = np.full((len(path_ev), n), np.inf)
        ev_col = path_ev[:, None]
        max_ev_through = np.where(ta.member, ev_col, neg_inf).max(axis=0)
        min_ev_through = np.where(ta.member, ev_col, pos_inf).min(axis=0)
        max_std_through = np.where(ta.member, path_std[:, None], neg_inf).max(axis=0)
        min_obs_through = np.where(ta.member, path_obs[:, None], pos_inf).min(axis=0)

        obs_values = np.where(obs, values, -np.inf)
        path_max_obs = np.where(ta.member, obs_values[None, :], -np.inf).max(axis=1)
        max_obs_through = np.where(ta.member, path_max_obs[:, None], -np.inf).max(axis=0)
        max_obs_through = np.where(np.isfinite(max_obs_through), max_obs_through, 0.0)

        obs_f = obs.astype(float)
        desc_obs_count = ta.desc @ obs_f
        child_obs_count = ta.child @ obs_f
        anc_obs_count = ta.anc @ obs_f
        sib_obs_count = ta.sib @ obs_f
        desc_stds = ta.desc @ stds

        def masked_max(rel: np.ndarray) -> np.ndarray:
            vals = np.where(rel & obs[None, :], values[None, :], -np.inf)
            out = vals.max(axis=1)
            return np.where(np.isfinite(out), out, 0.0)

        max_desc_value = masked_max(ta.desc)
        max_child_value = masked_max(ta.child)
        desc_has_max = (ta.desc & obs[None, :] & (values == max_reward)[None, :]).any(axis=1)
        anc_positive = (ta.anc & obs[None, :] & (values > 0)[None, :]).any(axis=1)
        parent_value = np.where(
            ta.parent_pos >= 0,
            np.where(obs[ta.parent_pos], values[ta.parent_pos], 0.0),
            0.0,
        )
        parent_obs = np.where(ta.parent_pos >= 0, obs[ta.parent_pos], False)

        # longest consecutively observed chain descending from each node
        chain = np.zeros(n)
        for pos in ta.deepest_first:
            kids = ta.children_pos[pos]
            if kids:
                chain[pos] = max(
                    (1.0 + chain[k]) if obs[k] else 0.0 for k in kids
                )

        depth_std = {}
        for d, positions in ta.n_by_depth.items():
            vals = values[positions][obs[positions]]
            depth_std[d] = float(np.std(vals, ddof=1)) if vals.size >= 2 else prior_std
        depth_std_arr = np.array([depth_std[d] for d in ta.depth])
        depth_obs_count = np.array(
            [obs[ta.n_by_depth[d]].sum() for d in ta.depth], dtype=float
        )

        if history is not None:
            trial_level_std = np.array(
                [history.node_std(node, prior_std) for node in top.non_root]
            )
        else:
            trial_level_std = np.full(n, prior_std)

        last = belief.last_observed()
        last_pos = ta.index[last] if last is not None else None
        last_value = values[last_pos] if last_pos is not None else None
        last_is_child = np.zeros(n, dtype=bool)
        last_is_desc = np.zeros(n, dtype=bool)
        if last_pos is not None:
            last_is_child = ta.child[:, last_pos]
            last_is_desc = ta.desc[:, last_pos]

        pruning = config.resolve_pruning(cond)
        satisficing = config.resolve_satisficing(top, cond)
        self.satisficing = satisficing
        self.bias = config.bias_value

        # stopping indicators shared by every click row; a leaf pins down
        # exactly one path, so "all paths to max-valued observed leaves are
        # observed" reduces to a per-leaf completeness check
        leaf_obs = ta.is_leaf & obs
        all_max_paths_observed = False
        if leaf_obs.any():
            max_leaf = values[leaf_obs].max()
            target = leaf_obs & (values == max_leaf)
            all_max_paths_observed = True
            for pos in np.flatnonzero(target):
                for i in np.flatnonzero(ta.member[:, pos]):
                    if path_obs[i] != ta.path_len[i]:
                        all_max_paths_observed = False

        n_anc = ta.anc.sum(axis=1)
        max_path_observed = bool(
            (obs & (values == max_reward) & (anc_obs_count == n_anc)).any()
        )
        positive_observed = bool((obs & (values > 0)).any())
        last_maximal = bool(last_value == max_reward) if last_pos is not None else False
        complete_path = bool((path_obs == ta.path_len).any())
        all_leaves_observed = bool(obs[ta.is_leaf].all())
        all_immediates_observed = bool(obs[ta.is_immediate].all())
        pos_imm = ta.is_immediate & obs & (values > 0)
        if pos_imm.any():
            leaves_under = (ta.desc[pos_imm].any(axis=0)) & ta.is_leaf
            positive_finals_observed = bool(obs[leaves_under].all())
        else:
            positive_finals_observed = False

        cols = np.zeros((n, N_FEATURES))
        cols[:, 0] = 1.0
        cols[:, 1] = stds
        cols[:, 2] = max_std_through
        cols[:, 3] = desc_stds
        cols[:, 4] = trial_level_std
        cols[:, 5] = depth_std_arr
        cols[:, 6] = on_second.astype(float)
        cols[:, 7] = max_ev_through
        cols[:, 8] = max_obs_through
        cols[:, 9] = on_best.astype(float)
        cols[:, 10] = best_ev
        cols[:, 11] = desc_has_max.astype(float)
        cols[:, 12] = max_desc_value
        cols[:, 13] = max_child_value
        cols[:, 14] = parent_value
        for j, thr in enumerate(pruning):
            cols[:, 15 + j] = np.where(min_ev_through < thr, -1.0, 0.0)
        cols[:, 19] = min_ev_through
        if last_pos is not None and last_value < 0:
            cols[:, 20] = last_is_child.astype(float)
        # satisficing features 22-28 live on the termination row only
        cols[:, 28] = max_ev_through
        cols[:, 29] = -1.0 if all_max_paths_observed else 0.0
        cols[:, 30] = -1.0 if max_path_observed else 0.0
        cols[:, 31] = -1.0 if positive_observed else 0.0
        cols[:, 32] = -1.0 if last_maximal else 0.0
        cols[:, 33] = -1.0 if complete_path else 0.0
        cols[:, 34] = -1.0 if all_leaves_observed else 0.0
        cols[:, 35] = -1.0 if all_immediates_observed else 0.0
        cols[:, 36] = -1.0 if positive_finals_observed else 0.0
        cols[:, 37] = anc_obs_count
        cols[:, 38] = depth_obs_count
        cols[:, 39] = (ta.is_leaf & anc_positive).astype(float)
        cols[:, 40] = child_obs_count
        cols[:, 41] = parent_obs.astype(float)
        cols[:, 42] = desc_obs_count
        cols[:, 43] = desc_obs_count**2
        cols[:, 44] = sib_obs_count
        cols[:, 45] = min_obs_through
        cols[:, 46] = last_is_desc.astype(float)
        cols[:, 47] = ta.depth
        cols[:, 48] = ta.is_immediate.astype(float)
        cols[:, 49] = ta.is_leaf.astype(float)
        cols[:, 50] = chain
        cols[:, 51] = self.bias
        self._click_rows = cols

    def click_row(self, node: int) -> np.ndarray:
        return self._click_rows[self._ta.index[node]]

    def termination_row(self) -> np.ndarray:
        row = np.zeros(N_FEATURES)
        for j, thr in enumerate(self.satisficing):
            row[21 + j] = -1.0 if self.best_ev > thr else 0.0
        row[51] = self.bias
        return row

    def matrix(self, computations: Sequence[Computation]) -> np.ndarray:
        rows = np.empty((len(computations), N_FEATURES))
        for i, comp in enumerate(computations):
            rows[i] = (
                self.termination_row() if comp.is_terminate else self.click_row(comp.node)
            )
        return rows


def compute_features(
    belief: BeliefState,
    computation: Computation,
    history: CrossTrialHistory | None = None,
    config: FeatureConfig | None = None,
) -> np.ndarray:
    """Feature vector for one computation in one belief state."""
    ctx = FeatureContext(belief, history, config)
    if computation.is_terminate:
        return ctx.termination_row()
    return ctx.click_row(computation.node).copy()


def compute_feature_matrix(
    belief: BeliefState,
    computations: Sequence[Computation],
    history: CrossTrialHistory | None = None,
    config: FeatureConfig | None = None,
) -> np.ndarray:
    """Stacked feature rows, one per computation, in the given order."""
    return FeatureContext(belief, history, config).matrix(computations)
