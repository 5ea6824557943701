"""The eight model variants and their trial/session runners.

Variants combine a base learner (REINFORCE or LVOC) with two optional
extensions: pseudo-rewards added to click-step rewards, and a hierarchical
stage-1 stop/continue gate. In hierarchical mode stage 2 only ever chooses
among clicks; termination is stage 1's job, triggered when the best expected
path value clears an adaptive satisficing threshold V_max * eta^k that decays
with the number of clicks k already made.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from ..beliefs import (
    BeliefState,
    Computation,
    TERMINATE,
    available_computations,
    behavior_policy,
    fresh_belief,
    meta_reward,
    pseudo_reward,
    transition,
)
from ..env import Trial, act, best_possible_path_value, click, fresh_state, terminate_planning
from ..features import CrossTrialHistory, FeatureConfig, compute_feature_matrix
from .lvoc import LvocState, make_lvoc_state, posterior_update, thompson_select
from .reinforce import (
    ReinforceState,
    TrajectoryStep,
    episode_update,
    make_reinforce_state,
    policy_distribution,
)

BASE_RF = "rf"
BASE_LVOC = "lvoc"


@dataclass(frozen=True)
class ModelVariant:
    """One of the eight combinations {rf, lvoc} x {pr} x {hr}."""

    base: str
    use_pr: bool = False
    hierarchical: bool = False

    def __post_init__(self) -> None:
        if self.base not in (BASE_RF, BASE_LVOC):
            raise ValueError(f"unknown base model {self.base!r}")

    @property
    def id(self) -> str:
        name = self.base + ("_pr" if self.use_pr else "")
        return ("hr_" + name) if self.hierarchical else name

    @property
    def n_free_params(self) -> int:
        """Scalar parameters fitted per participant (sigma excluded)."""
        base = 3 if self.base == BASE_RF else 4
        return base + (1 if self.hierarchical else 0)


VARIANTS: dict[str, ModelVariant] = {
    v.id: v
    for v in (
        ModelVariant(base, use_pr, hier)
        for base in (BASE_LVOC, BASE_RF)
        for use_pr in (False, True)
        for hier in (False, True)
    )
}


# canonical reporting order
VARIANT_ORDER = ("lvoc", "lvoc_pr", "hr_lvoc", "hr_lvoc_pr", "rf", "rf_pr", "hr_rf", "hr_rf_pr")

FAMILY_PARTITIONS: dict[str, dict[str, tuple[str, ...]]] = {
    "base": {
        "lvoc": ("lvoc", "lvoc_pr", "hr_lvoc", "hr_lvoc_pr"),
        "rf": ("rf", "rf_pr", "hr_rf", "hr_rf_pr"),
    },
    "pr": {
        "pr": ("lvoc_pr", "hr_lvoc_pr", "rf_pr", "hr_rf_pr"),
        "no_pr": ("lvoc", "hr_lvoc", "rf", "hr_rf"),
    },
    "hr": {
        "hr": ("hr_lvoc", "hr_lvoc_pr", "hr_rf", "hr_rf_pr"),
        "no_hr": ("lvoc", "lvoc_pr", "rf", "rf_pr"),
    },
}

# hand-set moderate simulation defaults (CLI and qualitative checks)
_RF_SIM_PARAMS = {"alpha": 0.01, "gamma": 0.95, "tau": 1.0}
_LVOC_SIM_PARAMS = {"explore_prob": 0.05, "prior_mean": 0.0, "prior_var": 100.0, "n_samples": 5}
_SIM_ETA = 0.8

# Softmax temperatures tuned per condition. Adam's per-coordinate steps are
# scale-free while the feature magnitudes scale with the reward range, so
# high-variance logits move ~100x faster per episode than low-variance ones;
# one temperature cannot keep both regimes inside their learnable band.
SIM_TAU_BY_CONDITION = {"HVHC": 100.0, "HVLC": 100.0, "LVHC": 1.0, "LVLC": 1.0}


def default_sim_params(
    variant: "ModelVariant | str", condition_label: str | None = None
) -> dict[str, float]:
    if isinstance(variant, str):
        variant = parse_variant(variant)
    params = dict(_RF_SIM_PARAMS if variant.base == BASE_RF else _LVOC_SIM_PARAMS)
    if variant.base == BASE_RF and condition_label in SIM_TAU_BY_CONDITION:
        params["tau"] = SIM_TAU_BY_CONDITION[condition_label]
    if variant.hierarchical:
        params["eta"] = _SIM_ETA
    return params


def parse_variant(variant_id: str) -> ModelVariant:
    try:
        return VARIANTS[variant_id]
    except KeyError:
        raise KeyError(
            f"unknown variant {variant_id!r}; expected one of {sorted(VARIANTS)}"
        ) from None


def free_param_names(variant: ModelVariant) -> tuple[str, ...]:
    if variant.base == BASE_RF:
        names: tuple[str, ...] = ("alpha", "gamma", "tau")
    else:
        names = ("explore_prob", "prior_mean", "prior_var", "n_samples")
    if variant.hierarchical:
        names = names + ("eta",)
    return names


@dataclass(frozen=True)
class SatisficingRule:
    """Stage-1 stopping: stop once the best expected path value reaches
    v_max * eta^k after k clicks. Smaller eta stops sooner."""

    eta: float

    def __post_init__(self) -> None:
        if not 0 < self.eta <= 1:
            raise ValueError("eta must be in (0, 1]")

    def threshold(self, v_max: float, clicks_made: int) -> float:
        return v_max * self.eta**clicks_made


def stage1_should_stop(
    belief: BeliefState,
    clicks_made: int,
    eta: float,
    rng: np.random.Generator | None = None,
) -> bool:
    """Deterministic stop/continue gate; ``rng`` is accepted for interface
    compatibility but unused."""
    rule = SatisficingRule(eta)
    v_max = best_possible_path_value(belief.topology, belief.condition)
    best = max(
        sum(belief.node_mean(n) for n in path) for path in belief.topology.paths
    )
    return best >= rule.threshold(v_max, clicks_made)


@dataclass
class Agent:
    """A model variant bound to its mutable learner state."""

    variant: ModelVariant
    model_state: ReinforceState | LvocState
    eta: float | None = None


def make_model_state(
    variant: ModelVariant, params: Mapping[str, float]
) -> ReinforceState | LvocState:
    if variant.base == BASE_RF:
        return make_reinforce_state(
            alpha=float(params["alpha"]),
            gamma=float(params["gamma"]),
            tau=float(params["tau"]),
        )
    prior_mean = params["prior_mean"]
    if np.isscalar(prior_mean):
        prior_mean = float(prior_mean)
    else:
        prior_mean = np.asarray(prior_mean, dtype=float)
    return make_lvoc_state(
        explore_prob=float(params["explore_prob"]),
        prior_mean=prior_mean,
        prior_var=float(params["prior_var"]),
        n_samples=int(round(params["n_samples"])),
    )


def make_agent(variant: ModelVariant, params: Mapping[str, float]) -> Agent:
    missing = [k for k in free_param_names(variant) if k not in params]
    if missing:
        raise ValueError(f"variant {variant.id} missing parameters {missing}")
    eta = float(params["eta"]) if variant.hierarchical else None
    if eta is not None and not 0 < eta <= 1:
        raise ValueError("eta must be in (0, 1]")
    return Agent(variant, make_model_state(variant, params), eta)


@dataclass
class TrialOutcome:
    clicks: tuple[int, ...]
    chosen_path: tuple[int, ...]
    score: int
    observed: dict[int, int]
    trajectory: list[TrajectoryStep] | None = None

    @property
    def n_clicks(self) -> int:
        return len(self.clicks)


def _sample_index(probs: np.ndarray, rng: np.random.Generator) -> int:
    return int(np.searchsorted(np.cumsum(probs), rng.random(), side="right").clip(0, len(probs) - 1))


def run_variant_trial(
    agent: Agent,
    trial: Trial,
    history: CrossTrialHistory | None,
    rng: np.random.Generator,
    feature_config: FeatureConfig | None = None,
) -> TrialOutcome:
    """Play one trial and apply the variant's learning update in place
    (the agent's model_state is replaced). Returns the trial outcome."""
    if agent.variant.hierarchical:
        outcome = _run_hierarchical(agent, trial, history, rng, feature_config)
    else:
        outcome = _run_flat(agent, trial, history, rng, feature_config)
    return outcome


def _run_flat(
    agent: Agent,
    trial: Trial,
    history: CrossTrialHistory | None,
    rng: np.random.Generator,
    feature_config: FeatureConfig | None,
) -> TrialOutcome:
    variant = agent.variant
    state = fresh_state(trial)
    belief = fresh_belief(trial.topology, trial.condition)
    trajectory: list[TrajectoryStep] = []

    comps = available_computations(belief)
    feats = compute_feature_matrix(belief, comps, history, feature_config)
    while True:
        if variant.base == BASE_RF:
            probs = policy_distribution(agent.model_state, feats)
            idx = _sample_index(probs, rng)
        else:
            idx = thompson_select(
                agent.model_state.posterior, agent.model_state.hyper, comps, feats, rng
            )
        comp = comps[idx]

        if comp.is_terminate:
            reward = meta_reward(belief, TERMINATE)
            if variant.base == BASE_RF:
                trajectory.append(TrajectoryStep(feats, idx, reward, comp))
            else:
                agent.model_state.posterior = posterior_update(
                    agent.model_state.posterior, feats[idx], reward
                )
            break

        state, value = click(state, comp.node)
        new_belief = transition(belief, comp, value)
        reward = float(trial.condition.click_cost)
        if variant.use_pr:
            reward += pseudo_reward(belief, comp, new_belief)

        next_comps = available_computations(new_belief)
        next_feats = compute_feature_matrix(new_belief, next_comps, history, feature_config)
        if variant.base == BASE_RF:
            trajectory.append(TrajectoryStep(feats, idx, reward, comp))
        else:
            mean = agent.model_state.posterior.mean
            greedy = int(np.argmax(next_feats @ mean))
            target = reward + float(next_feats[greedy] @ mean)
            agent.model_state.posterior = posterior_update(
                agent.model_state.posterior, feats[idx], target
            )
        belief = new_belief
        comps, feats = next_comps, next_feats

    state = terminate_planning(state)
    path = behavior_policy(belief, rng)
    state, score = act(state, path)
    if variant.base == BASE_RF:
        agent.model_state = episode_update(agent.model_state, trajectory)
    return TrialOutcome(
        clicks=state.clicks_made,
        chosen_path=path,
        score=score,
        observed=dict(belief.observed),
        trajectory=trajectory if variant.base == BASE_RF else None,
    )


def _run_hierarchical(
    agent: Agent,
    trial: Trial,
    history: CrossTrialHistory | None,
    rng: np.random.Generator,
    feature_config: FeatureConfig | None,
) -> TrialOutcome:
    variant = agent.variant
    eta = agent.eta
    if eta is None:
        raise ValueError("hierarchical variant requires eta")
    state = fresh_state(trial)
    belief = fresh_belief(trial.topology, trial.condition)
    trajectory: list[TrajectoryStep] = []
    clicks_made = 0

    while True:
        unobserved = belief.unobserved()
        if not unobserved or stage1_should_stop(belief, clicks_made, eta):
            break
        comps = tuple(Computation(n) for n in unobserved)
        feats = compute_feature_matrix(belief, comps, history, feature_config)
        if variant.base == BASE_RF:
            probs = policy_distribution(agent.model_state, feats)
            idx = _sample_index(probs, rng)
        else:
            idx = thompson_select(
                agent.model_state.posterior, agent.model_state.hyper, comps, feats, rng
            )
        comp = comps[idx]

        state, value = click(state, comp.node)
        new_belief = transition(belief, comp, value)
        reward = float(trial.condition.click_cost)
        if variant.use_pr:
            reward += pseudo_reward(belief, comp, new_belief)

        if variant.base == BASE_RF:
            trajectory.append(TrajectoryStep(feats, idx, reward, comp))
        else:
            # continuation only while stage 1 would keep planning
            remaining = new_belief.unobserved()
            target = reward
            if remaining and not stage1_should_stop(new_belief, clicks_made + 1, eta):
                next_comps = tuple(Computation(n) for n in remaining)
                next_feats = compute_feature_matrix(
                    new_belief, next_comps, history, feature_config
                )
                mean = agent.model_state.posterior.mean
                greedy = int(np.argmax(next_feats @ mean))
                target = reward + float(next_feats[greedy] @ mean)
            agent.model_state.posterior = posterior_update(
                agent.model_state.posterior, feats[idx], target
            )
        belief = new_belief
        clicks_made += 1

    state = terminate_planning(state)
    path = behavior_policy(belief, rng)
    state, score = act(state, path)
    if variant.base == BASE_RF and trajectory:
        agent.model_state = episode_update(agent.model_state, trajectory)
    return TrialOutcome(
        clicks=state.clicks_made,
        chosen_path=path,
        score=score,
        observed=dict(belief.observed),
        trajectory=trajectory if variant.base == BASE_RF else None,
    )


@dataclass
class SessionResult:
    click_counts: np.ndarray
    scores: np.ndarray
    outcomes: list[TrialOutcome]
    agent: Agent


def run_session(
    variant: ModelVariant | str,
    params: Mapping[str, float],
    trials: Sequence[Trial],
    rng: np.random.Generator | int | None,
    feature_config: FeatureConfig | None = None,
) -> SessionResult:
    """Run one simulated agent through a trial sequence, learning across
    trials and accumulating cross-trial observation history."""
    if isinstance(variant, str):
        variant = parse_variant(variant)
    rng = np.random.default_rng(rng)
    agent = make_agent(variant, params)
    history = CrossTrialHistory(trials[0].topology)
    outcomes: list[TrialOutcome] = []
    for trial in trials:
        outcome = run_variant_trial(agent, trial, history, rng, feature_config)
        history.record_trial(outcome.observed)
        outcomes.append(outcome)
    return SessionResult(
        click_counts=np.array([o.n_clicks for o in outcomes]),
        scores=np.array([o.score for o in outcomes]),
        outcomes=outcomes,
        agent=agent,
    )
