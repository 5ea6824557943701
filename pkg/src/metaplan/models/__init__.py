from .reinforce import (
    AdamState,
    ReinforceState,
    Trajectory,
    TrajectoryStep,
    episode_update,
    grad_log_policy,
    make_reinforce_state,
    policy_distribution,
)
from .lvoc import (
    LvocHyperparams,
    LvocPosterior,
    LvocState,
    bootstrap_target,
    make_lvoc_state,
    posterior_update,
    q_estimate,
    thompson_select,
)
from .variants import (
    Agent,
    FAMILY_PARTITIONS,
    ModelVariant,
    SatisficingRule,
    SessionResult,
    TrialOutcome,
    VARIANT_ORDER,
    VARIANTS,
    default_sim_params,
    free_param_names,
    make_agent,
    make_model_state,
    parse_variant,
    run_session,
    run_variant_trial,
    stage1_should_stop,
)

__all__ = [
    "AdamState",
    "ReinforceState",
    "Trajectory",
    "TrajectoryStep",
    "episode_update",
    "grad_log_policy",
    "make_reinforce_state",
    "policy_distribution",
    "LvocHyperparams",
    "LvocPosterior",
    "LvocState",
    "bootstrap_target",
    "make_lvoc_state",
    "posterior_update",
    "q_estimate",
    "thompson_select",
    "Agent",
    "FAMILY_PARTITIONS",
    "ModelVariant",
    "SatisficingRule",
    "SessionResult",
    "TrialOutcome",
    "VARIANT_ORDER",
    "VARIANTS",
    "default_sim_params",
    "free_param_names",
    "make_agent",
    "make_model_state",
    "parse_variant",
    "run_session",
    "run_variant_trial",
    "stage1_should_stop",
]
