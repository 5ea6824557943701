"""Metacognitive reinforcement learning on click-to-reveal planning tasks.

The package covers the full pipeline: the planning environment and its
meta-level decision problem, eight learner variants, pseudo-likelihood
parameter fitting, BIC/Bayesian model selection, the behavioral statistics,
canonical file formats with a CLI, and an HTTP service for running live
sessions with human participants.
"""

__version__ = "0.1.0"

from . import beliefs, data_io, env, features, fitting, selection, stats
from .env import (
    Condition,
    TreeTopology,
    Trial,
    TrialState,
    condition_presets,
    default_topology,
    get_condition,
    sample_trial,
)
from .beliefs import (
    BeliefState,
    Computation,
    TERMINATE,
    available_computations,
    behavior_policy,
    expected_path_value,
    fresh_belief,
    meta_reward,
    pseudo_reward,
    transition,
)
from .features import (
    CrossTrialHistory,
    FeatureConfig,
    N_FEATURES,
    compute_feature_matrix,
    compute_features,
    feature_catalog,
)
from .models import (
    VARIANTS,
    ModelVariant,
    parse_variant,
    run_session,
    stage1_should_stop,
)
from .fitting import (
    FitResult,
    fit_participant,
    generate_synthetic_participant,
    log_pseudo_likelihood,
    simulate_click_curve,
)
from .selection import BmsResult, EvidenceMatrix, bic, count_best, family_bms, rfx_bms
from .stats import (
    classify_adaptiveness,
    kruskal_wallis,
    mann_kendall,
    wilcoxon_ranksum,
)
from .data_io import ParticipantData, TrialRecord, load_session, save_session, validate_session
