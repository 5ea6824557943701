"""Value-based metacognitive learner.

The meta-level Q-function is linear in the 52 features. Weights carry a
Gaussian posterior updated by conjugate Bayesian linear regression on
one-step bootstrap targets (reward plus posterior-mean value of the
computation the current policy would pick next). Action selection averages
n posterior draws and takes the greedy computation, exploring uniformly at
random with probability p.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..beliefs import Computation
from ..features import N_FEATURES

logger = logging.getLogger(__name__)

SPD_JITTER = 1e-10


@dataclass
class LvocHyperparams:
    """Free parameters: exploration probability, isotropic Gaussian prior
    on the weights, and the number of Thompson samples per decision."""

    explore_prob: float
    prior_mean: float | np.ndarray
    prior_var: float
    n_samples: int
    obs_noise_var: float = 1.0

    def __post_init__(self) -> None:
        if not 0 <= self.explore_prob <= 1:
            raise ValueError("explore_prob must be in [0, 1]")
        if self.prior_var <= 0:
            raise ValueError("prior_var must be > 0")
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        if self.obs_noise_var <= 0:
            raise ValueError("obs_noise_var must be > 0")


@dataclass
class LvocPosterior:
    """Gaussian posterior over the Q-weights with known observation noise."""

    mean: np.ndarray
    cov: np.ndarray
    obs_noise_var: float

    @classmethod
    def from_prior(cls, hyper: LvocHyperparams, n_features: int = N_FEATURES) -> "LvocPosterior":
        mean = np.broadcast_to(np.asarray(hyper.prior_mean, dtype=float), (n_features,)).copy()
        cov = np.eye(n_features) * hyper.prior_var
        return cls(mean, cov, hyper.obs_noise_var)

    def copy(self) -> "LvocPosterior":
        return LvocPosterior(self.mean.copy(), self.cov.copy(), self.obs_noise_var)

    def to_json(self) -> dict:
        return {
            "mean": self.mean.tolist(),
            "cov": self.cov.tolist(),
            "obs_noise_var": self.obs_noise_var,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "LvocPosterior":
        return cls(
            np.asarray(obj["mean"], dtype=float),
            np.asarray(obj["cov"], dtype=float),
            float(obj["obs_noise_var"]),
        )


def q_estimate(weights: np.ndarray, features: np.ndarray) -> float:
    """Linear Q approximation: the dot product of weights and features."""
    weights = np.asarray(weights, dtype=float)
    features = np.asarray(features, dtype=float)
    if weights.shape != features.shape:
        raise ValueError(f"dimension mismatch: {weights.shape} vs {features.shape}")
    return float(weights @ features)


def bootstrap_target(
    meta_reward: float,
    posterior_mean: np.ndarray,
    next_features: np.ndarray | None,
) -> float:
    """Reward plus the posterior-mean value of the next computation;
    terminal steps have no continuation."""
    if next_features is None:
        return float(meta_reward)
    return float(meta_reward) + q_estimate(posterior_mean, next_features)


def posterior_update(
    posterior: LvocPosterior, features: np.ndarray, target: float
) -> LvocPosterior:
    """Rank-one conjugate update; equivalent to batch regression on all
    experiences so far. The covariance is re-symmetrized each step and
    jittered if the update denominator degenerates."""
    f = np.asarray(features, dtype=float)
    cov = posterior.cov
    cf = cov @ f
    denom = posterior.obs_noise_var + f @ cf
    if denom <= 0:
        logger.warning("posterior covariance lost positive definiteness; jittering")
        cov = cov + SPD_JITTER * np.eye(len(f))
        cf = cov @ f
        denom = posterior.obs_noise_var + f @ cf
    mean = posterior.mean + cf * ((target - f @ posterior.mean) / denom)
    new_cov = cov - np.outer(cf, cf) / denom
    new_cov = (new_cov + new_cov.T) / 2
    return LvocPosterior(mean, new_cov, posterior.obs_noise_var)


def _sample_mean_weights(
    posterior: LvocPosterior, n_samples: int, rng: np.random.Generator
) -> np.ndarray:
    """Arithmetic mean of n posterior draws."""
    try:
        chol = np.linalg.cholesky(posterior.cov)
    except np.linalg.LinAlgError:
        logger.warning("covariance factorization failed; jittering")
        chol = np.linalg.cholesky(
            posterior.cov + SPD_JITTER * np.eye(len(posterior.mean))
        )
    z = rng.standard_normal((len(posterior.mean), n_samples))
    draws = posterior.mean[:, None] + chol @ z
    return draws.mean(axis=1)


def thompson_select(
    posterior: LvocPosterior,
    hyper: LvocHyperparams,
    computations: Sequence[Computation],
    features: np.ndarray,
    rng: np.random.Generator,
) -> int:
    """Index of the selected computation.

    With probability p a uniformly random computation; otherwise the argmax
    of the averaged-sample Q estimates, ties broken uniformly.
    """
    if len(computations) == 0:
        raise ValueError("no available computations")
    if hyper.explore_prob > 0 and rng.random() < hyper.explore_prob:
        return int(rng.integers(len(computations)))
    w = _sample_mean_weights(posterior, hyper.n_samples, rng)
    q = features @ w
    best = np.flatnonzero(q >= q.max() - 1e-12)
    if len(best) == 1:
        return int(best[0])
    return int(best[rng.integers(len(best))])


@dataclass
class LvocState:
    posterior: LvocPosterior
    hyper: LvocHyperparams

    def copy(self) -> "LvocState":
        return LvocState(self.posterior.copy(), self.hyper)


def make_lvoc_state(
    explore_prob: float,
    prior_mean: float | np.ndarray,
    prior_var: float,
    n_samples: int,
    obs_noise_var: float = 1.0,
    n_features: int = N_FEATURES,
) -> LvocState:
    hyper = LvocHyperparams(explore_prob, prior_mean, prior_var, int(n_samples), obs_noise_var)
    return LvocState(LvocPosterior.from_prior(hyper, n_features), hyper)
