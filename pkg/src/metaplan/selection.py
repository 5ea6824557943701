"""Model comparison: BIC scoring, best-model counts, and random-effects
Bayesian model selection at the group and family level.

Log model evidence is approximated as -BIC/2. Group-level inference treats
each participant's generating model as a draw from unknown population
frequencies with a Dirichlet prior; a variational iteration yields the
expected frequencies r, and exceedance probabilities phi are estimated by
Monte Carlo over the Dirichlet posterior.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.special import digamma

logger = logging.getLogger(__name__)

DEFAULT_MC_SAMPLES = 1_000_000
BMS_TOL = 1e-6
BMS_MAX_ITER = 10_000


def bic(log_likelihood: float, k_params: int, n_obs: int) -> float:
    """k * ln(n) - 2 * logL."""
    if n_obs < 1:
        raise ValueError("n_obs must be >= 1")
    return k_params * math.log(n_obs) - 2.0 * log_likelihood


def log_evidence_from_bic(bic_value: float) -> float:
    return -bic_value / 2.0


@dataclass
class EvidenceMatrix:
    """Per-participant, per-variant approximate log evidence (-BIC/2)."""

    participant_ids: tuple[str, ...]
    variant_ids: tuple[str, ...]
    log_evidence: np.ndarray  # (n_participants, n_variants)
    conditions: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        self.log_evidence = np.asarray(self.log_evidence, dtype=float)
        n, k = self.log_evidence.shape
        if n != len(self.participant_ids) or k != len(self.variant_ids):
            raise ValueError("evidence matrix shape does not match labels")
        if not np.all(np.isfinite(self.log_evidence)):
            raise ValueError("log evidence must be finite")
        if self.conditions and len(self.conditions) != n:
            raise ValueError("one condition label per participant required")

    def subset(self, condition: str) -> "EvidenceMatrix":
        mask = np.array([c == condition for c in self.conditions])
        return EvidenceMatrix(
            tuple(p for p, m in zip(self.participant_ids, mask) if m),
            self.variant_ids,
            self.log_evidence[mask],
            tuple(c for c, m in zip(self.conditions, mask) if m),
        )


def count_best(
    bic_matrix: np.ndarray,
    variant_ids: Sequence[str],
    conditions: Sequence[str] | None = None,
) -> dict[str, dict[str, int]]:
    """Assign each participant to the argmin-BIC variant and count.

    Returns {"overall": {...}} plus one entry per condition when condition
    labels are supplied. Ties go to the lexicographically first variant id
    with a logged warning.
    """
    bic_matrix = np.asarray(bic_matrix, dtype=float)
    if np.isnan(bic_matrix).any():
        raise ValueError("bic matrix contains NaN")
    order = np.argsort(np.asarray(variant_ids, dtype=object), kind="stable")
    counts: dict[str, dict[str, int]] = {"overall": {v: 0 for v in variant_ids}}
    if conditions is not None:
        for c in conditions:
            counts.setdefault(c, {v: 0 for v in variant_ids})
    for i, row in enumerate(bic_matrix):
        best = row.min()
        tied = [j for j in order if row[j] <= best + 1e-12]
        if len(tied) > 1:
            logger.warning(
                "participant %d: BIC tie among %s; assigning %s",
                i, [variant_ids[j] for j in tied], variant_ids[tied[0]],
            )
        winner = variant_ids[tied[0]]
        counts["overall"][winner] += 1
        if conditions is not None:
            counts[conditions[i]][winner] += 1
    return counts


@dataclass
class BmsResult:
    labels: tuple[str, ...]
    dirichlet_alpha: np.ndarray
    expected_frequencies: np.ndarray  # r
    exceedance: np.ndarray  # phi
    converged: bool
    n_iterations: int

    def to_json(self) -> dict:
        return {
            "labels": list(self.labels),
            "dirichlet_alpha": self.dirichlet_alpha.tolist(),
            "expected_frequencies": self.expected_frequencies.tolist(),
            "exceedance": self.exceedance.tolist(),
            "converged": self.converged,
            "n_iterations": self.n_iterations,
        }


def _exceedance_mc(
    alpha: np.ndarray,
    mc_samples: int,
    rng: np.random.Generator,
    groups: Sequence[Sequence[int]] | None = None,
) -> np.ndarray:
    """Monte Carlo frequency with which each component (or group sum) is
    the largest under Dirichlet(alpha)."""
    k_out = len(groups) if groups is not None else len(alpha)
    counts = np.zeros(k_out)
    if mc_samples <= 0:
        return counts
    remaining = mc_samples
    chunk = 100_000
    while remaining > 0:
        m = min(chunk, remaining)
        draws = rng.dirichlet(alpha, size=m)
        if groups is not None:
            draws = np.stack([draws[:, list(g)].sum(axis=1) for g in groups], axis=1)
        counts += np.bincount(draws.argmax(axis=1), minlength=k_out)
        remaining -= m
    return counts / mc_samples


def rfx_bms(
    log_evidence: "np.ndarray | EvidenceMatrix",
    prior_alpha: float | np.ndarray = 1.0,
    mc_samples: int = DEFAULT_MC_SAMPLES,
    seed: int = 0,
    labels: Sequence[str] | None = None,
    tol: float = BMS_TOL,
    max_iter: int = BMS_MAX_ITER,
) -> BmsResult:
    """Random-effects model selection over subjects.

    Variational iteration: responsibilities g_ik proportional to
    exp(logEv_ik + digamma(alpha_k) - digamma(sum alpha)); alpha_k =
    alpha0_k + sum_i g_ik, repeated until max |delta alpha| < tol.
    r = alpha / sum(alpha); phi by Monte Carlo argmax frequency.
    """
    if isinstance(log_evidence, EvidenceMatrix):
        if labels is None:
            labels = log_evidence.variant_ids
        log_evidence = log_evidence.log_evidence
    ev = np.asarray(log_evidence, dtype=float)
    if ev.ndim != 2 or ev.shape[1] < 2:
        raise ValueError("need a (subjects x K>=2) evidence matrix")
    n, k = ev.shape
    alpha0 = np.broadcast_to(np.asarray(prior_alpha, dtype=float), (k,)).copy()
    if np.any(alpha0 <= 0):
        raise ValueError("prior alpha must be positive")
    alpha = alpha0.copy()
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        log_u = ev + digamma(alpha)[None, :] - digamma(alpha.sum())
        log_u -= log_u.max(axis=1, keepdims=True)
        g = np.exp(log_u)
        g /= g.sum(axis=1, keepdims=True)
        new_alpha = alpha0 + g.sum(axis=0)
        delta = np.abs(new_alpha - alpha).max()
        alpha = new_alpha
        if delta < tol:
            converged = True
            break
    if not converged:
        logger.warning("BMS did not converge within %d iterations", max_iter)
    r = alpha / alpha.sum()
    rng = np.random.default_rng(seed)
    phi = _exceedance_mc(alpha, mc_samples, rng)
    return BmsResult(
        labels=tuple(labels) if labels is not None else tuple(f"m{j}" for j in range(k)),
        dirichlet_alpha=alpha,
        expected_frequencies=r,
        exceedance=phi,
        converged=converged,
        n_iterations=iterations,
    )


def family_bms(
    log_evidence: np.ndarray,
    variant_ids: Sequence[str],
    partition: Mapping[str, Sequence[str]],
    mc_samples: int = DEFAULT_MC_SAMPLES,
    seed: int = 0,
) -> BmsResult:
    """Family-level inference for disjoint sets of variants.

    Prior mass is uniform over families and split equally inside each, so a
    family's prior does not grow with its member count. Family r is the sum
    of member frequencies; family phi compares summed Dirichlet components.
    """
    variant_ids = list(variant_ids)
    seen: list[str] = []
    for members in partition.values():
        seen.extend(members)
    if sorted(seen) != sorted(variant_ids):
        raise ValueError("partition must cover every variant exactly once")

    index = {v: j for j, v in enumerate(variant_ids)}
    family_labels = tuple(partition.keys())
    groups = [[index[v] for v in partition[f]] for f in family_labels]
    alpha0 = np.empty(len(variant_ids))
    for g in groups:
        alpha0[list(g)] = 1.0 / len(g)

    ev = np.asarray(log_evidence, dtype=float)
    model_level = rfx_bms(
        ev, prior_alpha=alpha0, mc_samples=0, seed=seed, labels=variant_ids
    )
    alpha = model_level.dirichlet_alpha
    family_alpha = np.array([alpha[list(g)].sum() for g in groups])
    family_r = family_alpha / alpha.sum()
    rng = np.random.default_rng(seed)
    phi = _exceedance_mc(alpha, mc_samples, rng, groups=groups)
    return BmsResult(
        labels=family_labels,
        dirichlet_alpha=family_alpha,
        expected_frequencies=family_r,
        exceedance=phi,
        converged=model_level.converged,
        n_iterations=model_level.n_iterations,
    )
