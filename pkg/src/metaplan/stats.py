"""Behavioral statistics: trend, group, and pairwise rank tests, plus the
adaptiveness classification derived from click-count trends.

Mann-Kendall uses the tie-corrected variance and a continuity-corrected
normal approximation. The rank-sum test enumerates the exact null
distribution for small groups and falls back to the tie-corrected normal
approximation otherwise. Kruskal-Wallis delegates to scipy.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from itertools import combinations
from math import comb
from typing import Mapping, Sequence

import numpy as np
from scipy import stats as sps

logger = logging.getLogger(__name__)

HIGHLY_ADAPTIVE = "highly_adaptive"
MODERATELY_ADAPTIVE = "moderately_adaptive"
MALADAPTIVE = "maladaptive"
ADAPTIVENESS_LABELS = (HIGHLY_ADAPTIVE, MODERATELY_ADAPTIVE, MALADAPTIVE)

EXACT_ENUMERATION_LIMIT = 500_000


@dataclass(frozen=True)
class TrendResult:
    S: int
    variance_S: float
    z: float
    p_two_sided: float

    @property
    def increasing(self) -> bool:
        return self.S > 0


def mann_kendall(series: Sequence[float]) -> TrendResult:
    """Monotone-trend test: S = sum over pairs i<j of sign(x_j - x_i)."""
    x = np.asarray(series, dtype=float)
    n = len(x)
    if n < 3:
        raise ValueError("need at least 3 observations")
    s = int(np.sign(x[None, :] - x[:, None])[np.triu_indices(n, k=1)].sum())
    _, tie_counts = np.unique(x, return_counts=True)
    var_s = (
        n * (n - 1) * (2 * n + 5)
        - np.sum(tie_counts * (tie_counts - 1) * (2 * tie_counts + 5))
    ) / 18.0
    if var_s <= 0:  # all values equal
        return TrendResult(S=s, variance_S=0.0, z=0.0, p_two_sided=1.0)
    if s > 0:
        z = (s - 1) / np.sqrt(var_s)
    elif s < 0:
        z = (s + 1) / np.sqrt(var_s)
    else:
        z = 0.0
    p = 2.0 * sps.norm.sf(abs(z))
    return TrendResult(S=s, variance_S=float(var_s), z=float(z), p_two_sided=float(min(p, 1.0)))


def kruskal_wallis(groups: Sequence[Sequence[float]]) -> tuple[float, float]:
    """Rank-based one-way test across two or more groups.

    Returns (H, p) with tie correction and a chi-squared reference with
    k-1 degrees of freedom.
    """
    if len(groups) < 2:
        raise ValueError("need at least 2 groups")
    if any(len(g) == 0 for g in groups):
        raise ValueError("groups must be nonempty")
    pooled = np.concatenate([np.asarray(g, dtype=float) for g in groups])
    if np.all(pooled == pooled[0]):
        return 0.0, 1.0
    h, p = sps.kruskal(*[np.asarray(g, dtype=float) for g in groups])
    return float(h), float(p)


@dataclass(frozen=True)
class RankSumResult:
    rank_sum: float  # W, rank sum of the first sample
    z: float
    p: float
    method: str


def _ranksum_exact_p(
    ranks: np.ndarray, n1: int, w_obs: float, alternative: str
) -> float:
    """Exact null distribution of the first sample's rank sum, enumerated
    over all assignments of the pooled (average) ranks."""
    n = len(ranks)
    total = 0
    hits = 0
    mu = n1 * (n + 1) / 2.0
    for idx in combinations(range(n), n1):
        w = ranks[list(idx)].sum()
        total += 1
        if alternative == "two-sided":
            hits += abs(w - mu) >= abs(w_obs - mu) - 1e-12
        elif alternative == "less":
            hits += w <= w_obs + 1e-12
        else:
            hits += w >= w_obs - 1e-12
    return hits / total


def wilcoxon_ranksum(
    a: Sequence[float],
    b: Sequence[float],
    alternative: str = "two-sided",
    method: str = "auto",
) -> RankSumResult:
    """Rank-sum test of two independent samples.

    method="auto" enumerates the exact null when the assignment count is
    small enough (small groups), otherwise uses the tie-corrected normal
    approximation with continuity correction.
    """
    if alternative not in ("two-sided", "less", "greater"):
        raise ValueError(f"unknown alternative {alternative!r}")
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if len(a) == 0 or len(b) == 0:
        raise ValueError("both samples must be nonempty")
    n1, n2 = len(a), len(b)
    n = n1 + n2
    pooled = np.concatenate([a, b])
    ranks = sps.rankdata(pooled)
    w = float(ranks[:n1].sum())
    mu = n1 * (n + 1) / 2.0

    _, tie_counts = np.unique(pooled, return_counts=True)
    tie_term = np.sum(tie_counts**3 - tie_counts)
    var = n1 * n2 * ((n + 1) - tie_term / (n * (n - 1))) / 12.0
    if var <= 0:
        return RankSumResult(rank_sum=w, z=0.0, p=1.0, method="degenerate")
    correction = 0.5 * np.sign(w - mu)
    z = (w - mu - correction) / np.sqrt(var) if w != mu else 0.0

    use_exact = method == "exact" or (
        method == "auto"
        and min(n1, n2) < 10
        and comb(n, min(n1, n2)) <= EXACT_ENUMERATION_LIMIT
    )
    if use_exact:
        p = _ranksum_exact_p(ranks, n1, w, alternative)
        return RankSumResult(rank_sum=w, z=float(z), p=float(p), method="exact")

    if alternative == "two-sided":
        p = 2.0 * sps.norm.sf(abs(z))
    elif alternative == "less":
        p = sps.norm.cdf(z)
    else:
        p = sps.norm.sf(z)
    return RankSumResult(rank_sum=w, z=float(z), p=float(min(p, 1.0)), method="normal")


def is_high_variance(condition_label: str) -> bool:
    if condition_label.startswith("HV"):
        return True
    if condition_label.startswith("LV"):
        return False
    raise ValueError(f"cannot infer reward variance from label {condition_label!r}")


def classify_trend(
    click_series: Sequence[float], high_variance: bool, alpha_level: float = 0.05
) -> str:
    """Adaptiveness by trend direction relative to the beneficial direction:
    more clicks are adaptive under high reward variance, fewer under low."""
    trend = mann_kendall(click_series)
    significant = trend.p_two_sided < alpha_level and trend.S != 0
    if not significant:
        return MODERATELY_ADAPTIVE
    beneficial = trend.S > 0 if high_variance else trend.S < 0
    return HIGHLY_ADAPTIVE if beneficial else MALADAPTIVE


def classify_adaptiveness(participant_data, alpha_level: float = 0.05) -> str:
    """Classify one participant from their session's click counts."""
    return classify_trend(
        participant_data.click_counts(),
        is_high_variance(participant_data.condition.label),
        alpha_level,
    )


@dataclass(frozen=True)
class PairwiseComparison:
    group_a: str
    group_b: str
    n_a: int
    n_b: int
    rank_sum: float
    z: float
    p_raw: float
    p_corrected: float


@dataclass
class GroupComparison:
    parameter: str
    group_means: dict[str, float]
    comparisons: list[PairwiseComparison]
    skipped: list[str]


def compare_group_parameters(
    values_by_group: Mapping[str, Sequence[float]],
    parameter_name: str,
    alpha_level: float = 0.05,
) -> GroupComparison:
    """Pairwise rank-sum tests on a fitted parameter across groups, with
    Bonferroni correction over the number of comparisons performed.
    Empty groups are skipped with a notice."""
    usable = {g: np.asarray(v, dtype=float) for g, v in values_by_group.items() if len(v) > 0}
    skipped = [g for g, v in values_by_group.items() if len(v) == 0]
    for g in skipped:
        logger.info("group %r has no values for %s; skipped", g, parameter_name)
    if len(usable) < 2:
        raise ValueError("need at least 2 nonempty groups")
    means = {g: float(v.mean()) for g, v in usable.items()}
    pairs = list(combinations(sorted(usable), 2))
    m = len(pairs)
    comparisons = []
    for ga, gb in pairs:
        res = wilcoxon_ranksum(usable[ga], usable[gb])
        comparisons.append(
            PairwiseComparison(
                group_a=ga,
                group_b=gb,
                n_a=len(usable[ga]),
                n_b=len(usable[gb]),
                rank_sum=res.rank_sum,
                z=res.z,
                p_raw=res.p,
                p_corrected=min(1.0, m * res.p),
            )
        )
    return GroupComparison(parameter_name, means, comparisons, skipped)


def mean_click_curve(click_counts: np.ndarray) -> list[tuple[int, float, float]]:
    """Rows of (trial_index, mean, sem) from an (agents x trials) matrix."""
    counts = np.atleast_2d(np.asarray(click_counts, dtype=float))
    n = counts.shape[0]
    means = counts.mean(axis=0)
    sems = counts.std(axis=0, ddof=1) / np.sqrt(n) if n > 1 else np.zeros(counts.shape[1])
    return [(t, float(means[t]), float(sems[t])) for t in range(counts.shape[1])]
