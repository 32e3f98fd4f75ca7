"""Closest diversification opportunities and their sustainability alignment.

For each country-year the k unattained products with the highest
relatedness density form the opportunity set; the alignment slope is the
least-squares slope of product sustainability on product complexity over
that set.  Rank-sum tests and a one-way variance decomposition support the
group comparisons built on top of these measures.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .sustainability import ScoreVector


@dataclass
class OpportunitySet:
    country: str
    year: int
    k: int
    products: list[tuple[str, float]]  # (product, density), density descending


@dataclass
class AlignmentSlope:
    country: str
    year: int
    dimension: str  # "social" or "environmental"
    beta: float
    r2: float
    n: int


@dataclass
class WilcoxonResult:
    statistic: float  # U of the first group (pairs where A beats B, ties halved)
    p_value: float
    method: str  # "exact" or "normal"
    degenerate: bool = False


@dataclass
class AnovaResult:
    ss_between: float
    ss_within: float
    ss_total: float
    df_between: int
    df_within: int
    ms_between: float
    ms_within: float
    eta2: float
    omega2: float
    n: int
    n_groups: int


def build_opportunity_set(country: str, year: int, products, density_row,
                          m_row, k: int = 50) -> OpportunitySet:
    """Top-k unattained products by relatedness density.

    Ties are broken by ascending product code so the ranking is total and
    a smaller k always yields a prefix of a larger one.
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    density_row = np.asarray(density_row, dtype=float)
    m_row = np.asarray(m_row)
    unattained = [
        (str(products[i]), float(density_row[i]))
        for i in range(len(products))
        if m_row[i] == 0
    ]
    if len(unattained) < 2:
        raise ValueError(
            f"{country}/{year}: only {len(unattained)} unattained products, need >= 2"
        )
    unattained.sort(key=lambda item: (-item[1], item[0]))
    return OpportunitySet(country=country, year=year, k=k, products=unattained[:k])


def alignment_slope(opps: OpportunitySet, pci: ScoreVector, t_p: ScoreVector,
                    dimension: str) -> AlignmentSlope:
    """OLS slope of product sustainability on product complexity over a set.

    Products missing either score are dropped; the slope is the closed
    form covariance/variance ratio, and r2 the squared correlation (0 when
    the sustainability score is constant).
    """
    codes = [p for p, _ in opps.products]
    x = pci.values.reindex(codes).to_numpy(dtype=float)
    y = t_p.values.reindex(codes).to_numpy(dtype=float)
    ok = ~(np.isnan(x) | np.isnan(y))
    x, y = x[ok], y[ok]
    if len(x) < 2:
        raise ValueError(f"{opps.country}/{opps.year}: fewer than 2 scored opportunities")
    sxx = float(np.sum((x - x.mean()) ** 2))
    if sxx == 0:
        raise ValueError(f"degenerate opportunity set for {opps.country}/{opps.year}: "
                         "no complexity variance")
    syy = float(np.sum((y - y.mean()) ** 2))
    sxy = float(np.sum((x - x.mean()) * (y - y.mean())))
    beta = sxy / sxx
    r2 = (sxy * sxy) / (sxx * syy) if syy > 0 else 0.0
    return AlignmentSlope(country=opps.country, year=opps.year, dimension=dimension,
                          beta=beta, r2=r2, n=int(len(x)))


def _midranks(pooled: np.ndarray) -> np.ndarray:
    order = np.argsort(pooled, kind="mergesort")
    ranks = np.empty(len(pooled))
    i = 0
    while i < len(pooled):
        j = i
        while j + 1 < len(pooled) and pooled[order[j + 1]] == pooled[order[i]]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def _exact_two_sided_p(pooled_2ranks: list[int], n_a: int, u_obs: float) -> float:
    """Exact two-sided p via the null distribution of the rank sum.

    Counts, for every achievable doubled rank sum, the number of size-n_a
    subsets of the pooled sample attaining it (exact integer arithmetic),
    which conditions on the observed tie pattern.
    """
    counts: list[dict[int, int]] = [defaultdict(int) for _ in range(n_a + 1)]
    counts[0][0] = 1
    for r2 in pooled_2ranks:
        for j in range(min(n_a, len(pooled_2ranks)) - 1, -1, -1):
            if not counts[j]:
                continue
            target = counts[j + 1]
            for s, c in counts[j].items():
                target[s + r2] += c
    dist = counts[n_a]
    total = sum(dist.values())
    # doubled U = doubled rank sum - n_a (n_a + 1)
    shift = n_a * (n_a + 1)
    u2_obs = int(round(2 * u_obs))
    lo = sum(c for s, c in dist.items() if s - shift <= u2_obs)
    hi = sum(c for s, c in dist.items() if s - shift >= u2_obs)
    return min(1.0, 2.0 * min(lo, hi) / total)


def wilcoxon_rank_sum(group_a, group_b) -> WilcoxonResult:
    """Two-sided Mann-Whitney U rank-sum test.

    Uses exact enumeration of the null distribution when the smaller group
    has at most 20 observations, and the normal approximation with tie and
    continuity corrections otherwise.  Identical pooled values yield
    p = 1 with a degeneracy flag.
    """
    a = np.asarray(group_a, dtype=float)
    b = np.asarray(group_b, dtype=float)
    if a.size == 0 or b.size == 0:
        raise ValueError("both groups must be nonempty")
    n_a, n_b = len(a), len(b)
    pooled = np.concatenate([a, b])
    ranks = _midranks(pooled)
    r_a = float(ranks[:n_a].sum())
    u_a = r_a - n_a * (n_a + 1) / 2.0

    if np.all(pooled == pooled[0]):
        return WilcoxonResult(statistic=u_a, p_value=1.0, method="degenerate",
                              degenerate=True)

    if min(n_a, n_b) > 20:
        n = n_a + n_b
        _, tie_counts = np.unique(pooled, return_counts=True)
        tie_term = float(np.sum(tie_counts ** 3 - tie_counts)) / (n * (n - 1))
        sigma2 = n_a * n_b / 12.0 * ((n + 1) - tie_term)
        mu = n_a * n_b / 2.0
        diff = u_a - mu
        z = (diff - 0.5 * np.sign(diff)) / math.sqrt(sigma2) if diff != 0 else 0.0
        p = min(1.0, 2.0 * float(norm.sf(abs(z))))
        return WilcoxonResult(statistic=u_a, p_value=p, method="normal")

    pooled_2ranks = [int(round(2 * r)) for r in ranks]
    p = _exact_two_sided_p(pooled_2ranks, n_a, u_a)
    return WilcoxonResult(statistic=u_a, p_value=p, method="exact")


def anova_decomposition(values, groups) -> AnovaResult:
    """One-way variance decomposition of a score across categories.

    Returns the between/within sums of squares together with the raw
    variance share eta2 and its bias-corrected population estimate
    omega2 = (SSB - df_between * MS_within) / (SST + MS_within).
    Single-member categories are kept and contribute zero within-SS.
    """
    values = np.asarray(values, dtype=float)
    groups = np.asarray(groups)
    if len(values) != len(groups):
        raise ValueError("values and groups differ in length")
    ok = ~np.isnan(values)
    values, groups = values[ok], groups[ok]
    labels, codes = np.unique(groups, return_inverse=True)
    sizes = np.bincount(codes)
    if (sizes >= 2).sum() < 2:
        raise ValueError("need at least 2 categories with at least 2 members")

    grand = values.mean()
    group_means = np.bincount(codes, weights=values) / sizes
    ss_between = float(np.sum(sizes * (group_means - grand) ** 2))
    ss_within = float(np.sum((values - group_means[codes]) ** 2))
    ss_total = float(np.sum((values - grand) ** 2))
    if ss_total == 0:
        raise ValueError("zero total variance in scores")

    n, k = len(values), len(labels)
    df_between, df_within = k - 1, n - k
    ms_between = ss_between / df_between
    ms_within = ss_within / df_within
    eta2 = ss_between / ss_total
    omega2 = (ss_between - df_between * ms_within) / (ss_total + ms_within)
    return AnovaResult(
        ss_between=ss_between, ss_within=ss_within, ss_total=ss_total,
        df_between=df_between, df_within=df_within,
        ms_between=ms_between, ms_within=ms_within,
        eta2=eta2, omega2=omega2, n=n, n_groups=k,
    )
