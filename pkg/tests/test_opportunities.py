import numpy as np
import pandas as pd
import pytest
import scipy.stats
from hypothesis import given, settings
from hypothesis import strategies as st

from ecalign.opportunities import (
    alignment_slope,
    anova_decomposition,
    build_opportunity_set,
    wilcoxon_rank_sum,
)
from ecalign.sustainability import ScoreVector

from helpers import anova_by_hand, wilcoxon_enumeration


def score(values: dict, name="pci", year=2011):
    return ScoreVector(name, year, "product", pd.Series(values), standardized=True)


class TestOpportunitySet:
    def test_truncates_to_unattained(self):
        opps = build_opportunity_set("C0", 2011, ["0001", "0002", "0003"],
                                     [0.5, 0.4, 0.3], [1, 0, 0], k=50)
        assert [p for p, _ in opps.products] == ["0002", "0003"]

    def test_tie_break_is_lexicographic(self):
        opps = build_opportunity_set("C0", 2011, ["0004", "0002", "0003"],
                                     [0.4, 0.4, 0.4], [0, 0, 0], k=2)
        assert [p for p, _ in opps.products] == ["0002", "0003"]

    def test_matches_full_sort_oracle(self, derived, specs):
        spec = specs[2016]
        bundle = derived.bundles[2016]
        c = 5
        opps = build_opportunity_set("X", 2016, spec.products,
                                     bundle.density[c], spec.m[c], k=50)
        pairs = [(-bundle.density[c, i], p) for i, p in enumerate(spec.products)
                 if spec.m[c, i] == 0]
        expected = [p for _, p in sorted(pairs)][:50]
        assert [p for p, _ in opps.products] == expected

    def test_prefix_property(self, derived, specs):
        spec = specs[2019]
        bundle = derived.bundles[2019]
        for c in range(0, len(spec.countries), 9):
            small = build_opportunity_set("X", 2019, spec.products,
                                          bundle.density[c], spec.m[c], k=30)
            large = build_opportunity_set("X", 2019, spec.products,
                                          bundle.density[c], spec.m[c], k=50)
            assert large.products[:30] == small.products

    def test_too_few_unattained_errors(self):
        with pytest.raises(ValueError, match="unattained"):
            build_opportunity_set("C0", 2011, ["0001", "0002"], [0.1, 0.2], [1, 1], k=5)

    def test_k_below_two_errors(self):
        with pytest.raises(ValueError, match="k must be"):
            build_opportunity_set("C0", 2011, ["0001"], [0.1], [0], k=1)


class TestAlignmentSlope:
    def test_exact_linear_relation(self):
        opps = build_opportunity_set("C0", 2011, [f"{i:04d}" for i in range(10)],
                                     np.linspace(1, 0.1, 10), [0] * 10, k=10)
        pci = score({f"{i:04d}": float(i) for i in range(10)})
        t_p = score({f"{i:04d}": 2.0 * i for i in range(10)}, name="pspi")
        slope = alignment_slope(opps, pci, t_p, "social")
        assert slope.beta == pytest.approx(2.0)
        assert slope.r2 == pytest.approx(1.0)
        assert slope.n == 10

    def test_constant_target_gives_zero(self):
        opps = build_opportunity_set("C0", 2011, ["0001", "0002", "0003"],
                                     [0.3, 0.2, 0.1], [0, 0, 0], k=3)
        pci = score({"0001": -1.0, "0002": 0.0, "0003": 1.0})
        t_p = score({"0001": 0.4, "0002": 0.4, "0003": 0.4}, name="pspi")
        slope = alignment_slope(opps, pci, t_p, "social")
        assert slope.beta == 0.0
        assert slope.r2 == 0.0

    def test_matches_brute_force(self):
        rng = np.random.default_rng(21)
        codes = [f"{i:04d}" for i in range(50)]
        opps = build_opportunity_set("C0", 2011, codes, rng.random(50), [0] * 50, k=50)
        x = rng.normal(size=50)
        y = 0.8 * x + rng.normal(size=50)
        pci = score(dict(zip(codes, x)))
        t_p = score(dict(zip(codes, y)), name="pepi")
        slope = alignment_slope(opps, pci, t_p, "environmental")
        beta = np.sum((x - x.mean()) * (y - y.mean())) / np.sum((x - x.mean()) ** 2)
        assert slope.beta == pytest.approx(beta, abs=1e-12)

    def test_missing_scores_dropped(self):
        opps = build_opportunity_set("C0", 2011, ["0001", "0002", "0003", "0004"],
                                     [0.4, 0.3, 0.2, 0.1], [0] * 4, k=4)
        pci = score({"0001": 0.0, "0002": 1.0, "0003": 2.0, "0004": np.nan})
        t_p = score({"0001": 0.0, "0002": 3.0, "0003": 6.0, "0004": 9.0}, name="pspi")
        slope = alignment_slope(opps, pci, t_p, "social")
        assert slope.n == 3
        assert slope.beta == pytest.approx(3.0)

    def test_zero_pci_variance_errors(self):
        opps = build_opportunity_set("C0", 2011, ["0001", "0002"], [0.4, 0.3],
                                     [0, 0], k=2)
        pci = score({"0001": 1.0, "0002": 1.0})
        t_p = score({"0001": 0.0, "0002": 3.0}, name="pspi")
        with pytest.raises(ValueError, match="degenerate opportunity set"):
            alignment_slope(opps, pci, t_p, "social")

    @settings(max_examples=20, deadline=None)
    @given(shift=st.floats(-5, 5), scale=st.floats(0.1, 10), seed=st.integers(0, 10**5))
    def test_shift_scale_invariance(self, shift, scale, seed):
        rng = np.random.default_rng(seed)
        codes = [f"{i:04d}" for i in range(12)]
        opps = build_opportunity_set("C0", 2011, codes, rng.random(12), [0] * 12, k=12)
        x = rng.normal(size=12)
        y = rng.normal(size=12)
        pci = score(dict(zip(codes, x)))
        base = alignment_slope(opps, pci, score(dict(zip(codes, y)), name="t"), "social")
        shifted = alignment_slope(opps, pci,
                                  score(dict(zip(codes, y + shift)), name="t"), "social")
        scaled = alignment_slope(opps, pci,
                                 score(dict(zip(codes, y * scale)), name="t"), "social")
        assert shifted.beta == pytest.approx(base.beta, rel=1e-9, abs=1e-12)
        assert scaled.beta == pytest.approx(base.beta * scale, rel=1e-9, abs=1e-12)


class TestWilcoxon:
    def test_separated_triples(self):
        res = wilcoxon_rank_sum([1, 2, 3], [4, 5, 6])
        assert res.statistic == 0.0
        assert res.p_value == pytest.approx(0.1)
        assert res.method == "exact"

    def test_matches_enumeration_oracle(self):
        rng = np.random.default_rng(31)
        for _ in range(20):
            a = rng.integers(0, 8, size=rng.integers(2, 6)).astype(float)
            b = rng.integers(0, 8, size=rng.integers(2, 6)).astype(float)
            if np.all(np.concatenate([a, b]) == a[0] if len(a) else False):
                continue
            res = wilcoxon_rank_sum(a, b)
            u_oracle, p_oracle = wilcoxon_enumeration(a, b)
            assert res.statistic == pytest.approx(u_oracle)
            if not res.degenerate:
                assert res.p_value == pytest.approx(p_oracle, abs=1e-12)

    def test_identical_multisets(self):
        res = wilcoxon_rank_sum([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
        assert res.p_value == pytest.approx(1.0)

    def test_all_identical_flagged(self):
        res = wilcoxon_rank_sum([2.0, 2.0], [2.0, 2.0, 2.0])
        assert res.p_value == 1.0
        assert res.degenerate

    def test_large_shifted_normals(self):
        rng = np.random.default_rng(41)
        a = rng.normal(0.0, 1.0, 40)
        b = rng.normal(1.5, 1.0, 45)
        res = wilcoxon_rank_sum(a, b)
        assert res.method == "normal"
        assert res.p_value < 0.01

    def test_normal_branch_tracks_scipy(self):
        rng = np.random.default_rng(51)
        for _ in range(10):
            a = rng.normal(0, 1, rng.integers(25, 60))
            b = rng.normal(0.3, 1.2, rng.integers(25, 60))
            res = wilcoxon_rank_sum(a, b)
            ref = scipy.stats.mannwhitneyu(a, b, alternative="two-sided",
                                           method="asymptotic")
            assert res.statistic == pytest.approx(ref.statistic)
            assert res.p_value == pytest.approx(ref.pvalue, rel=1e-9)

    def test_exact_branch_tracks_scipy_without_ties(self):
        rng = np.random.default_rng(61)
        for _ in range(10):
            a = rng.normal(size=6)
            b = rng.normal(size=9)
            res = wilcoxon_rank_sum(a, b)
            ref = scipy.stats.mannwhitneyu(a, b, alternative="two-sided", method="exact")
            assert res.p_value == pytest.approx(ref.pvalue, abs=1e-12)

    def test_empty_group_errors(self):
        with pytest.raises(ValueError, match="nonempty"):
            wilcoxon_rank_sum([], [1.0])


class TestAnova:
    def test_equal_means_give_zero_eta(self):
        values = [1.0, 2.0, 3.0, 1.0, 2.0, 3.0]
        groups = ["a", "a", "a", "b", "b", "b"]
        res = anova_decomposition(values, groups)
        assert res.eta2 == pytest.approx(0.0, abs=1e-12)

    def test_zero_within_variance_gives_one(self):
        values = [1.0, 1.0, 5.0, 5.0, 9.0, 9.0]
        groups = ["a", "a", "b", "b", "c", "c"]
        res = anova_decomposition(values, groups)
        assert res.eta2 == pytest.approx(1.0)
        assert res.omega2 == pytest.approx(1.0)

    def test_matches_hand_computation(self):
        rng = np.random.default_rng(71)
        values = np.concatenate([rng.normal(m, 1.0, 10) for m in (0.0, 0.5, 2.0)])
        groups = np.repeat(["a", "b", "c"], 10)
        res = anova_decomposition(values, groups)
        ssb, ssw, sst = anova_by_hand(values, groups)
        assert res.ss_between == pytest.approx(ssb, rel=1e-12)
        assert res.ss_within == pytest.approx(ssw, rel=1e-12)
        assert res.eta2 == pytest.approx(ssb / sst, rel=1e-12)
        ms_w = ssw / (len(values) - 3)
        assert res.omega2 == pytest.approx((ssb - 2 * ms_w) / (sst + ms_w), rel=1e-12)

    def test_decomposition_identity(self):
        rng = np.random.default_rng(81)
        values = rng.normal(size=40)
        groups = rng.choice(["a", "b", "c", "d"], size=40)
        res = anova_decomposition(values, groups)
        assert res.ss_between + res.ss_within == pytest.approx(res.ss_total, rel=1e-9)

    def test_single_member_category_kept(self):
        values = [1.0, 2.0, 5.0, 6.0, 3.33]
        groups = ["a", "a", "b", "b", "lone"]
        res = anova_decomposition(values, groups)
        assert res.n_groups == 3
        assert res.df_within == 2

    def test_requires_two_populated_categories(self):
        with pytest.raises(ValueError, match="at least 2 categories"):
            anova_decomposition([1.0, 2.0, 3.0], ["a", "a", "b"])
