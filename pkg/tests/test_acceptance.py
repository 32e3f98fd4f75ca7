"""End-to-end acceptance suite.

Each test prints one PASS/FAIL line (run pytest with -s to see them all)
and enforces the stated tolerance and runtime budget.
"""

import time
from contextlib import contextmanager

import numpy as np
import pandas as pd
import pytest

from ecalign.complexity import build_reduced_matrices, compute_eci_pci
from ecalign.econometrics import (
    fit_fe_logit,
    mcfadden_r2,
    relatedness_threshold,
    roc_auc,
    vif,
)
from ecalign.entry import detect_entries
from ecalign.config import load_config
from ecalign.ingest import SampleFilterConfig, TradePanel, apply_sample_filters
from ecalign.opportunities import anova_decomposition
from ecalign.pipeline import run_pipeline
from ecalign.relatedness import compute_density, compute_proximity
from ecalign.specialization import SpecializationMatrix, binarize, compute_rca
from ecalign.sustainability import ScoreVector, product_score
from ecalign.synth import generate_dataset, planted_entry_flags, write_dataset

from helpers import (
    auc_pair_counting,
    density_triple_loop,
    naive_entry_scan,
    proximity_triple_loop,
    reflections_fixed_point,
    simulate_logit_panel,
)


@contextmanager
def criterion(number: int, description: str):
    start = time.perf_counter()
    try:
        yield
    except BaseException:
        print(f"\n[criterion {number:2d}] FAIL  {description}")
        raise
    print(f"\n[criterion {number:2d}] PASS  {description} "
          f"({time.perf_counter() - start:.2f}s)")


def spec_from(m):
    m = np.asarray(m, dtype=np.int8)
    n_c, n_p = m.shape
    return binarize(SpecializationMatrix(
        2011, tuple(f"C{i}" for i in range(n_c)),
        tuple(f"{i:04d}" for i in range(n_p)), m.astype(float)))


def test_criterion_1_rca_identity(synth_data):
    with criterion(1, "share-weighted advantage sums to 1 per country-year"):
        start = time.perf_counter()
        panel = apply_sample_filters(TradePanel.from_frame(synth_data.trade),
                                     synth_data.indicators, SampleFilterConfig())
        for year in panel.years:
            spec = compute_rca(panel, year)
            x = panel.year_slice(year)
            cols = [panel.products.index(p) for p in spec.products]
            world = x[:, cols].sum(axis=0)
            identity = spec.rca @ (world / world.sum())
            totals = x.sum(axis=1)
            assert np.abs(identity[totals > 0] - 1.0).max() <= 1e-10
        assert time.perf_counter() - start < 1.0


def test_criterion_2_eigensolver_oracle():
    with criterion(2, "dense eigenvectors match the averaging-iteration fixed point"):
        start = time.perf_counter()
        rng = np.random.default_rng(424242)
        checked = 0
        while checked < 25:
            m = (rng.random((20, 30)) < 0.35).astype(np.int8)
            if m.sum(axis=1).min() < 1 or m.sum(axis=0).min() < 1:
                continue
            red = build_reduced_matrices(spec_from(m))
            scores = compute_eci_pci(red)
            if min(scores.eci_gap, scores.pci_gap) < 0.01:
                continue
            for mat, start_vec, got in (
                    (red.m_cc, red.diversity, scores.eci.to_numpy()),
                    (red.m_pp, red.ubiquity, scores.pci.to_numpy())):
                oracle = reflections_fixed_point(mat, start_vec)
                if np.dot(oracle, got) < 0:
                    oracle = -oracle
                assert np.abs(oracle - got).max() <= 1e-8
            checked += 1
        assert time.perf_counter() - start < 10.0


def test_criterion_3_relatedness_bounds_and_oracle(derived):
    with criterion(3, "density within [0,1]; proximity/density match triple loops"):
        for bundle in derived.bundles.values():
            assert bundle.density.min() >= 0.0
            assert bundle.density.max() <= 1.0
        rng = np.random.default_rng(77)
        for _ in range(20):
            m = (rng.random((5, 8)) < 0.4).astype(np.int8)
            spec = spec_from(m)
            phi = compute_proximity(spec)
            omega = compute_density(spec, phi)
            assert np.abs(phi - proximity_triple_loop(m)).max() <= 1e-12
            assert np.abs(omega - density_triple_loop(m, phi)).max() <= 1e-12


def test_criterion_4_product_score_convexity(synth_data, filtered_panel, specs, derived):
    with criterion(4, "product scores stay convex; equal inputs give constant output"):
        from ecalign.sustainability import zscore_country_indicator
        for year in filtered_panel.years:
            for name, t_p in (("SPI", derived.pspi[year]), ("EPI", derived.pepi[year])):
                t_c = zscore_country_indicator(synth_data.indicators, name, year,
                                               filtered_panel.countries)
                lo, hi = t_c.values.min(), t_c.values.max()
                got = t_p.values.dropna()
                assert got.min() >= lo - 1e-12
                assert got.max() <= hi + 1e-12
        constant = ScoreVector("flat", 2016, "country",
                               pd.Series(0.5, index=list(filtered_panel.countries)),
                               standardized=True)
        t_p = product_score(specs[2016], filtered_panel, constant)
        assert (t_p.values.dropna() == 0.5).all()


def test_criterion_5_entry_oracle():
    with criterion(5, "entry detector equals the naive window scan on planted data"):
        m_series, planted = planted_entry_flags(seed=7, n_entries=40)
        flags = detect_entries(m_series, m=3)
        got = {(r.country, r.product, r.year)
               for r in flags[flags["entry"] == 1].itertuples()}
        assert got == planted
        assert len(got) == 40
        cube = np.stack([m_series[y].m for y in sorted(m_series)])
        countries = m_series[2011].countries
        products = m_series[2011].products
        oracle = {(countries[c], products[p], y)
                  for c, p, y in naive_entry_scan(cube, sorted(m_series), 3)}
        assert got == oracle
        # edge years outside [first + m, last - m + 1] can never appear
        assert not any(y < 2014 or y > 2020 for _, _, y in got)


def test_criterion_6_simulate_and_recover():
    with criterion(6, "planted logit coefficients recovered within 3 SE"):
        start = time.perf_counter()
        panel, delta, _ = simulate_logit_panel(seed=123, n_rows=50000, n_groups=200)
        fit = fit_fe_logit(panel, model="interactions", sample="ALL")
        assert fit.converged
        assert np.all(np.abs(fit.coef - delta) <= 3.0 * fit.se)

        for variable, i_direct, i_inter in (("PCI", 2, 5), ("PEPI", 4, 7)):
            got = relatedness_threshold(fit, variable)
            planted = -delta[i_direct] / delta[i_inter]
            grad = np.array([-1.0 / fit.coef[i_inter],
                             fit.coef[i_direct] / fit.coef[i_inter] ** 2])
            cov = fit.cov[np.ix_([i_direct, i_inter], [i_direct, i_inter])]
            se = np.sqrt(grad @ cov @ grad)
            assert abs(got - planted) <= 3.0 * se

        assert mcfadden_r2(fit) > 0.2
        assert time.perf_counter() - start < 60.0


def test_criterion_7_orthogonality_and_vif(derived):
    with criterion(7, "orthogonalized scores uncorrelated with complexity; VIF shrinks"):
        for year, vec in derived.pspi_orth.items():
            for orth in (vec, derived.pepi_orth[year]):
                joined = pd.concat([orth.values.rename("o"),
                                    derived.pci[year].values.rename("c")], axis=1).dropna()
                corr = np.corrcoef(joined["o"], joined["c"])[0, 1]
                assert abs(corr) <= 1e-9
        panel = derived.entry_panel
        cols_o = ["density_lag", "log_rca_lag", "pci_lag", "pspi_orth_lag", "pepi_orth_lag"]
        cols_r = ["density_lag", "log_rca_lag", "pci_lag", "pspi_raw_lag", "pepi_raw_lag"]
        v_o = vif(panel[cols_o].to_numpy(), cols_o)
        v_r = vif(panel[cols_r].to_numpy(), cols_r)
        assert v_o["pspi_orth_lag"] <= v_r["pspi_raw_lag"]
        assert v_o["pepi_orth_lag"] <= v_r["pepi_raw_lag"]


def test_criterion_8_auc_equivalence():
    with criterion(8, "rank-statistic AUC equals brute-force pair counting"):
        rng = np.random.default_rng(2024)
        for _ in range(1000):
            n = int(rng.integers(4, 40))
            scores = np.round(rng.random(n), 1)  # heavy ties
            labels = rng.integers(0, 2, n)
            if labels.min() == labels.max():
                continue
            _, auc = roc_auc(scores, labels)
            assert abs(auc - auc_pair_counting(scores, labels)) <= 1e-12


def test_criterion_9_anova_identity(derived, synth_data):
    with criterion(9, "variance decomposition adds up; planted case gives eta2 = 1"):
        rng = np.random.default_rng(99)
        for _ in range(50):
            values = rng.normal(size=60)
            groups = rng.choice(list("abcd"), size=60)
            res = anova_decomposition(values, groups)
            gap = abs(res.ss_between + res.ss_within - res.ss_total)
            assert gap / res.ss_total <= 1e-9
        categories = dict(zip(synth_data.product_categories["product"],
                              synth_data.product_categories["category"]))
        t_p = derived.pspi[2022].values.dropna()
        res = anova_decomposition(t_p.to_numpy(),
                                  np.array([categories[p] for p in t_p.index]))
        assert res.ss_between + res.ss_within == pytest.approx(res.ss_total, rel=1e-9)
        planted = anova_decomposition([1.0, 1.0, 4.0, 4.0, 7.0, 7.0],
                                      ["a", "a", "b", "b", "c", "c"])
        assert planted.eta2 == pytest.approx(1.0)


def test_criterion_10_determinism(tmp_path):
    with criterion(10, "two full runs produce byte-identical artifact trees"):
        write_dataset(generate_dataset(), tmp_path)
        times = []
        for run in ("run_a", "run_b"):
            cfg = load_config(tmp_path / "config.json",
                              out_override=tmp_path / run)
            start = time.perf_counter()
            run_pipeline(cfg)
            times.append(time.perf_counter() - start)
        tree_a = sorted((tmp_path / "run_a").rglob("*"))
        rel_a = [p.relative_to(tmp_path / "run_a") for p in tree_a if p.is_file()]
        rel_b = [p.relative_to(tmp_path / "run_b")
                 for p in sorted((tmp_path / "run_b").rglob("*")) if p.is_file()]
        assert rel_a == rel_b
        for rel in rel_a:
            a = (tmp_path / "run_a" / rel).read_bytes()
            b = (tmp_path / "run_b" / rel).read_bytes()
            assert a == b, f"{rel} differs between runs"
        assert max(times) < 60.0
