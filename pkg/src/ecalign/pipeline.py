"""Stage orchestration: dependency order, content-hash caching, manifests.

Every stage reads CSV artifacts written by its upstream stages and writes
its own under ``out_dir/<stage>/`` together with a manifest recording the
parameter values and the content hashes of its inputs and outputs.  A
stage is skipped when nothing it depends on has changed and its outputs
still match the recorded hashes; any mismatch forces a recompute.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path

import numpy as np
import pandas as pd

from . import report as report_mod
from .complexity import complexity_scores
from .config import PipelineConfig
from .econometrics import (
    INTERACTIONS,
    MAIN_REGRESSORS,
    fit_fe_logit,
    marginal_effect_grid,
    mcfadden_r2,
    orthogonalize,
    predicted_probabilities,
    relatedness_threshold,
    roc_auc,
    vif,
)
from .entry import build_entry_panel
from .errors import EcalignError, StageDependencyError
from .ingest import (
    TradePanel,
    apply_sample_filters,
    ensure_coverage,
    load_income_groups,
    load_indicators,
    load_product_categories,
    load_trade_flows,
)
from .relatedness import RelatednessBundle, compute_relatedness
from .specialization import SpecializationMatrix, compute_rca, save_specializations
from .sustainability import ScoreVector, product_score, zscore_country_indicator
from .util import sha256_file, write_csv, read_csv

log = logging.getLogger(__name__)

VERSION = "0.1.0"

STAGE_ORDER = [
    "ingest", "specialization", "relatedness", "complexity", "sustainability",
    "opportunities", "entry", "econometrics", "report",
]

STAGE_DEPS = {
    "ingest": [],
    "specialization": ["ingest"],
    "relatedness": ["specialization"],
    "complexity": ["specialization"],
    "sustainability": ["ingest", "specialization"],
    "opportunities": ["ingest", "relatedness", "complexity", "sustainability"],
    "entry": ["ingest", "specialization", "relatedness", "complexity", "sustainability"],
    "econometrics": ["entry"],
    "report": ["ingest", "complexity", "sustainability", "opportunities", "econometrics"],
}

EPSILON_SENSITIVITY = (1e-4, 1e-6, 1e-8)


# ----------------------------------------------------------------------
# artifact readers shared by the stages
# ----------------------------------------------------------------------

def stage_dir(cfg: PipelineConfig, stage: str) -> Path:
    return Path(cfg.out_dir) / stage


def _read_sample(cfg) -> dict:
    return json.loads((stage_dir(cfg, "ingest") / "sample.json").read_text())


def _read_trade_panel(cfg) -> TradePanel:
    sample = _read_sample(cfg)
    frame = read_csv(stage_dir(cfg, "ingest") / "trade_panel.csv",
                        dtype={"product": str})
    years = tuple(sample["years"])
    countries = tuple(sample["countries"])
    products = tuple(sample["products"])
    values = np.zeros((len(years), len(countries), len(products)))
    ti = frame["year"].map({y: i for i, y in enumerate(years)}).to_numpy()
    ci = frame["exporter"].map({c: i for i, c in enumerate(countries)}).to_numpy()
    pi = frame["product"].map({p: i for i, p in enumerate(products)}).to_numpy()
    values[ti, ci, pi] = frame["value"].to_numpy(dtype=float)
    return TradePanel(years, countries, products, values)


def _read_specs(cfg) -> dict[int, SpecializationMatrix]:
    sample = _read_sample(cfg)
    countries = tuple(sample["countries"])
    frame = read_csv(stage_dir(cfg, "specialization") / "specialization.csv",
                        dtype={"country": str, "product": str})
    out = {}
    for year, sub in frame.groupby("year"):
        products = tuple(sorted(sub["product"].unique()))
        rca = np.zeros((len(countries), len(products)))
        ci = sub["country"].map({c: i for i, c in enumerate(countries)}).to_numpy()
        pi = sub["product"].map({p: i for i, p in enumerate(products)}).to_numpy()
        rca[ci, pi] = sub["rca"].to_numpy(dtype=float)
        spec = SpecializationMatrix(int(year), countries, products, rca,
                                    (rca >= 1.0).astype(np.int8))
        out[int(year)] = spec
    return out


def _read_relatedness(cfg, specs) -> dict[int, RelatednessBundle]:
    dens = read_csv(stage_dir(cfg, "relatedness") / "density.csv",
                       dtype={"country": str, "product": str})
    prox = read_csv(stage_dir(cfg, "relatedness") / "proximity.csv",
                       dtype={"p": str, "p2": str})
    out = {}
    for year, spec in specs.items():
        products = spec.products
        ppos = {p: i for i, p in enumerate(products)}
        cpos = {c: i for i, c in enumerate(spec.countries)}
        d = dens[dens["year"] == year]
        density = np.zeros((len(spec.countries), len(products)))
        density[d["country"].map(cpos), d["product"].map(ppos)] = d["omega"].to_numpy()
        x = prox[prox["year"] == year]
        phi = np.zeros((len(products), len(products)))
        phi[x["p"].map(ppos), x["p2"].map(ppos)] = x["phi"].to_numpy()
        out[year] = RelatednessBundle(
            year=year, countries=spec.countries, products=products,
            proximity=phi, density=density,
            ubiquity=spec.ubiquity(), diversity=spec.diversity(),
        )
    return out


def _read_scores(path: Path, value_cols: list[str], kind: str,
                 standardized: bool = False) -> dict[str, dict[int, ScoreVector]]:
    """Score CSVs keyed (year, entity) into per-year ScoreVectors per column."""
    entity = "country" if kind == "country" else "product"
    frame = read_csv(path, dtype={entity: str})
    out = {col: {} for col in value_cols}
    for year, sub in frame.groupby("year"):
        for col in value_cols:
            series = pd.Series(sub[col].to_numpy(), index=sub[entity].to_numpy())
            out[col][int(year)] = ScoreVector(
                name=col, year=int(year), entity_kind=kind,
                values=series, standardized=standardized,
            )
    return out


def _read_complexity(cfg):
    frame = read_csv(stage_dir(cfg, "complexity") / "complexity.csv",
                        dtype={"entity": str})
    eci, pci = {}, {}
    for (year, score), sub in frame.groupby(["year", "score"]):
        vec = ScoreVector(
            name=score, year=int(year),
            entity_kind="country" if score == "eci" else "product",
            values=pd.Series(sub["value"].to_numpy(), index=sub["entity"].to_numpy()),
            standardized=True,
        )
        (eci if score == "eci" else pci)[int(year)] = vec
    return eci, pci


def _read_income_groups(cfg) -> dict[str, str]:
    frame = read_csv(stage_dir(cfg, "ingest") / "income_groups.csv", dtype=str)
    return dict(zip(frame["country"], frame["group"]))


# ----------------------------------------------------------------------
# stage bodies
# ----------------------------------------------------------------------

def _run_ingest(cfg: PipelineConfig, out: Path) -> None:
    panel = load_trade_flows(cfg.trade_path, cfg.schema or None)
    indicators = load_indicators(cfg.indicators_path)
    filtered = apply_sample_filters(panel, indicators, cfg.filters)
    income = load_income_groups(cfg.income_groups_path)
    categories = load_product_categories(cfg.product_categories_path)
    ensure_coverage(income, filtered.countries, "income classification")
    ensure_coverage(categories, filtered.products, "product category")

    filtered.save(out / "trade_panel.csv")
    keep = indicators["country"].isin(filtered.countries) & indicators["year"].isin(filtered.years)
    write_csv(indicators[keep].sort_values(["name", "country", "year"]), out / "indicators.csv")
    write_csv(pd.DataFrame(
        {"country": list(filtered.countries),
         "group": [income[c] for c in filtered.countries]}
    ), out / "income_groups.csv")
    write_csv(pd.DataFrame(
        {"product": list(filtered.products),
         "category": [categories[p] for p in filtered.products]}
    ), out / "product_categories.csv")
    (out / "sample.json").write_text(json.dumps(
        {
            "years": list(filtered.years),
            "countries": list(filtered.countries),
            "products": list(filtered.products),
            "filters": {
                "min_total_exports": cfg.filters.min_total_exports,
                "min_population": cfg.filters.min_population,
                "min_product_world_exports": cfg.filters.min_product_world_exports,
                "reference_year": cfg.filters.reference_year,
            },
        },
        indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _run_specialization(cfg: PipelineConfig, out: Path) -> None:
    panel = _read_trade_panel(cfg)
    specs = [compute_rca(panel, year) for year in panel.years]
    save_specializations(specs, out / "specialization.csv")


def _run_relatedness(cfg: PipelineConfig, out: Path) -> None:
    specs = _read_specs(cfg)
    bundles = [compute_relatedness(specs[y]) for y in sorted(specs)]
    write_csv(pd.concat([b.proximity_frame() for b in bundles], ignore_index=True), out / "proximity.csv")
    write_csv(pd.concat([b.density_frame() for b in bundles], ignore_index=True), out / "density.csv")


def _run_complexity(cfg: PipelineConfig, out: Path) -> None:
    specs = _read_specs(cfg)
    rows, diags = [], []
    for year in sorted(specs):
        scores = complexity_scores(specs[year], gap_tol=cfg.tolerances.eigen_gap,
                                   residual_tol=cfg.tolerances.eigen_residual)
        rows.append(pd.DataFrame({"year": year, "score": "eci",
                                  "entity": scores.eci.index, "value": scores.eci.to_numpy()}))
        rows.append(pd.DataFrame({"year": year, "score": "pci",
                                  "entity": scores.pci.index, "value": scores.pci.to_numpy()}))
        diags.append({"year": year, "eci_gap": scores.eci_gap, "pci_gap": scores.pci_gap,
                      "n_countries": len(scores.eci), "n_products": len(scores.pci)})
    write_csv(pd.concat(rows, ignore_index=True), out / "complexity.csv")
    write_csv(pd.DataFrame(diags), out / "diagnostics.csv")


def _run_sustainability(cfg: PipelineConfig, out: Path) -> None:
    panel = _read_trade_panel(cfg)
    specs = _read_specs(cfg)
    indicators = read_csv(stage_dir(cfg, "ingest") / "indicators.csv")
    country_rows, product_rows = [], []
    for year in panel.years:
        spec = specs[year]
        by_name = {}
        for name in ("SPI", "EPI"):
            vec = zscore_country_indicator(indicators, name, year, panel.countries)
            by_name[name] = vec
            country_rows.append(pd.DataFrame(
                {"year": year, "score": name.lower(), "country": vec.values.index,
                 "value": vec.values.to_numpy()}))
        pspi = product_score(spec, panel, by_name["SPI"])
        pepi = product_score(spec, panel, by_name["EPI"])
        product_rows.append(pd.DataFrame(
            {"year": year, "product": list(spec.products),
             "pspi": pspi.values.to_numpy(), "pepi": pepi.values.to_numpy()}))
    write_csv(pd.concat(country_rows, ignore_index=True), out / "country_scores.csv")
    write_csv(pd.concat(product_rows, ignore_index=True), out / "product_scores.csv")


def _eci_quartiles(eci: ScoreVector) -> dict[str, int]:
    """Within-year quartile (1 = least complex) by rank order."""
    ranked = eci.values.dropna().sort_values(kind="mergesort")
    n = len(ranked)
    return {c: 1 + (4 * i) // n for i, c in enumerate(ranked.index)}


def _run_opportunities(cfg: PipelineConfig, out: Path) -> None:
    from .opportunities import alignment_slope, build_opportunity_set

    specs = _read_specs(cfg)
    bundles = _read_relatedness(cfg, specs)
    eci, pci = _read_complexity(cfg)
    scores = _read_scores(stage_dir(cfg, "sustainability") / "product_scores.csv",
                          ["pspi", "pepi"], "product")
    income = _read_income_groups(cfg)

    set_rows, slope_rows = [], []
    for year in sorted(specs):
        spec = specs[year]
        quartile = _eci_quartiles(eci[year])
        for c_idx, country in enumerate(spec.countries):
            opps = build_opportunity_set(
                country, year, spec.products,
                bundles[year].density[c_idx], spec.m[c_idx], cfg.k)
            for rank, (code, dens) in enumerate(opps.products, start=1):
                set_rows.append((country, year, rank, code, dens))
            for dim, col in (("social", "pspi"), ("environmental", "pepi")):
                sl = alignment_slope(opps, pci[year], scores[col][year], dim)
                slope_rows.append(
                    (country, year, dim, sl.beta, sl.r2, sl.n,
                     income.get(country, ""), quartile.get(country, np.nan)))

    write_csv(pd.DataFrame(set_rows, columns=["country", "year", "rank", "product", "density"]), out / "opportunity_sets.csv")
    write_csv(pd.DataFrame(
        slope_rows,
        columns=["country", "year", "dimension", "beta", "r2", "n",
                 "income_group", "eci_quartile"],
    ), out / "alignment_slopes.csv")


def _run_entry(cfg: PipelineConfig, out: Path) -> None:
    specs = _read_specs(cfg)
    bundles = _read_relatedness(cfg, specs)
    _, pci = _read_complexity(cfg)
    scores = _read_scores(stage_dir(cfg, "sustainability") / "product_scores.csv",
                          ["pspi", "pepi"], "product")
    income = _read_income_groups(cfg)

    pspi_orth, pepi_orth, orth_rows = {}, {}, []
    for year in sorted(specs):
        if year not in pci:
            continue
        pspi_orth[year] = orthogonalize(scores["pspi"][year], pci[year])
        pepi_orth[year] = orthogonalize(scores["pepi"][year], pci[year])
        orth_rows.append(pd.DataFrame(
            {"year": year, "product": pspi_orth[year].values.index,
             "pspi_orth": pspi_orth[year].values.to_numpy(),
             "pepi_orth": pepi_orth[year].values.reindex(
                 pspi_orth[year].values.index).to_numpy()}))
    write_csv(pd.concat(orth_rows, ignore_index=True), out / "orthogonalized_scores.csv")

    panel = build_entry_panel(
        specs, bundles, pci, pspi_orth, pepi_orth, income,
        pspi_raw=scores["pspi"], pepi_raw=scores["pepi"],
        m=cfg.m, epsilon=cfg.epsilon,
    )
    write_csv(panel, out / "entry_panel.csv")


def _run_econometrics(cfg: PipelineConfig, out: Path) -> None:
    panel = read_csv(stage_dir(cfg, "entry") / "entry_panel.csv",
                        dtype={"country": str, "product": str})
    tol = cfg.tolerances
    fits = [
        fit_fe_logit(panel, model="main", sample="ALL",
                     gradient_tol=tol.gradient, max_iter=tol.max_iter, cluster_by="country"),
        fit_fe_logit(panel, model="interactions", sample="ALL",
                     gradient_tol=tol.gradient, max_iter=tol.max_iter, cluster_by="country"),
        fit_fe_logit(panel, model="interactions", sample="HUM",
                     gradient_tol=tol.gradient, max_iter=tol.max_iter, cluster_by="country"),
        fit_fe_logit(panel, model="interactions", sample="LML",
                     gradient_tol=tol.gradient, max_iter=tol.max_iter, cluster_by="country"),
    ]

    coef_rows, stat_rows, roc_rows, roc_summary = [], [], [], []
    me_rows, grid_rows = [], []
    omega_grid = np.round(np.linspace(0.0, 1.0, 50), 6)
    for fit in fits:
        for i, term in enumerate(fit.names):
            coef_rows.append((fit.sample, fit.model, term, fit.coef[i], fit.se[i],
                              fit.se_clustered[i], fit.z[i], fit.p[i]))
        probs = predicted_probabilities(fit, panel)
        labels = panel.loc[fit.row_index, "entry"].to_numpy()
        curve, auc = roc_auc(probs, labels)
        curve.insert(0, "model", fit.model)
        curve.insert(0, "sample", fit.sample)
        roc_rows.append(curve)
        roc_summary.append((fit.sample, fit.model, auc,
                            int(labels.sum()), int(len(labels) - labels.sum())))

        thr_pci = thr_pepi = np.nan
        if fit.model == "interactions":
            thr_pci = relatedness_threshold(fit, "PCI")
            thr_pepi = relatedness_threshold(fit, "PEPI")
            rows = panel.loc[fit.row_index]
            means = rows[fit.names].mean()
            log_rca_med = rows["log_rca_lag"].median()
            for variable in ("PCI", "PSPI", "PEPI"):
                me = marginal_effect_grid(fit, variable, omega_grid)
                me.insert(0, "sample", fit.sample)
                me_rows.append(me)
                direct = {"PCI": "pci_lag", "PSPI": "pspi_orth_lag",
                          "PEPI": "pepi_orth_lag"}[variable]
                for val in np.round(np.linspace(-2.0, 2.0, 21), 6):
                    x = means.copy()
                    x["log_rca_lag"] = log_rca_med
                    x[direct] = val
                    for om in np.round(np.linspace(0.0, 1.0, 21), 6):
                        x["density_lag"] = om
                        x["dens_x_pci"] = om * x["pci_lag"]
                        x["dens_x_pspi"] = om * x["pspi_orth_lag"]
                        x["dens_x_pepi"] = om * x["pepi_orth_lag"]
                        eta = float(np.dot(x[fit.names].to_numpy(dtype=float), fit.coef))
                        grid_rows.append((fit.sample, variable, om, val,
                                          1.0 / (1.0 + np.exp(-eta))))

        stat_rows.append(
            (fit.sample, fit.model, fit.n_obs, fit.n_groups, fit.n_groups_dropped,
             fit.loglik, fit.loglik_null, fit.loglik_null_fe,
             mcfadden_r2(fit, "intercept"), mcfadden_r2(fit, "fe"),
             auc, fit.n_iter, fit.converged, fit.quasi_separation, thr_pci, thr_pepi))

    write_csv(pd.DataFrame(coef_rows, columns=["sample", "model", "term", "coef", "se",
                                     "se_clustered", "z", "p"]), out / "coefficients.csv")
    write_csv(pd.DataFrame(stat_rows, columns=[
        "sample", "model", "n_obs", "n_groups", "n_groups_dropped",
        "loglik", "loglik_null", "loglik_null_fe", "mcfadden", "mcfadden_fe",
        "auc", "n_iter", "converged", "quasi_separation",
        "threshold_pci", "threshold_pepi"]), out / "fit_stats.csv")
    write_csv(pd.concat(roc_rows, ignore_index=True), out / "roc_curves.csv")
    write_csv(pd.DataFrame(roc_summary, columns=["sample", "model", "auc", "n_pos", "n_neg"]), out / "roc_summary.csv")
    write_csv(pd.concat(me_rows, ignore_index=True), out / "marginal_effects.csv")
    write_csv(pd.DataFrame(grid_rows, columns=["sample", "variable", "omega", "value",
                                     "probability"]), out / "probability_grid.csv")

    (out / "coefficients_table.txt").write_text(
        _coefficients_table(fits), encoding="utf-8")

    # collinearity diagnostics for both regressor sets, fixed effects excluded
    vif_rows = []
    orth_X = panel[MAIN_REGRESSORS + INTERACTIONS]
    raw = panel[["density_lag", "log_rca_lag", "pci_lag", "pspi_raw_lag", "pepi_raw_lag"]].copy()
    raw["dens_x_pci"] = raw["density_lag"] * raw["pci_lag"]
    raw["dens_x_pspi"] = raw["density_lag"] * raw["pspi_raw_lag"]
    raw["dens_x_pepi"] = raw["density_lag"] * raw["pepi_raw_lag"]
    for set_name, X in (("orthogonalized", orth_X), ("raw", raw)):
        v = vif(X.to_numpy(), X.columns)
        for term, value in v.items():
            vif_rows.append((set_name, term, value))
    write_csv(pd.DataFrame(vif_rows, columns=["set", "term", "vif"]), out / "vif.csv")

    # robustness of the log-advantage floor
    sens_rows = []
    for eps in EPSILON_SENSITIVITY:
        alt = panel.copy()
        alt["log_rca_lag"] = np.log(np.maximum(alt["rca_lag"].to_numpy(), eps))
        fit = fit_fe_logit(alt, model="interactions", sample="ALL",
                           gradient_tol=tol.gradient, max_iter=tol.max_iter)
        for i, term in enumerate(fit.names):
            sens_rows.append((eps, term, fit.coef[i], fit.se[i]))
    write_csv(pd.DataFrame(sens_rows, columns=["epsilon", "term", "coef", "se"]), out / "sensitivity_epsilon.csv")


def _stars(p: float) -> str:
    return "***" if p < 0.01 else "**" if p < 0.05 else "*" if p < 0.1 else ""


def _coefficients_table(fits) -> str:
    """Four-column text table of the entry model estimates."""
    headers = ["(1) ALL", "(2) ALL", "(3) HUM", "(4) LML"]
    order = MAIN_REGRESSORS + INTERACTIONS
    pretty = {
        "density_lag": "density (t-1)",
        "log_rca_lag": "log advantage (t-1)",
        "pci_lag": "complexity (t-1)",
        "pspi_orth_lag": "social score# (t-1)",
        "pepi_orth_lag": "environmental score# (t-1)",
        "dens_x_pci": "density x complexity",
        "dens_x_pspi": "density x social score#",
        "dens_x_pepi": "density x environmental score#",
    }
    width = 18
    name_w = max(len(v) for v in pretty.values()) + 2
    lines = []
    lines.append("Sustained product entry: fixed-effects logit estimates")
    lines.append("=" * (name_w + 4 * width))
    lines.append(" " * name_w + "".join(h.rjust(width) for h in headers))
    lines.append("-" * (name_w + 4 * width))
    for term in order:
        cells = []
        for fit in fits:
            if term in fit.names:
                i = fit.names.index(term)
                cells.append(f"{fit.coef[i]:.4f}{_stars(fit.p[i])}")
            else:
                cells.append("")
        lines.append(pretty[term].ljust(name_w) + "".join(c.rjust(width) for c in cells))
        se_cells = []
        for fit in fits:
            if term in fit.names:
                i = fit.names.index(term)
                se_cells.append(f"({fit.se[i]:.4f})")
            else:
                se_cells.append("")
        lines.append(" " * name_w + "".join(c.rjust(width) for c in se_cells))
    lines.append("-" * (name_w + 4 * width))
    for label, getter in (
        ("Observations", lambda f: f"{f.n_obs}"),
        ("Country-year groups", lambda f: f"{f.n_groups}"),
        ("Groups dropped", lambda f: f"{f.n_groups_dropped}"),
        ("Log-likelihood", lambda f: f"{f.loglik:.2f}"),
        ("McFadden R2", lambda f: f"{mcfadden_r2(f):.4f}"),
    ):
        lines.append(label.ljust(name_w)
                     + "".join(getter(f).rjust(width) for f in fits))
    lines.append("=" * (name_w + 4 * width))
    lines.append("# orthogonalized against complexity within each year.")
    lines.append("Standard errors in parentheses; * p<0.1, ** p<0.05, *** p<0.01.")
    lines.append("Samples: ALL countries, H & UM income (HUM), LM & L income (LML);")
    lines.append("column (1) omits the density interactions.")
    return "\n".join(lines) + "\n"


STAGE_BODIES = {
    "ingest": _run_ingest,
    "specialization": _run_specialization,
    "relatedness": _run_relatedness,
    "complexity": _run_complexity,
    "sustainability": _run_sustainability,
    "opportunities": _run_opportunities,
    "entry": _run_entry,
    "econometrics": _run_econometrics,
    "report": report_mod.run_report,
}


def _stage_params(cfg: PipelineConfig, stage: str) -> dict:
    f, t = cfg.filters, cfg.tolerances
    return {
        "ingest": {"filters": [f.min_total_exports, f.min_population,
                               f.min_product_world_exports, f.reference_year],
                   "schema": sorted(cfg.schema.items())},
        "specialization": {},
        "relatedness": {},
        "complexity": {"eigen_gap": t.eigen_gap, "eigen_residual": t.eigen_residual},
        "sustainability": {},
        "opportunities": {"k": cfg.k},
        "entry": {"m": cfg.m, "epsilon": cfg.epsilon},
        "econometrics": {"gradient": t.gradient, "max_iter": t.max_iter,
                         "epsilon_sensitivity": list(EPSILON_SENSITIVITY)},
        "report": {"analysis_year": cfg.analysis_year, "k": cfg.k},
    }[stage]


def _stage_inputs(cfg: PipelineConfig, stage: str) -> list[Path]:
    d = lambda s: stage_dir(cfg, s)
    inputs = {
        "ingest": [cfg.trade_path, cfg.indicators_path,
                   cfg.income_groups_path, cfg.product_categories_path],
        "specialization": [d("ingest") / "trade_panel.csv", d("ingest") / "sample.json"],
        "relatedness": [d("specialization") / "specialization.csv",
                        d("ingest") / "sample.json"],
        "complexity": [d("specialization") / "specialization.csv",
                       d("ingest") / "sample.json"],
        "sustainability": [d("ingest") / "trade_panel.csv", d("ingest") / "sample.json",
                           d("ingest") / "indicators.csv",
                           d("specialization") / "specialization.csv"],
        "opportunities": [d("specialization") / "specialization.csv",
                          d("relatedness") / "density.csv",
                          d("relatedness") / "proximity.csv",
                          d("complexity") / "complexity.csv",
                          d("sustainability") / "product_scores.csv",
                          d("ingest") / "income_groups.csv", d("ingest") / "sample.json"],
        "entry": [d("specialization") / "specialization.csv",
                  d("relatedness") / "density.csv", d("relatedness") / "proximity.csv",
                  d("complexity") / "complexity.csv",
                  d("sustainability") / "product_scores.csv",
                  d("ingest") / "income_groups.csv", d("ingest") / "sample.json"],
        "econometrics": [d("entry") / "entry_panel.csv"],
        "report": [d("ingest") / "income_groups.csv",
                   d("ingest") / "product_categories.csv",
                   d("complexity") / "complexity.csv",
                   d("sustainability") / "product_scores.csv",
                   d("opportunities") / "alignment_slopes.csv",
                   d("opportunities") / "opportunity_sets.csv",
                   d("econometrics") / "coefficients.csv",
                   d("econometrics") / "coefficients_table.txt",
                   d("econometrics") / "fit_stats.csv",
                   d("econometrics") / "marginal_effects.csv",
                   d("econometrics") / "probability_grid.csv",
                   d("econometrics") / "roc_curves.csv",
                   d("econometrics") / "roc_summary.csv",
                   d("econometrics") / "vif.csv"],
    }
    return inputs[stage]


def _manifest_path(cfg: PipelineConfig, stage: str) -> Path:
    return stage_dir(cfg, stage) / "manifest.json"


def _input_key(cfg: PipelineConfig, path: Path) -> str:
    """Manifest key for an input: artifact paths are relative to out_dir
    so identical runs into different directories stay byte-identical."""
    try:
        return str(Path(path).relative_to(cfg.out_dir))
    except ValueError:
        return str(path)


def _hash_inputs(cfg: PipelineConfig, stage: str) -> dict[str, str]:
    return {_input_key(cfg, p): sha256_file(p)
            for p in _stage_inputs(cfg, stage) if p.exists()}


def _hash_outputs(out: Path) -> dict[str, str]:
    files = sorted(p for p in out.rglob("*") if p.is_file() and p.name != "manifest.json")
    return {str(p.relative_to(out)): sha256_file(p) for p in files}


def _stage_is_fresh(cfg: PipelineConfig, stage: str) -> bool:
    mpath = _manifest_path(cfg, stage)
    if not mpath.exists():
        return False
    try:
        manifest = json.loads(mpath.read_text())
    except json.JSONDecodeError:
        return False
    if manifest.get("params") != json.loads(json.dumps(_stage_params(cfg, stage))):
        return False
    if manifest.get("inputs") != _hash_inputs(cfg, stage):
        return False
    out = stage_dir(cfg, stage)
    for rel, digest in manifest.get("outputs", {}).items():
        f = out / rel
        if not f.exists() or sha256_file(f) != digest:
            return False
    return bool(manifest.get("outputs"))


def check_dependencies(cfg: PipelineConfig, stage: str) -> None:
    for path in _stage_inputs(cfg, stage):
        if not path.exists():
            for dep in STAGE_DEPS[stage]:
                if str(stage_dir(cfg, dep)) in str(path):
                    raise StageDependencyError(
                        f"{stage} needs {path.name} — run the {dep} stage first")
            raise StageDependencyError(f"{stage} input missing: {path}")


def run_pipeline(cfg: PipelineConfig, stages: list[str] | None = None) -> dict:
    """Run the requested stages (all by default) in dependency order.

    Returns the overall artifact manifest, which is also written to
    ``out_dir/manifest.json``.  Fresh stages (inputs, parameters and
    outputs all matching their recorded hashes) are skipped.
    """
    if stages is None:
        stages = cfg.stages or STAGE_ORDER
    unknown = [s for s in stages if s not in STAGE_ORDER]
    if unknown:
        raise ValueError(f"unknown stages: {unknown}; choose from {STAGE_ORDER}")
    stages = [s for s in STAGE_ORDER if s in stages]

    cfg.out_dir = Path(cfg.out_dir)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)

    for stage in stages:
        check_dependencies(cfg, stage)
        if _stage_is_fresh(cfg, stage):
            log.info("stage %s is up to date, skipping", stage)
            continue
        log.info("running stage %s", stage)
        out = stage_dir(cfg, stage)
        out.mkdir(parents=True, exist_ok=True)
        try:
            STAGE_BODIES[stage](cfg, out)
        except Exception as exc:
            raise EcalignError(f"stage {stage} failed: {exc}") from exc
        manifest = {
            "stage": stage,
            "version": VERSION,
            "params": _stage_params(cfg, stage),
            "inputs": _hash_inputs(cfg, stage),
            "outputs": _hash_outputs(out),
        }
        _manifest_path(cfg, stage).write_text(
            json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")

    overall = {}
    for stage in STAGE_ORDER:
        mpath = _manifest_path(cfg, stage)
        if mpath.exists():
            overall[stage] = json.loads(mpath.read_text())["outputs"]
    text = json.dumps(overall, indent=2, sort_keys=True) + "\n"
    root_manifest = cfg.out_dir / "manifest.json"
    if not root_manifest.exists() or root_manifest.read_text() != text:
        root_manifest.write_text(text, encoding="utf-8")
    return overall
