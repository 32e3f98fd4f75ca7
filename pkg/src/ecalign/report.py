"""Report bundle: final tables, plot-ready data files and rendered figures.

Collects the upstream artifacts into one directory: the coefficient
table, the alignment-slope distributions with rank-sum test results, the
per-country opportunity scatter data, the marginal-effect and predicted
probability grids, the category variance decomposition, the ROC data and
the collinearity tables.  Each data file is also rendered to a PNG so the
bundle can be eyeballed without further tooling.
"""

from __future__ import annotations

import shutil
from itertools import combinations
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np
import pandas as pd

from .errors import StageDependencyError
from .opportunities import anova_decomposition, wilcoxon_rank_sum
from .util import write_csv, read_csv

INCOME_ORDER = ["H", "UM", "LM", "L"]
QUARTILE_ORDER = [1, 2, 3, 4]
PNG_META = {"metadata": {"Software": "ecalign"}, "dpi": 150}


def _need(path: Path, stage: str) -> Path:
    if not path.exists():
        raise StageDependencyError(f"missing {path.name} — run the {stage} stage first")
    return path


def run_report(cfg, out: Path) -> None:
    art = Path(cfg.out_dir)
    year = cfg.analysis_year

    slopes = read_csv(_need(art / "opportunities" / "alignment_slopes.csv",
                               "opportunities"))
    sets = read_csv(_need(art / "opportunities" / "opportunity_sets.csv",
                             "opportunities"), dtype={"product": str})
    complexity = read_csv(_need(art / "complexity" / "complexity.csv", "complexity"),
                             dtype={"entity": str})
    product_scores = read_csv(_need(art / "sustainability" / "product_scores.csv",
                                       "sustainability"), dtype={"product": str})
    categories = read_csv(_need(art / "ingest" / "product_categories.csv", "ingest"),
                             dtype=str)
    income = read_csv(_need(art / "ingest" / "income_groups.csv", "ingest"), dtype=str)
    for name in ("coefficients_table.txt", "coefficients.csv", "fit_stats.csv",
                 "marginal_effects.csv", "probability_grid.csv", "roc_curves.csv",
                 "roc_summary.csv", "vif.csv"):
        _need(art / "econometrics" / name, "econometrics")

    figdir = out / "figures"
    figdir.mkdir(parents=True, exist_ok=True)

    # (a) coefficient table and (d) effect grids travel as-is
    for name in ("coefficients_table.txt", "coefficients.csv",
                 "marginal_effects.csv", "probability_grid.csv"):
        shutil.copyfile(art / "econometrics" / name, out / name)

    # (b) slope distributions plus rank-sum group comparisons
    write_csv(slopes, out / "alignment_slopes.csv")
    year_slopes = slopes[slopes["year"] == year]
    if year_slopes.empty:
        raise ValueError(f"no alignment slopes for analysis year {year}")
    write_csv(_wilcoxon_tables(year_slopes, year), out / "wilcoxon_tests.csv")

    # (c) opportunity scatter data for the analysis year
    scatter = _opportunity_scatter(sets, complexity, product_scores, categories,
                                   income, year)
    write_csv(scatter, out / "opportunity_scatter.csv")

    # (e) variance decomposition of the product scores by category
    anova = _anova_table(complexity, product_scores, categories, year)
    write_csv(anova, out / "anova.csv")
    (out / "anova_table.txt").write_text(_anova_text(anova, year), encoding="utf-8")

    # (f) ROC points and AUC
    shutil.copyfile(art / "econometrics" / "roc_curves.csv", out / "roc_curves.csv")
    shutil.copyfile(art / "econometrics" / "roc_summary.csv", out / "roc_summary.csv")

    # (g) collinearity tables for both regressor sets
    vif = read_csv(art / "econometrics" / "vif.csv")
    write_csv(vif[vif["set"] == "orthogonalized"].drop(columns="set"), out / "vif_orthogonalized.csv")
    write_csv(vif[vif["set"] == "raw"].drop(columns="set"), out / "vif_raw.csv")

    _figure_slopes(year_slopes, year, figdir / "alignment_slopes.png")
    _figure_scatter(scatter, year, figdir / "opportunity_scatter.png")
    _figure_marginal_effects(read_csv(out / "marginal_effects.csv"),
                             figdir / "marginal_effects.png")
    _figure_probability_grid(read_csv(out / "probability_grid.csv"),
                             figdir / "probability_heatmaps.png")
    _figure_roc(read_csv(out / "roc_curves.csv"), read_csv(out / "roc_summary.csv"),
                figdir / "roc_curves.png")


def emit_report(cfg) -> Path:
    """Build the report bundle from an existing artifact directory."""
    out = Path(cfg.out_dir) / "report"
    out.mkdir(parents=True, exist_ok=True)
    run_report(cfg, out)
    return out


# ----------------------------------------------------------------------
# tables
# ----------------------------------------------------------------------

def _wilcoxon_tables(year_slopes: pd.DataFrame, year: int) -> pd.DataFrame:
    rows = []
    for dimension, sub in year_slopes.groupby("dimension"):
        for grouping, order in (("income_group", INCOME_ORDER),
                                ("eci_quartile", QUARTILE_ORDER)):
            values = {g: sub[sub[grouping] == g]["beta"].to_numpy() for g in order}
            for a, b in combinations(order, 2):
                if len(values[a]) == 0 or len(values[b]) == 0:
                    continue
                res = wilcoxon_rank_sum(values[a], values[b])
                rows.append((year, dimension, grouping, a, b,
                             len(values[a]), len(values[b]),
                             res.statistic, res.p_value, res.method, res.degenerate))
    return pd.DataFrame(rows, columns=[
        "year", "dimension", "grouping", "group_a", "group_b",
        "n_a", "n_b", "statistic", "p_value", "method", "degenerate"])


def _scores_for_year(complexity: pd.DataFrame, product_scores: pd.DataFrame,
                     year: int) -> pd.DataFrame:
    pci = complexity[(complexity["year"] == year) & (complexity["score"] == "pci")]
    pci = pci.rename(columns={"entity": "product", "value": "pci"})[["product", "pci"]]
    ps = product_scores[product_scores["year"] == year][["product", "pspi", "pepi"]]
    return pci.merge(ps, on="product", how="outer")


def _opportunity_scatter(sets, complexity, product_scores, categories, income,
                         year: int) -> pd.DataFrame:
    year_sets = sets[sets["year"] == year]
    if year_sets.empty:
        raise ValueError(f"no opportunity sets for analysis year {year}")
    scores = _scores_for_year(complexity, product_scores, year)
    merged = (year_sets
              .merge(scores, on="product", how="left")
              .merge(categories, on="product", how="left")
              .merge(income, on="country", how="left"))
    cols = ["country", "year", "rank", "product", "density", "pci", "pspi", "pepi",
            "category", "group"]
    return merged[cols].rename(columns={"group": "income_group"})


def _anova_table(complexity, product_scores, categories, year: int) -> pd.DataFrame:
    scores = _scores_for_year(complexity, product_scores, year)
    scores = scores.merge(categories, on="product", how="left")
    rows = []
    for name in ("pci", "pspi", "pepi"):
        sub = scores.dropna(subset=[name, "category"])
        res = anova_decomposition(sub[name].to_numpy(), sub["category"].to_numpy())
        rows.append((year, name, res.ss_between, res.ss_within, res.ss_total,
                     res.df_between, res.df_within, res.ms_between, res.ms_within,
                     res.eta2, res.omega2, res.n, res.n_groups))
    return pd.DataFrame(rows, columns=[
        "year", "score", "ss_between", "ss_within", "ss_total", "df_between",
        "df_within", "ms_between", "ms_within", "eta2", "omega2", "n", "n_groups"])


def _anova_text(anova: pd.DataFrame, year: int) -> str:
    lines = [f"Variance decomposition of product scores by category ({year})",
             "=" * 78,
             f"{'score':<8}{'SS between':>12}{'SS within':>12}{'df(b,w)':>10}"
             f"{'MS between':>12}{'MS within':>12}{'eta2':>8}{'omega2':>8}",
             "-" * 78]
    for _, r in anova.iterrows():
        lines.append(
            f"{r['score']:<8}{r['ss_between']:>12.3f}{r['ss_within']:>12.3f}"
            f"{f'{int(r.df_between)},{int(r.df_within)}':>10}"
            f"{r['ms_between']:>12.4f}{r['ms_within']:>12.4f}"
            f"{r['eta2']:>8.3f}{r['omega2']:>8.3f}")
    lines.append("=" * 78)
    return "\n".join(lines) + "\n"


# ----------------------------------------------------------------------
# figures
# ----------------------------------------------------------------------

def _strip(ax, groups: list, values: list[np.ndarray]):
    ax.boxplot(values, tick_labels=[str(g) for g in groups], showfliers=False)
    for i, v in enumerate(values, start=1):
        if len(v) == 0:
            continue
        offsets = np.linspace(-0.18, 0.18, len(v))
        ax.plot(i + offsets, np.sort(v), linestyle="", marker="o",
                markersize=3, alpha=0.6)


def _figure_slopes(year_slopes: pd.DataFrame, year: int, path: Path) -> None:
    fig, axes = plt.subplots(2, 2, figsize=(10, 7), sharey="row")
    for row, dim in enumerate(["social", "environmental"]):
        sub = year_slopes[year_slopes["dimension"] == dim]
        for col, (grouping, order) in enumerate(
                (("income_group", INCOME_ORDER), ("eci_quartile", QUARTILE_ORDER))):
            ax = axes[row, col]
            _strip(ax, order, [sub[sub[grouping] == g]["beta"].to_numpy() for g in order])
            ax.axhline(0.0, color="grey", linewidth=0.8)
            ax.set_title(f"{dim} alignment by {grouping.replace('_', ' ')}")
            ax.set_ylabel("slope" if col == 0 else "")
    fig.suptitle(f"Opportunity alignment slopes, {year}")
    fig.tight_layout()
    fig.savefig(path, **PNG_META)
    plt.close(fig)


def _figure_scatter(scatter: pd.DataFrame, year: int, path: Path) -> None:
    by_pci = (scatter.groupby("country")["pci"].mean().sort_values())
    picks = [by_pci.index[-1], by_pci.index[0]]
    cats = sorted(scatter["category"].dropna().unique())
    cmap = plt.get_cmap("tab10")
    fig, axes = plt.subplots(2, 2, figsize=(10, 8), sharex=True, sharey=True)
    for row, country in enumerate(picks):
        sub = scatter[scatter["country"] == country]
        for col, score in enumerate(["pspi", "pepi"]):
            ax = axes[row, col]
            for i, cat in enumerate(cats):
                pts = sub[sub["category"] == cat]
                ax.scatter(pts["pci"], pts[score], s=14, color=cmap(i % 10),
                           label=cat if (row, col) == (0, 0) else None)
            ax.set_title(f"{country}: complexity vs {score}")
            ax.set_xlabel("product complexity")
            ax.set_ylabel(f"product {score}")
    handles, labels = axes[0, 0].get_legend_handles_labels()
    fig.legend(handles, labels, loc="lower center", ncol=5, fontsize=8)
    fig.suptitle(f"Closest opportunities ({year})")
    fig.tight_layout(rect=(0, 0.08, 1, 1))
    fig.savefig(path, **PNG_META)
    plt.close(fig)


def _figure_marginal_effects(me: pd.DataFrame, path: Path) -> None:
    samples = [s for s in ("ALL", "HUM", "LML") if s in set(me["sample"])]
    fig, axes = plt.subplots(1, len(samples), figsize=(4.2 * len(samples), 3.8),
                             sharey=True)
    axes = np.atleast_1d(axes)
    colors = {"PCI": "tab:blue", "PSPI": "tab:orange", "PEPI": "tab:green"}
    for ax, sample in zip(axes, samples):
        sub = me[me["sample"] == sample]
        for variable, g in sub.groupby("variable"):
            style = "-" if g["interaction_p"].iloc[0] < 0.1 else ":"
            ax.plot(g["omega"], g["effect"], style, color=colors[variable],
                    label=variable)
            ax.fill_between(g["omega"], g["lo95"], g["hi95"],
                            color=colors[variable], alpha=0.15)
        ax.axhline(0.0, color="grey", linewidth=0.8)
        ax.set_title(sample)
        ax.set_xlabel("relatedness density")
    axes[0].set_ylabel("marginal effect on log-odds")
    axes[-1].legend(fontsize=8)
    fig.suptitle("Marginal effects conditional on relatedness density")
    fig.tight_layout()
    fig.savefig(path, **PNG_META)
    plt.close(fig)


def _figure_probability_grid(grid: pd.DataFrame, path: Path) -> None:
    samples = [s for s in ("ALL", "HUM", "LML") if s in set(grid["sample"])]
    variables = ["PCI", "PSPI", "PEPI"]
    fig, axes = plt.subplots(len(variables), len(samples),
                             figsize=(3.6 * len(samples), 3.2 * len(variables)))
    axes = np.atleast_2d(axes)
    for i, variable in enumerate(variables):
        for j, sample in enumerate(samples):
            ax = axes[i, j]
            sub = grid[(grid["sample"] == sample) & (grid["variable"] == variable)]
            pivot = sub.pivot(index="value", columns="omega", values="probability")
            im = ax.imshow(pivot.to_numpy(), origin="lower", aspect="auto",
                           extent=(pivot.columns.min(), pivot.columns.max(),
                                   pivot.index.min(), pivot.index.max()),
                           cmap="viridis", vmin=0.0, vmax=1.0)
            ax.set_title(f"{sample}: {variable}", fontsize=9)
            if i == len(variables) - 1:
                ax.set_xlabel("density")
            if j == 0:
                ax.set_ylabel(f"{variable} value")
    fig.colorbar(im, ax=axes, shrink=0.7, label="P(entry)")
    fig.suptitle("Predicted entry probability")
    fig.savefig(path, **PNG_META)
    plt.close(fig)


def _figure_roc(curves: pd.DataFrame, summary: pd.DataFrame, path: Path) -> None:
    fig, ax = plt.subplots(figsize=(5.2, 4.6))
    for (sample, model), sub in curves.groupby(["sample", "model"]):
        row = summary[(summary["sample"] == sample) & (summary["model"] == model)]
        auc = row["auc"].iloc[0]
        ax.plot(sub["fpr"], sub["tpr"], label=f"{sample}/{model} (AUC {auc:.3f})")
    ax.plot([0, 1], [0, 1], "k--", linewidth=0.8)
    ax.set_xlabel("false positive rate")
    ax.set_ylabel("true positive rate")
    ax.set_title("Entry model ROC curves")
    ax.legend(fontsize=8, loc="lower right")
    fig.tight_layout()
    fig.savefig(path, **PNG_META)
    plt.close(fig)
