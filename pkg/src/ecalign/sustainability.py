"""Product-level sustainability scores from country indicators.

A country score (e.g. a social progress or environmental performance
index) is standardized per year and then pushed to the product level as
the export-share weighted average over the countries exporting the
product with comparative advantage.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd

from .ingest import TradePanel
from .specialization import SpecializationMatrix
from .util import zscore


@dataclass
class ScoreVector:
    """A named per-entity score series for one year."""

    name: str
    year: int
    entity_kind: str  # "country" or "product"
    values: pd.Series  # indexed by entity id; may contain NaN for missing
    standardized: bool = False

    def present(self) -> pd.Series:
        return self.values.dropna()


def zscore_country_indicator(indicators: pd.DataFrame, name: str, year: int,
                             countries) -> ScoreVector:
    """Cross-sectional standardization of one indicator over the sample.

    Only the listed (filtered-sample) countries enter the mean and
    standard deviation; countries without a value stay missing.
    """
    sub = indicators[(indicators["name"] == name) & (indicators["year"] == year)]
    series = pd.Series(sub["value"].to_numpy(), index=sub["country"].to_numpy())
    series = series.reindex(list(countries))
    present = series.dropna()
    if len(present) < 2:
        raise ValueError(f"need >= 2 {name} values in {year}, have {len(present)}")
    if present.std(ddof=1) == 0:
        raise ValueError(f"zero variance in {name} for {year}")
    series.loc[present.index] = zscore(present.to_numpy())
    return ScoreVector(name=name, year=year, entity_kind="country",
                       values=series, standardized=True)


def product_score(spec: SpecializationMatrix, panel: TradePanel,
                  t_c: ScoreVector) -> ScoreVector:
    """Specialisation-weighted average of a country score per product.

    Weights are the product's share in each exporting country's basket,
    switched on only for countries with comparative advantage.  Countries
    with a missing score are excluded from numerator and denominator
    alike; products left without any weight get a missing value.
    """
    if t_c.year != spec.year:
        raise ValueError(f"score year {t_c.year} != specialisation year {spec.year}")
    if not t_c.standardized:
        raise ValueError("country score must be standardized first")
    x = panel.year_slice(spec.year).astype(float)
    # panel may carry products dropped from this year's matrix
    keep = [panel.products.index(p) for p in spec.products]
    x = x[:, keep]
    if tuple(panel.countries) != tuple(spec.countries):
        raise ValueError("panel and specialisation matrix cover different countries")

    totals = x.sum(axis=1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        shares = np.where(totals > 0, x / np.where(totals == 0, 1.0, totals), 0.0)

    scores = t_c.values.reindex(list(spec.countries)).to_numpy(dtype=float)
    has_score = ~np.isnan(scores)
    w = spec.m * shares * has_score[:, None]
    mass = w.sum(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        t_p = (w * np.nan_to_num(scores)[:, None]).sum(axis=0) / mass
    t_p[mass == 0] = np.nan

    return ScoreVector(
        name=f"product_{t_c.name.lower()}",
        year=spec.year,
        entity_kind="product",
        values=pd.Series(t_p, index=list(spec.products)),
        standardized=False,
    )
