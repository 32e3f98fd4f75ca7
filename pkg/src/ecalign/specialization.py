"""Revealed comparative advantage and the binary specialisation matrix."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .ingest import TradePanel
from .util import write_csv, read_csv

log = logging.getLogger(__name__)


@dataclass
class SpecializationMatrix:
    """Per-year RCA values and their binarization on a fixed universe."""

    year: int
    countries: tuple[str, ...]
    products: tuple[str, ...]
    rca: np.ndarray  # C x P float
    m: np.ndarray = field(default=None)  # C x P int8, 1 where rca >= 1

    def diversity(self) -> np.ndarray:
        """Number of products each country exports with advantage."""
        return self.m.sum(axis=1)

    def ubiquity(self) -> np.ndarray:
        """Number of countries exporting each product with advantage."""
        return self.m.sum(axis=0)

    def to_frame(self) -> pd.DataFrame:
        """Sparse triplet form (year,country,product,rca,m), rca > 0 rows only."""
        c, p = np.nonzero(self.rca)
        return pd.DataFrame(
            {
                "year": self.year,
                "country": np.asarray(self.countries)[c],
                "product": np.asarray(self.products)[p],
                "rca": self.rca[c, p],
                "m": self.m[c, p],
            }
        ).sort_values(["country", "product"], ignore_index=True)


def compute_rca(panel: TradePanel, year: int) -> SpecializationMatrix:
    """Export advantage per country/product for one year.

    The advantage of a country in a product is its share of the product in
    the country's export basket divided by the product's share of world
    trade.  Products without world exports that year are dropped with a
    warning; countries without exports keep an all-zero row so the panel
    stays balanced across years.
    """
    x = panel.year_slice(year).astype(float)
    world_total = x.sum()
    if world_total <= 0:
        raise ValueError(f"all trade flows zero in {year}")

    world_p = x.sum(axis=0)
    alive = world_p > 0
    products = tuple(p for p, a in zip(panel.products, alive) if a)
    if not alive.all():
        log.warning(
            "%d products have zero world exports in %d and are dropped for that year",
            int((~alive).sum()), year,
        )
    x = x[:, alive]
    world_share = x.sum(axis=0) / x.sum()

    totals_c = x.sum(axis=1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        rca = (x / totals_c) / world_share[None, :]
    rca[np.isnan(rca)] = 0.0  # countries with zero total exports

    spec = SpecializationMatrix(year, panel.countries, products, rca)
    return binarize(spec)


def binarize(spec: SpecializationMatrix) -> SpecializationMatrix:
    """Set m = 1 exactly where rca >= 1 (no tolerance band)."""
    spec.m = (spec.rca >= 1.0).astype(np.int8)
    return spec


def save_specializations(specs: list[SpecializationMatrix], path) -> None:
    write_csv(pd.concat([s.to_frame() for s in specs], ignore_index=True), path)


def load_specializations(path, countries: tuple[str, ...], products_by_year: dict[int, tuple[str, ...]] | None = None) -> dict[int, SpecializationMatrix]:
    """Rebuild dense matrices from the sparse triplet CSV.

    ``products_by_year`` supplies each year's product universe (needed to
    restore all-zero columns); by default the products present in the file
    for that year are used.
    """
    frame = read_csv(path, dtype={"country": str, "product": str})
    out = {}
    for year, sub in frame.groupby("year"):
        if products_by_year is not None:
            products = products_by_year[int(year)]
        else:
            products = tuple(sorted(sub["product"].unique()))
        rca = np.zeros((len(countries), len(products)))
        ci = sub["country"].map({c: i for i, c in enumerate(countries)}).to_numpy()
        pi = sub["product"].map({p: i for i, p in enumerate(products)}).to_numpy()
        rca[ci, pi] = sub["rca"].to_numpy()
        out[int(year)] = binarize(SpecializationMatrix(int(year), countries, products, rca))
    return out
