"""Loading and filtering of trade flows, indicators and classifications.

All loaders consume plain UTF-8 CSV files (gzip accepted for the trade
file) and build immutable in-memory panels.  Export values for pairs that
never appear in the file are explicit zeros, so downstream ratios and
entry flags are always well defined.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from .errors import LoadError
from .util import write_csv

log = logging.getLogger(__name__)

INCOME_GROUPS = ("H", "UM", "LM", "L")

#: default column names of the trade CSV; a schema mapping can rename them
TRADE_COLUMNS = {"year": "year", "exporter": "exporter", "product": "product", "value": "value"}

_PRODUCT_RE = re.compile(r"^\d{1,4}$")


@dataclass(frozen=True)
class TradePanel:
    """Yearly country x product export values on a fixed universe.

    ``values[t, c, p]`` holds exports of country ``countries[c]`` in
    product ``products[p]`` during ``years[t]``; absent flows are 0.
    """

    years: tuple[int, ...]
    countries: tuple[str, ...]
    products: tuple[str, ...]
    values: np.ndarray  # (T, C, P) float64

    def __post_init__(self):
        expected = (len(self.years), len(self.countries), len(self.products))
        if self.values.shape != expected:
            raise ValueError(f"values shape {self.values.shape} != {expected}")
        self.values.setflags(write=False)

    def year_index(self, year: int) -> int:
        try:
            return self.years.index(year)
        except ValueError:
            raise KeyError(f"year {year} not in panel ({self.years[0]}..{self.years[-1]})")

    def year_slice(self, year: int) -> np.ndarray:
        """C x P export matrix for one year."""
        return self.values[self.year_index(year)]

    def to_frame(self) -> pd.DataFrame:
        """Long-format frame of the non-zero flows, sorted for stable output."""
        t, c, p = np.nonzero(self.values)
        frame = pd.DataFrame(
            {
                "year": np.asarray(self.years)[t],
                "exporter": np.asarray(self.countries)[c],
                "product": np.asarray(self.products)[p],
                "value": self.values[t, c, p],
            }
        )
        return frame.sort_values(["year", "exporter", "product"], ignore_index=True)

    def save(self, path: Path | str) -> None:
        write_csv(self.to_frame(), path)

    @staticmethod
    def from_frame(frame: pd.DataFrame) -> "TradePanel":
        years = tuple(sorted(frame["year"].unique().tolist()))
        countries = tuple(sorted(frame["exporter"].unique().tolist()))
        products = tuple(sorted(frame["product"].unique().tolist()))
        values = np.zeros((len(years), len(countries), len(products)))
        ti = frame["year"].map({y: i for i, y in enumerate(years)}).to_numpy()
        ci = frame["exporter"].map({c: i for i, c in enumerate(countries)}).to_numpy()
        pi = frame["product"].map({p: i for i, p in enumerate(products)}).to_numpy()
        np.add.at(values, (ti, ci, pi), frame["value"].to_numpy(dtype=float))
        return TradePanel(years, countries, products, values)


@dataclass(frozen=True)
class SampleFilterConfig:
    """Country/product retention thresholds, all evaluated in one reference year."""

    min_total_exports: float = 1e9
    min_population: float = 1e6
    min_product_world_exports: float = 5e8
    reference_year: int = 2011

    def __post_init__(self):
        for name in ("min_total_exports", "min_population", "min_product_world_exports"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")


def _exact_floats(strings: np.ndarray, lines: np.ndarray, what: str, path) -> np.ndarray:
    """Correctly-rounded string-to-float conversion with line-numbered errors."""
    try:
        return strings.astype(np.float64)
    except ValueError:
        for s, line in zip(strings, lines):
            try:
                float(s)
            except ValueError:
                raise LoadError(f"unparsable {what} at line {line} of {path}") from None
        raise


def load_trade_flows(path: Path | str, schema: dict[str, str] | None = None) -> TradePanel:
    """Load and aggregate a trade flow CSV into a :class:`TradePanel`.

    Parameters
    ----------
    path : CSV file (optionally ``.gz``) with a header row.
    schema : optional mapping from the canonical field names
        (``year``, ``exporter``, ``product``, ``value``) to the column
        names actually used in the file.

    Duplicate (year, exporter, product) rows are summed.  Zero-value rows
    are dropped and counted; negative values, unparsable numbers and bad
    product codes abort the load with the offending line number.
    """
    path = Path(path)
    if not path.exists():
        raise LoadError(f"trade file not found: {path}")
    colmap = dict(TRADE_COLUMNS)
    colmap.update(schema or {})

    raw = pd.read_csv(path, dtype=str, keep_default_na=False)
    missing = [v for v in colmap.values() if v not in raw.columns]
    if missing:
        raise LoadError(f"trade file {path} lacks columns {missing}; have {list(raw.columns)}")
    frame = pd.DataFrame({k: raw[v].str.strip() for k, v in colmap.items()})
    # header is line 1, first data row line 2
    lines = frame.index.to_numpy() + 2

    years = pd.to_numeric(frame["year"], errors="coerce")
    if years.isna().any():
        raise LoadError(f"unparsable year at line {lines[years.isna()][0]} of {path}")
    values = _exact_floats(frame["value"].to_numpy(), lines, "value", path)
    if (values < 0).any():
        raise LoadError(f"negative export value at line {lines[values < 0][0]} of {path}")
    bad_code = ~frame["product"].str.match(_PRODUCT_RE)
    if bad_code.any():
        code = frame["product"][bad_code].iloc[0]
        raise LoadError(f"bad product code {code!r} at line {lines[bad_code.to_numpy()][0]} of {path}")

    flows = pd.DataFrame(
        {
            "year": years.astype(int),
            "exporter": frame["exporter"],
            "product": frame["product"].str.zfill(4),
            "value": values,
        }
    )
    n_zero = int((flows["value"] == 0).sum())
    if n_zero:
        log.info("dropping %d zero-value rows from %s", n_zero, path.name)
        flows = flows[flows["value"] > 0]
    if flows.empty:
        raise LoadError(f"no positive flows in {path}")
    flows = flows.groupby(["year", "exporter", "product"], as_index=False)["value"].sum()
    panel = TradePanel.from_frame(flows)
    log.info(
        "loaded %s: %d years x %d countries x %d products",
        path.name, len(panel.years), len(panel.countries), len(panel.products),
    )
    return panel


def load_indicators(path: Path | str) -> pd.DataFrame:
    """Load the indicator CSV (columns name,country,year,value)."""
    path = Path(path)
    if not path.exists():
        raise LoadError(f"indicator file not found: {path}")
    frame = pd.read_csv(path, float_precision="round_trip")
    required = ["name", "country", "year", "value"]
    missing = [c for c in required if c not in frame.columns]
    if missing:
        raise LoadError(f"indicator file {path} lacks columns {missing}")
    frame = frame[required].copy()
    frame["year"] = frame["year"].astype(int)
    frame["value"] = frame["value"].astype(float)
    dup = frame.duplicated(["name", "country", "year"])
    if dup.any():
        row = frame[dup].iloc[0]
        raise LoadError(
            f"duplicate indicator value for ({row['name']}, {row['country']}, {row['year']})"
        )
    return frame


def indicator_series(indicators: pd.DataFrame, name: str, year: int) -> dict[str, float]:
    """country -> value for one indicator in one year."""
    sub = indicators[(indicators["name"] == name) & (indicators["year"] == year)]
    return dict(zip(sub["country"], sub["value"]))


def apply_sample_filters(
    panel: TradePanel, indicators: pd.DataFrame, cfg: SampleFilterConfig
) -> TradePanel:
    """Restrict the panel to sufficiently large countries and products.

    Thresholds are evaluated in ``cfg.reference_year`` only and the
    resulting country/product sets are held fixed for every year.  The
    country and product rules are iterated jointly to a fixed point so the
    filter is idempotent; on well-separated data the first pass already is
    the fixed point.
    """
    ref = cfg.reference_year
    if ref not in panel.years:
        raise ValueError(f"reference year {ref} absent from panel years {panel.years}")
    population = indicator_series(indicators, "population", ref)

    x_ref = panel.year_slice(ref)
    keep_c = np.ones(len(panel.countries), dtype=bool)
    keep_p = np.ones(len(panel.products), dtype=bool)
    while True:
        totals = (x_ref * keep_p).sum(axis=1)
        world = (x_ref * keep_c[:, None]).sum(axis=0)
        new_c = keep_c & (totals >= cfg.min_total_exports)
        if cfg.min_population > 0:
            pops = np.array([population.get(c, np.nan) for c in panel.countries])
            no_pop = keep_c & np.isnan(pops)
            for c in np.asarray(panel.countries)[no_pop]:
                log.warning("no population value for %s in %d; dropping", c, ref)
            new_c &= np.nan_to_num(pops, nan=-1.0) >= cfg.min_population
        new_p = keep_p & (world >= cfg.min_product_world_exports)
        if new_c.sum() == 0 or new_p.sum() == 0:
            raise ValueError("sample filters removed every country or product")
        if (new_c == keep_c).all() and (new_p == keep_p).all():
            break
        keep_c, keep_p = new_c, new_p

    dropped_c = [c for c, k in zip(panel.countries, keep_c) if not k]
    dropped_p = [p for p, k in zip(panel.products, keep_p) if not k]
    if dropped_c:
        log.info("filters dropped %d countries: %s", len(dropped_c), ", ".join(dropped_c))
    if dropped_p:
        log.info("filters dropped %d products", len(dropped_p))
    return TradePanel(
        panel.years,
        tuple(c for c, k in zip(panel.countries, keep_c) if k),
        tuple(p for p, k in zip(panel.products, keep_p) if k),
        panel.values[:, keep_c, :][:, :, keep_p].copy(),
    )


def load_income_groups(path: Path | str) -> dict[str, str]:
    """Load the country -> income group CSV (columns country,group)."""
    path = Path(path)
    if not path.exists():
        raise LoadError(f"income group file not found: {path}")
    frame = pd.read_csv(path, dtype=str)
    for col in ("country", "group"):
        if col not in frame.columns:
            raise LoadError(f"income group file {path} lacks column {col!r}")
    bad = ~frame["group"].isin(INCOME_GROUPS)
    if bad.any():
        raise LoadError(f"unknown income group {frame['group'][bad].iloc[0]!r} in {path}")
    dup = frame.duplicated("country")
    if dup.any():
        raise LoadError(f"duplicate income classification for {frame['country'][dup].iloc[0]}")
    return dict(zip(frame["country"], frame["group"]))


def load_product_categories(path: Path | str) -> dict[str, str]:
    """Load the product -> category CSV (columns product,category)."""
    path = Path(path)
    if not path.exists():
        raise LoadError(f"product category file not found: {path}")
    frame = pd.read_csv(path, dtype=str)
    for col in ("product", "category"):
        if col not in frame.columns:
            raise LoadError(f"product category file {path} lacks column {col!r}")
    frame["product"] = frame["product"].str.zfill(4)
    dup = frame.duplicated("product")
    if dup.any():
        raise LoadError(f"duplicate category for product {frame['product'][dup].iloc[0]}")
    return dict(zip(frame["product"], frame["category"]))


def ensure_coverage(mapping: dict[str, str], keys, what: str) -> None:
    """Fail if any key of the filtered sample is missing from a classification."""
    missing = sorted(k for k in keys if k not in mapping)
    if missing:
        raise LoadError(f"{what} missing for: {', '.join(missing)}")
