"""Seeded synthetic dataset for demos, tests and the acceptance suite.

The generator builds a 30-country x 120-product x 12-year trade panel
from a latent capability scale: countries with higher capability tilt
their export baskets towards more sophisticated products, products
cluster into 10 categories, and slow persistent shocks flip individual
country-product cells so sustained entries and exits occur.  Three
countries and five products are planted below the default sample-filter
thresholds.  Everything is a pure function of the seed.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from .specialization import SpecializationMatrix
from .util import write_csv

YEARS = tuple(range(2011, 2023))
N_COUNTRIES = 30
N_PRODUCTS = 120
N_CATEGORIES = 10
CATEGORY_LABELS = (
    "agriculture", "minerals", "textiles", "stone", "metals",
    "plastics", "chemicals", "vehicles", "machinery", "electronics",
)
#: positions (by capability rank) of the three sub-threshold countries
SMALL_COUNTRY_RANKS = (3, 11, 19)
N_SMALL_PRODUCTS = 5
DEFAULT_SEED = 20240


@dataclass
class SyntheticData:
    trade: pd.DataFrame  # year, exporter, product, value
    indicators: pd.DataFrame  # name, country, year, value
    income_groups: pd.DataFrame  # country, group
    product_categories: pd.DataFrame  # product, category
    countries: tuple[str, ...]
    products: tuple[str, ...]
    small_countries: tuple[str, ...]
    small_products: tuple[str, ...]


def _country_codes(n: int) -> list[str]:
    letters = "ABCDEFGHIJKLMNOPQRSTUVWXYZ"
    codes = ("".join(t) for t in itertools.product(letters, repeat=3))
    return [c for c, _ in zip(codes, range(n))]


def generate_dataset(seed: int = DEFAULT_SEED) -> SyntheticData:
    rng = np.random.default_rng(seed)
    n_years = len(YEARS)

    countries = _country_codes(N_COUNTRIES)
    per_cat = N_PRODUCTS // N_CATEGORIES
    products = [f"{(g + 1) * 100 + j:04d}" for g in range(N_CATEGORIES) for j in range(per_cat)]
    categories = np.repeat(np.arange(N_CATEGORIES), per_cat)

    # latent capability of countries and sophistication of products
    u = np.linspace(0.05, 0.95, N_COUNTRIES)
    rng.shuffle(u)
    cat_base = np.linspace(0.15, 0.85, N_CATEGORIES)
    v = np.clip(cat_base[categories] + 0.12 * rng.normal(size=N_PRODUCTS), 0.02, 0.98)

    # persistent affinity: products beyond a country's capability are
    # penalised, so capable countries hold broader, more sophisticated
    # baskets (nested structure); category taste adds co-occurrence
    # clusters and pair noise keeps the matrix irregular
    cat_affinity = 0.8 * rng.normal(size=(N_COUNTRIES, N_CATEGORIES))
    pair_noise = 0.6 * rng.normal(size=(N_COUNTRIES, N_PRODUCTS))
    shortfall = np.maximum(v[None, :] - u[:, None], 0.0)
    base = -7.0 * shortfall + 1.0 * np.outer(u, v) + cat_affinity[:, categories] + pair_noise

    # AR(1) fluctuation around the persistent part
    rho, sigma = 0.85, 0.35
    noise = np.empty((n_years, N_COUNTRIES, N_PRODUCTS))
    noise[0] = sigma * rng.normal(size=(N_COUNTRIES, N_PRODUCTS))
    for t in range(1, n_years):
        noise[t] = rho * noise[t - 1] + sigma * np.sqrt(1 - rho ** 2) * rng.normal(
            size=(N_COUNTRIES, N_PRODUCTS))

    # persistent adoption / abandonment steps that flip specialisation
    # cells; adoptions favour cells just below the specialisation margin,
    # which sit close to a country's existing capabilities
    steps = np.zeros((n_years, N_COUNTRIES, N_PRODUCTS))
    n_up, n_down = 220, 120
    margin = base - np.quantile(base, 0.75, axis=1, keepdims=True)
    up_weight = np.exp(-2.5 * np.abs(margin)).ravel()
    up_cells = rng.choice(N_COUNTRIES * N_PRODUCTS, size=n_up, replace=False,
                          p=up_weight / up_weight.sum())
    down_weight = np.exp(-2.5 * np.abs(margin - 1.0)).ravel()
    down_weight[up_cells] = 0.0
    down_cells = rng.choice(N_COUNTRIES * N_PRODUCTS, size=n_down, replace=False,
                            p=down_weight / down_weight.sum())
    cells = np.concatenate([up_cells, down_cells])
    onset = rng.integers(2, n_years - 2, size=n_up + n_down)
    height = rng.normal(1.4, 0.25, size=n_up + n_down)
    height[n_up:] *= -1.0
    for cell, t0, h in zip(cells, onset, height):
        steps[t0:, cell // N_PRODUCTS, cell % N_PRODUCTS] += h

    tilt = base[None, :, :] + noise + steps

    # product base attractiveness and country scale (planted small entities)
    w_product = 10 ** (0.6 * rng.random(N_PRODUCTS))
    small_products = tuple(sorted(rng.choice(N_PRODUCTS, size=N_SMALL_PRODUCTS, replace=False)))
    w_product[list(small_products)] = 1e-5
    scale_country = 10 ** (10.0 + 1.6 * u + 0.3 * rng.normal(size=N_COUNTRIES))
    order = np.argsort(u)
    small_countries = tuple(int(order[r]) for r in SMALL_COUNTRY_RANKS)
    scale_country[list(small_countries)] = 10 ** (6.8 + 0.2 * rng.random(len(small_countries)))

    shares = w_product[None, None, :] * np.exp(tilt)
    shares /= shares.sum(axis=2, keepdims=True)
    values = scale_country[None, :, None] * shares
    # sub-dollar flows are noise; zeroing them keeps the file compact
    values[values < 1.0] = 0.0

    t_idx, c_idx, p_idx = np.nonzero(values)
    trade = pd.DataFrame(
        {
            "year": np.asarray(YEARS)[t_idx],
            "exporter": np.asarray(countries)[c_idx],
            "product": np.asarray(products)[p_idx],
            "value": np.round(values[t_idx, c_idx, p_idx], 2),
        }
    ).sort_values(["year", "exporter", "product"], ignore_index=True)

    # country indicators: social / environmental indices track capability
    years_arr = np.repeat(YEARS, N_COUNTRIES)
    countries_arr = np.tile(countries, n_years)
    drift = 0.4 * (np.repeat(np.arange(n_years), N_COUNTRIES) - n_years / 2) / n_years
    spi = np.clip(35 + 45 * np.tile(u, n_years) + drift
                  + 3.0 * rng.normal(size=n_years * N_COUNTRIES), 5, 98)
    epi = np.clip(30 + 40 * np.tile(u, n_years) - drift
                  + 4.5 * rng.normal(size=n_years * N_COUNTRIES), 5, 98)
    population = np.tile(10 ** (6.3 + 1.5 * rng.random(N_COUNTRIES)), n_years)
    population *= 1.0 + 0.01 * np.repeat(np.arange(n_years), N_COUNTRIES)
    low_pop = small_countries[0]
    population[np.arange(n_years * N_COUNTRIES) % N_COUNTRIES == low_pop] = 2e5
    gdp = np.tile(10 ** (8.5 + 2.5 * u), n_years) * (1 + 0.1 * rng.random(n_years * N_COUNTRIES))

    indicators = pd.concat(
        [
            pd.DataFrame({"name": name, "country": countries_arr, "year": years_arr,
                          "value": np.round(vals, 4)})
            for name, vals in
            (("SPI", spi), ("EPI", epi), ("population", population), ("gdp", gdp))
        ],
        ignore_index=True,
    )

    quartile = np.array_split(order, 4)
    group_of = {}
    for label, members in zip(("L", "LM", "UM", "H"), quartile):
        for c in members:
            group_of[countries[c]] = label
    income_groups = pd.DataFrame(
        {"country": countries, "group": [group_of[c] for c in countries]}
    )

    product_categories = pd.DataFrame(
        {"product": products, "category": [CATEGORY_LABELS[g] for g in categories]}
    )

    return SyntheticData(
        trade=trade,
        indicators=indicators,
        income_groups=income_groups,
        product_categories=product_categories,
        countries=tuple(countries),
        products=tuple(products),
        small_countries=tuple(countries[i] for i in small_countries),
        small_products=tuple(products[i] for i in small_products),
    )


def write_dataset(data: SyntheticData, out_dir: Path | str,
                  seed: int = DEFAULT_SEED) -> dict[str, Path]:
    """Write the dataset plus a ready-to-run pipeline config, return the paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {
        "trade": out_dir / "trade.csv.gz",
        "indicators": out_dir / "indicators.csv",
        "income_groups": out_dir / "income_groups.csv",
        "product_categories": out_dir / "product_categories.csv",
        "config": out_dir / "config.json",
    }
    write_csv(data.trade, paths["trade"], compression={"method": "gzip", "mtime": 0})
    write_csv(data.indicators, paths["indicators"])
    write_csv(data.income_groups, paths["income_groups"])
    write_csv(data.product_categories, paths["product_categories"])

    config = {
        "inputs": {
            "trade": paths["trade"].name,
            "indicators": paths["indicators"].name,
            "income_groups": paths["income_groups"].name,
            "product_categories": paths["product_categories"].name,
        },
        "filters": {
            "min_total_exports": 1e9,
            "min_population": 1e6,
            "min_product_world_exports": 5e8,
            "reference_year": 2011,
        },
        "k": 50,
        "m": 3,
        "epsilon": 1e-6,
        "analysis_year": 2022,
        "seed": seed,
        "out_dir": "artifacts",
    }
    paths["config"].write_text(json.dumps(config, indent=2, sort_keys=True) + "\n",
                               encoding="utf-8")
    return paths


def planted_entry_flags(seed: int = 7, n_countries: int = 30, n_products: int = 120,
                        n_years: int = 12, n_entries: int = 40, m: int = 3,
                        first_year: int = 2011):
    """Binary specialisation series with an exactly known set of entries.

    Returns (m_series, planted) where ``planted`` is the set of
    (country, product, year) sustained entries and the background cells
    are sanitized so they contain none.
    """
    rng = np.random.default_rng(seed)
    cube = np.zeros((n_years, n_countries, n_products), dtype=np.int8)

    kind = rng.random((n_countries, n_products))
    always_on = kind < 0.20
    churn = kind > 0.80
    cube[:, always_on] = 1
    cube[:, churn] = (rng.random((n_years, int(churn.sum()))) < 0.5).astype(np.int8)

    cells = rng.choice(n_countries * n_products, size=n_entries, replace=False)
    onset = rng.integers(m, n_years - m + 1, size=n_entries)
    planted = set()
    countries = _country_codes(n_countries)
    products = [f"{i:04d}" for i in range(n_products)]
    for cell, t0 in zip(cells, onset):
        c, p = cell // n_products, cell % n_products
        cube[:, c, p] = 0
        cube[t0:, c, p] = 1
        planted.add((countries[c], products[p], first_year + int(t0)))

    protected = np.zeros((n_countries, n_products), dtype=bool)
    for cell in cells:
        protected[cell // n_products, cell % n_products] = True

    # break accidental background entries by clearing the forward run
    changed = True
    while changed:
        changed = False
        for t in range(m, n_years - m + 1):
            hit = ((cube[t - m:t] == 0).all(axis=0) & (cube[t:t + m] == 1).all(axis=0)
                   & ~protected)
            if hit.any():
                cube[min(t + 1, n_years - 1)][hit] = 0
                changed = True

    m_series = {}
    for ti in range(n_years):
        mat = cube[ti].astype(float)
        m_series[first_year + ti] = SpecializationMatrix(
            year=first_year + ti,
            countries=tuple(countries),
            products=tuple(products),
            rca=mat,
            m=cube[ti].copy(),
        )
    return m_series, planted
