"""Sustained product entries and the estimation panel built on them.

An entry at year t requires the specialisation flag to be 0 for the m
preceding years (backward condition) and 1 from t through t+m-1 (forward
condition).  Candidate years where any required flag is unobservable are
excluded rather than treated as zeros.
"""

from __future__ import annotations

import logging

import numpy as np
import pandas as pd

from .ingest import ensure_coverage
from .relatedness import RelatednessBundle
from .specialization import SpecializationMatrix
from .sustainability import ScoreVector

log = logging.getLogger(__name__)

#: regressors every estimation row must carry (lagged one year)
REQUIRED_REGRESSORS = ["density_lag", "log_rca_lag", "pci_lag", "pspi_orth_lag", "pepi_orth_lag"]


def _aligned_cubes(m_series: dict[int, SpecializationMatrix]):
    """Stack per-year matrices on the union product list.

    Returns (years, countries, products, m_cube, rca_cube, defined) where
    ``defined`` marks (year, product) cells present in that year's matrix.
    """
    years = sorted(m_series)
    if years != list(range(years[0], years[0] + len(years))):
        raise ValueError(f"years must be consecutive, got {years}")
    countries = m_series[years[0]].countries
    for y in years:
        if m_series[y].countries != countries:
            raise ValueError(f"country universe changes in {y}")
    products = sorted({p for y in years for p in m_series[y].products})
    pos = {p: i for i, p in enumerate(products)}

    shape = (len(years), len(countries), len(products))
    m_cube = np.zeros(shape, dtype=np.int8)
    rca_cube = np.full(shape, np.nan)
    defined = np.zeros(shape, dtype=bool)
    for ti, y in enumerate(years):
        spec = m_series[y]
        cols = [pos[p] for p in spec.products]
        m_cube[ti][:, cols] = spec.m
        rca_cube[ti][:, cols] = spec.rca
        defined[ti][:, cols] = True
    return years, countries, tuple(products), m_cube, rca_cube, defined


def detect_entries(m_series: dict[int, SpecializationMatrix], m: int = 3) -> pd.DataFrame:
    """Backward and entry flags for every evaluable (country, product, year).

    Only years t with both a complete backward window [t-m, t-1] and a
    complete forward window [t, t+m-1] inside the panel appear; rows are
    (country, product, year, backward, entry).
    """
    if m < 1:
        raise ValueError("window length m must be >= 1")
    years, countries, products, m_cube, _, defined = _aligned_cubes(m_series)
    n_years = len(years)
    if n_years < 2 * m:
        raise ValueError(f"panel of {n_years} years too short for m={m}")

    records = []
    for ti in range(m, n_years - m + 1):
        back_def = defined[ti - m:ti].all(axis=0)
        fwd_def = defined[ti:ti + m].all(axis=0)
        evaluable = back_def & fwd_def
        backward = (m_cube[ti - m:ti] == 0).all(axis=0) & evaluable
        forward = (m_cube[ti:ti + m] == 1).all(axis=0) & evaluable
        ci, pi = np.nonzero(evaluable)
        records.append(pd.DataFrame(
            {
                "country": np.asarray(countries)[ci],
                "product": np.asarray(products)[pi],
                "year": years[ti],
                "backward": backward[ci, pi].astype(np.int8),
                "entry": (backward & forward)[ci, pi].astype(np.int8),
            }
        ))
    return pd.concat(records, ignore_index=True)


def build_entry_panel(
    m_series: dict[int, SpecializationMatrix],
    relatedness: dict[int, RelatednessBundle],
    pci: dict[int, ScoreVector],
    pspi_orth: dict[int, ScoreVector],
    pepi_orth: dict[int, ScoreVector],
    income_groups: dict[str, str],
    pspi_raw: dict[int, ScoreVector] | None = None,
    pepi_raw: dict[int, ScoreVector] | None = None,
    m: int = 3,
    epsilon: float = 1e-6,
) -> pd.DataFrame:
    """Assemble the estimation panel of backward-eligible candidate rows.

    Each row pairs the entry outcome at year t with regressors observed at
    t-1: relatedness density, log advantage floored at ``epsilon``,
    product complexity, the two orthogonalized sustainability scores and
    their density interactions.  Rows missing any regressor are dropped
    (count logged).  Raw sustainability scores ride along when provided so
    collinearity diagnostics can compare both regressor sets.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    years, countries, products, _, rca_cube, _ = _aligned_cubes(m_series)
    flags = detect_entries(m_series, m=m)
    flags = flags[flags["backward"] == 1]
    if flags.empty:
        raise ValueError("no backward-eligible candidate rows")
    ensure_coverage(income_groups, set(flags["country"]), "income classification")

    pos_c = {c: i for i, c in enumerate(countries)}
    pos_p = {p: i for i, p in enumerate(products)}
    year0 = years[0]

    def score_matrix(by_year: dict[int, ScoreVector]) -> np.ndarray:
        mat = np.full((len(years), len(products)), np.nan)
        for y, vec in by_year.items():
            if y not in m_series:
                continue
            got = vec.values.reindex(list(products)).to_numpy(dtype=float)
            mat[y - year0] = got
        return mat

    omega_cube = np.full((len(years), len(countries), len(products)), np.nan)
    for y, bundle in relatedness.items():
        if y not in m_series:
            continue
        cols = [pos_p[p] for p in bundle.products]
        omega_cube[y - year0][:, cols] = bundle.density
    pci_mat = score_matrix(pci)
    pspi_o = score_matrix(pspi_orth)
    pepi_o = score_matrix(pepi_orth)
    pspi_r = score_matrix(pspi_raw) if pspi_raw else None
    pepi_r = score_matrix(pepi_raw) if pepi_raw else None

    ti = flags["year"].to_numpy() - year0
    ci = flags["country"].map(pos_c).to_numpy()
    pi = flags["product"].map(pos_p).to_numpy()
    lag = ti - 1

    panel = pd.DataFrame(
        {
            "country": flags["country"].to_numpy(),
            "product": flags["product"].to_numpy(),
            "year": flags["year"].to_numpy(),
            "backward_ok": 1,
            "entry": flags["entry"].to_numpy(),
            "density_lag": omega_cube[lag, ci, pi],
            "rca_lag": rca_cube[lag, ci, pi],
            "log_rca_lag": np.log(np.maximum(rca_cube[lag, ci, pi], epsilon)),
            "pci_lag": pci_mat[lag, pi],
            "pspi_orth_lag": pspi_o[lag, pi],
            "pepi_orth_lag": pepi_o[lag, pi],
        }
    )
    if pspi_r is not None:
        panel["pspi_raw_lag"] = pspi_r[lag, pi]
    if pepi_r is not None:
        panel["pepi_raw_lag"] = pepi_r[lag, pi]

    complete = ~panel[REQUIRED_REGRESSORS].isna().any(axis=1)
    n_dropped = int((~complete).sum())
    if n_dropped:
        log.info("dropping %d candidate rows with missing regressors", n_dropped)
    panel = panel[complete].copy()
    if panel.empty:
        raise ValueError("entry panel empty after dropping incomplete rows")

    panel["dens_x_pci"] = panel["density_lag"] * panel["pci_lag"]
    panel["dens_x_pspi"] = panel["density_lag"] * panel["pspi_orth_lag"]
    panel["dens_x_pepi"] = panel["density_lag"] * panel["pepi_orth_lag"]
    panel["income_group"] = panel["country"].map(income_groups)
    return panel.sort_values(["year", "country", "product"], ignore_index=True)
