"""Independent oracle implementations used by the test suite.

Everything here deliberately avoids the library's own code paths:
brute-force loops, enumeration and power iteration provide the expected
values the fast implementations are checked against.
"""

import itertools
import math

import numpy as np
import pandas as pd


def rca_by_hand(frame: pd.DataFrame, year: int) -> dict[tuple[str, str], float]:
    """Advantage ratios from explicit pandas group sums."""
    sub = frame[frame["year"] == year]
    world = sub["value"].sum()
    by_country = sub.groupby("exporter")["value"].sum()
    by_product = sub.groupby("product")["value"].sum()
    out = {}
    for _, row in sub.iterrows():
        num = row["value"] / by_country[row["exporter"]]
        den = by_product[row["product"]] / world
        out[(row["exporter"], row["product"])] = num / den
    return out


def proximity_triple_loop(m: np.ndarray) -> np.ndarray:
    """Direct evaluation of the co-occurrence proximity definition."""
    n_c, n_p = m.shape
    ubiquity = m.sum(axis=0)
    phi = np.zeros((n_p, n_p))
    for p in range(n_p):
        for q in range(n_p):
            if p == q:
                phi[p, q] = 1.0 if ubiquity[p] >= 1 else 0.0
                continue
            denom = max(ubiquity[p], ubiquity[q])
            if denom == 0:
                continue
            co = sum(m[c, p] * m[c, q] for c in range(n_c))
            phi[p, q] = co / denom
    return phi


def density_triple_loop(m: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """Direct evaluation of the relatedness density definition."""
    n_c, n_p = m.shape
    omega = np.zeros((n_c, n_p))
    for c in range(n_c):
        for p in range(n_p):
            denom = sum(phi[p, q] for q in range(n_p))
            if denom == 0:
                continue
            num = sum(m[c, q] * phi[p, q] for q in range(n_p))
            omega[c, p] = num / denom
    return omega


def reduced_matrices_triple_loop(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Direct evaluation of the reduced averaging matrices."""
    n_c, n_p = m.shape
    div = m.sum(axis=1)
    ubi = m.sum(axis=0)
    m_cc = np.zeros((n_c, n_c))
    for c in range(n_c):
        for c2 in range(n_c):
            m_cc[c, c2] = sum(m[c, p] * m[c2, p] / (div[c] * ubi[p]) for p in range(n_p))
    m_pp = np.zeros((n_p, n_p))
    for p in range(n_p):
        for p2 in range(n_p):
            m_pp[p, p2] = sum(m[c, p] * m[c, p2] / (div[c] * ubi[p]) for c in range(n_c))
    return m_cc, m_pp


def reflections_fixed_point(mat: np.ndarray, start: np.ndarray,
                            tol: float = 5e-12, max_iter: int = 200000) -> np.ndarray:
    """Fixed point of repeated averaging followed by standardization.

    Standardizing each iterate removes the constant component, so the
    iteration converges to the standardized eigenvector for the second
    largest eigenvalue of the row-stochastic matrix.
    """
    k = np.asarray(start, dtype=float)
    k = (k - k.mean()) / k.std(ddof=1)
    for _ in range(max_iter):
        nk = mat @ k
        nk = (nk - nk.mean()) / nk.std(ddof=1)
        if np.abs(nk - k).max() < tol:
            return nk
        k = nk
    return k


def naive_entry_scan(m_cube: np.ndarray, years: list[int], m: int) -> set:
    """Sliding-window scan over every cell and candidate year."""
    n_years, n_c, n_p = m_cube.shape
    found = set()
    for c in range(n_c):
        for p in range(n_p):
            for ti in range(n_years):
                if ti - m < 0 or ti + m - 1 > n_years - 1:
                    continue
                back = all(m_cube[ti - j, c, p] == 0 for j in range(1, m + 1))
                fwd = all(m_cube[ti + j, c, p] == 1 for j in range(m))
                if back and fwd:
                    found.add((c, p, years[ti]))
    return found


def auc_pair_counting(scores, labels) -> float:
    """Probability a positive outranks a negative, ties counted half."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    pos = scores[labels == 1]
    neg = scores[labels == 0]
    wins = 0.0
    for sp in pos:
        for sn in neg:
            if sp > sn:
                wins += 1.0
            elif sp == sn:
                wins += 0.5
    return wins / (len(pos) * len(neg))


def wilcoxon_enumeration(a, b) -> tuple[float, float]:
    """Exact two-sided rank-sum p by enumerating every group assignment."""
    pooled = list(a) + list(b)
    n_a = len(a)
    ranks = pd.Series(pooled).rank(method="average").to_numpy()
    u_obs = ranks[:n_a].sum() - n_a * (n_a + 1) / 2.0
    n_le = n_ge = total = 0
    for combo in itertools.combinations(range(len(pooled)), n_a):
        u = ranks[list(combo)].sum() - n_a * (n_a + 1) / 2.0
        total += 1
        if u <= u_obs + 1e-12:
            n_le += 1
        if u >= u_obs - 1e-12:
            n_ge += 1
    return u_obs, min(1.0, 2.0 * min(n_le, n_ge) / total)


def anova_by_hand(values, groups):
    """Sums of squares from explicit per-group means."""
    values = np.asarray(values, dtype=float)
    groups = np.asarray(groups)
    grand = values.mean()
    ssb = ssw = 0.0
    for g in np.unique(groups):
        sel = values[groups == g]
        ssb += len(sel) * (sel.mean() - grand) ** 2
        ssw += np.sum((sel - sel.mean()) ** 2)
    return ssb, ssw, float(np.sum((values - grand) ** 2))


def simulate_logit_panel(seed: int, n_rows: int = 50000, n_groups: int = 200,
                         delta=(20.0, 0.5, -1.0, 0.0, 0.0, 4.0, 0.0, 2.0),
                         lam_loc: float = -6.0):
    """Draw an entry panel from the interaction logit model itself.

    Returns (panel, delta, lam) with one country per group so every group
    is a distinct fixed-effect cell.
    """
    rng = np.random.default_rng(seed)
    delta = np.asarray(delta, dtype=float)
    omega = rng.uniform(0.0, 0.6, n_rows)
    log_rca = rng.normal(-2.0, 1.0, n_rows)
    pci = rng.normal(0.0, 1.0, n_rows)
    pspi = rng.normal(0.0, 1.0, n_rows)
    pepi = rng.normal(0.0, 1.0, n_rows)
    X = np.column_stack([omega, log_rca, pci, pspi, pepi,
                         omega * pci, omega * pspi, omega * pepi])
    gcodes = rng.integers(0, n_groups, n_rows)
    lam = rng.normal(lam_loc, 1.0, n_groups)
    eta = X @ delta + lam[gcodes]
    y = (rng.uniform(size=n_rows) < 1.0 / (1.0 + np.exp(-eta))).astype(int)
    panel = pd.DataFrame(
        {
            "country": [f"G{g:03d}" for g in gcodes],
            "product": "0000",
            "year": 2015,
            "backward_ok": 1,
            "entry": y,
            "density_lag": omega,
            "rca_lag": np.exp(log_rca),
            "log_rca_lag": log_rca,
            "pci_lag": pci,
            "pspi_orth_lag": pspi,
            "pepi_orth_lag": pepi,
            "dens_x_pci": omega * pci,
            "dens_x_pspi": omega * pspi,
            "dens_x_pepi": omega * pepi,
            "income_group": "H",
        }
    )
    return panel, delta, lam


def logit_loglik(y, eta) -> float:
    return float(np.sum(y * eta - np.logaddexp(0.0, eta)))


def bisect(func, lo: float, hi: float, tol: float = 1e-12) -> float:
    f_lo = func(lo)
    for _ in range(200):
        mid = (lo + hi) / 2.0
        f_mid = func(mid)
        if abs(hi - lo) < tol:
            return mid
        if (f_lo < 0) == (f_mid < 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return (lo + hi) / 2.0


def norm_cdf(x: float) -> float:
    return 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))
