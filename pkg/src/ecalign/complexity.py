"""Country and product complexity from the specialisation network.

Both scores are the standardized eigenvectors, for the second-largest
eigenvalue, of reduced square matrices obtained by averaging the binary
specialisation matrix over its other dimension.  The reduced matrices are
row-stochastic, so the leading eigenvector is constant and carries no
information; the second one captures the main axis of variation.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd
import scipy.linalg

from .errors import DegenerateSpectrumError
from .specialization import SpecializationMatrix
from .util import zscore

log = logging.getLogger(__name__)


@dataclass
class ReducedMatrices:
    """Square country and product averaging matrices on the retained sample."""

    year: int
    countries: tuple[str, ...]  # countries with diversity >= 1
    products: tuple[str, ...]  # products with ubiquity >= 1
    m: np.ndarray  # retained binary matrix
    m_cc: np.ndarray  # C' x C' row-stochastic
    m_pp: np.ndarray  # P' x P' row-stochastic
    diversity: np.ndarray
    ubiquity: np.ndarray


@dataclass
class ComplexityScores:
    year: int
    eci: pd.Series  # retained countries, mean 0 / sample std 1
    pci: pd.Series  # retained products, mean 0 / sample std 1
    eci_gap: float  # lambda2 - lambda3 of the country matrix
    pci_gap: float


def build_reduced_matrices(spec: SpecializationMatrix) -> ReducedMatrices:
    """Build the two reduced averaging matrices from a binary matrix.

    Countries without any advantage and products without any exporter are
    dropped first (they would divide by zero and carry no signal); the
    drop counts are logged and those entities get no score for the year.
    """
    keep_c = spec.m.sum(axis=1) > 0
    keep_p = spec.m.sum(axis=0) > 0
    if not keep_c.all():
        log.info("%d zero-diversity countries dropped in %d", int((~keep_c).sum()), spec.year)
    if not keep_p.all():
        log.info("%d zero-ubiquity products dropped in %d", int((~keep_p).sum()), spec.year)
    m = spec.m[np.ix_(keep_c, keep_p)].astype(float)
    if m.size == 0:
        raise ValueError(f"empty specialisation matrix in {spec.year} after dropping")
    diversity = m.sum(axis=1)
    ubiquity = m.sum(axis=0)

    # average first over products then countries (and vice versa)
    m_over_div = m / diversity[:, None]
    m_over_ubi = m / ubiquity[None, :]
    m_cc = m_over_div @ m_over_ubi.T
    m_pp = m_over_ubi.T @ m_over_div

    for name, mat in (("country", m_cc), ("product", m_pp)):
        err = np.abs(mat.sum(axis=1) - 1.0).max()
        if err > 1e-12:
            raise ValueError(f"{name} matrix not row-stochastic (max dev {err:.2e})")

    return ReducedMatrices(
        year=spec.year,
        countries=tuple(c for c, k in zip(spec.countries, keep_c) if k),
        products=tuple(p for p, k in zip(spec.products, keep_p) if k),
        m=m,
        m_cc=m_cc,
        m_pp=m_pp,
        diversity=diversity,
        ubiquity=ubiquity,
    )


def _second_eigenvector(mat: np.ndarray, scale: np.ndarray, year: int,
                        gap_tol: float, residual_tol: float) -> tuple[np.ndarray, float]:
    """Second-largest eigenpair of a row-stochastic matrix D^-1 S.

    ``scale`` holds the diagonal of D.  The matrix is similar to the
    symmetric D^-1/2 S D^-1/2, so the spectrum is real and a symmetric
    solver can be used; eigenvectors are mapped back via D^-1/2.
    """
    n = mat.shape[0]
    if n < 2:
        raise ValueError(f"need at least 2 entities for complexity in {year}")
    root = np.sqrt(scale)
    sym = mat * (root[:, None] / root[None, :])
    sym = (sym + sym.T) / 2.0  # symmetrize away FP asymmetry
    eigvals, eigvecs = scipy.linalg.eigh(sym)
    vec = eigvecs[:, -2] / root
    lam = eigvals[-2]
    gap = lam - eigvals[-3] if n >= 3 else np.inf
    if gap < gap_tol:
        raise DegenerateSpectrumError(
            f"degenerate spectrum in {year}: eigenvalue gap {gap:.2e} below {gap_tol:.0e}"
        )
    residual = np.abs(mat @ vec - lam * vec).max() / max(np.abs(vec).max(), 1e-300)
    if residual > residual_tol:
        raise ValueError(f"eigensolve residual {residual:.2e} above {residual_tol:.0e} in {year}")
    return vec, float(gap)


def compute_eci_pci(red: ReducedMatrices, gap_tol: float = 1e-10,
                    residual_tol: float = 1e-12) -> ComplexityScores:
    """Standardized second eigenvectors with a fixed sign convention.

    The country score is oriented so it correlates non-negatively with
    diversity; the product score is then oriented so it correlates
    non-negatively with the mean country score of its exporters.
    """
    k_vec, eci_gap = _second_eigenvector(red.m_cc, red.diversity, red.year,
                                         gap_tol, residual_tol)
    l_vec, pci_gap = _second_eigenvector(red.m_pp, red.ubiquity, red.year,
                                         gap_tol, residual_tol)

    eci = zscore(k_vec)
    if np.corrcoef(eci, red.diversity)[0, 1] < 0:
        eci = -eci
    pci = zscore(l_vec)
    exporter_mean_eci = (red.m.T @ eci) / red.ubiquity
    if np.corrcoef(pci, exporter_mean_eci)[0, 1] < 0:
        pci = -pci

    return ComplexityScores(
        year=red.year,
        eci=pd.Series(eci, index=list(red.countries), name="eci"),
        pci=pd.Series(pci, index=list(red.products), name="pci"),
        eci_gap=eci_gap,
        pci_gap=pci_gap,
    )


def complexity_scores(spec: SpecializationMatrix, gap_tol: float = 1e-10,
                      residual_tol: float = 1e-12) -> ComplexityScores:
    """Convenience wrapper: reduced matrices + eigensolve for one year."""
    return compute_eci_pci(build_reduced_matrices(spec), gap_tol, residual_tol)
