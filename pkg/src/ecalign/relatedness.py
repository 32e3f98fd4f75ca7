"""Product proximity and country-product relatedness density."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd

from .specialization import SpecializationMatrix

log = logging.getLogger(__name__)


@dataclass
class RelatednessBundle:
    year: int
    countries: tuple[str, ...]
    products: tuple[str, ...]
    proximity: np.ndarray  # P x P symmetric, in [0, 1]
    density: np.ndarray  # C x P, in [0, 1]
    ubiquity: np.ndarray  # P
    diversity: np.ndarray  # C

    def proximity_frame(self) -> pd.DataFrame:
        """Non-zero proximity triplets (year,p,p2,phi)."""
        i, j = np.nonzero(self.proximity)
        return pd.DataFrame(
            {
                "year": self.year,
                "p": np.asarray(self.products)[i],
                "p2": np.asarray(self.products)[j],
                "phi": self.proximity[i, j],
            }
        )

    def density_frame(self) -> pd.DataFrame:
        """Dense density triplets (year,country,product,omega)."""
        c, p = np.indices(self.density.shape)
        return pd.DataFrame(
            {
                "year": self.year,
                "country": np.asarray(self.countries)[c.ravel()],
                "product": np.asarray(self.products)[p.ravel()],
                "omega": self.density.ravel(),
            }
        )


def compute_proximity(spec: SpecializationMatrix) -> np.ndarray:
    """Pairwise product proximity from co-occurrence in the binary matrix.

    phi[p, p'] is the number of countries specialised in both products
    divided by the larger of the two ubiquities, i.e. the minimum
    conditional probability of co-specialisation.  Pairs where both
    ubiquities are zero get 0; the diagonal is 1 for exported products.
    """
    m = spec.m.astype(float)
    ubiquity = m.sum(axis=0)
    co = m.T @ m
    denom = np.maximum(ubiquity[:, None], ubiquity[None, :])
    with np.errstate(invalid="ignore", divide="ignore"):
        phi = co / denom
    phi[denom == 0] = 0.0
    np.fill_diagonal(phi, (ubiquity >= 1).astype(float))
    return phi


def compute_density(spec: SpecializationMatrix, proximity: np.ndarray) -> np.ndarray:
    """Share of each product's proximity mass covered by a country's basket.

    omega[c, p] = sum_p' m[c, p'] * phi[p, p'] / sum_p' phi[p, p'], with the
    self term included in both sums.  Products with no proximity mass get
    omega = 0 with a warning.
    """
    if proximity.shape != (spec.m.shape[1], spec.m.shape[1]):
        raise ValueError(
            f"proximity shape {proximity.shape} does not match {spec.m.shape[1]} products"
        )
    mass = proximity.sum(axis=1)
    dead = mass == 0
    if dead.any():
        log.warning(
            "%d products have zero proximity mass in %d; density set to 0",
            int(dead.sum()), spec.year,
        )
    safe = np.where(dead, 1.0, mass)
    density = (spec.m.astype(float) @ proximity.T) / safe[None, :]
    density[:, dead] = 0.0
    # guard FP noise so downstream [0,1] reasoning is exact
    return np.clip(density, 0.0, 1.0)


def compute_relatedness(spec: SpecializationMatrix) -> RelatednessBundle:
    phi = compute_proximity(spec)
    omega = compute_density(spec, phi)
    return RelatednessBundle(
        year=spec.year,
        countries=spec.countries,
        products=spec.products,
        proximity=phi,
        density=omega,
        ubiquity=spec.ubiquity(),
        diversity=spec.diversity(),
    )
