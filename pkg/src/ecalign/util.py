"""Small numeric and hashing helpers used by several modules."""

from __future__ import annotations

import hashlib
from pathlib import Path

import numpy as np


def zscore(values: np.ndarray, ddof: int = 1) -> np.ndarray:
    """Standardize to mean 0, unit sample (n-1) standard deviation.

    The same convention is used for every standardized score in the
    toolkit so that indices stay comparable.
    """
    values = np.asarray(values, dtype=float)
    if values.size < 2:
        raise ValueError("need at least 2 values to standardize")
    std = values.std(ddof=ddof)
    if std == 0:
        raise ValueError("zero variance, cannot standardize")
    return (values - values.mean()) / std


def sigmoid(x: np.ndarray) -> np.ndarray:
    """Numerically stable logistic function."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def log_sigmoid_likelihood(y: np.ndarray, eta: np.ndarray) -> float:
    """Bernoulli log-likelihood sum(y*eta - log(1+exp(eta))), overflow-safe."""
    return float(np.sum(y * eta - np.logaddexp(0.0, eta)))


def sha256_file(path: Path | str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_csv(frame, path: Path | str, **kwargs) -> None:
    """CSV writer with round-trip-exact float formatting.

    pandas trims floats to 16 significant digits by default, which loses
    the last bit; shortest-repr formatting reloads bit-identically.
    """
    frame.to_csv(path, index=False, float_format=lambda v: repr(float(v)), **kwargs)


def read_csv(path: Path | str, **kwargs):
    """CSV reader with correctly-rounded float parsing (pairs with write_csv)."""
    import pandas as pd

    return pd.read_csv(path, float_precision="round_trip", **kwargs)
