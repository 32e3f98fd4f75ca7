"""Fixed-effects logistic entry model and its diagnostics.

The entry model regresses the binary sustained-entry outcome on lagged
product characteristics with one intercept per country-year group.  The
group intercepts are profiled out: each global Newton step solves the
one-dimensional group problems exactly and then updates the slope block
using the profiled Hessian (the Schur complement of the diagonal group
block), which keeps the design matrix free of thousands of dummies.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy.stats import norm

from .errors import ConvergenceError
from .sustainability import ScoreVector
from .util import log_sigmoid_likelihood, sigmoid, zscore

log = logging.getLogger(__name__)

MAIN_REGRESSORS = ["density_lag", "log_rca_lag", "pci_lag", "pspi_orth_lag", "pepi_orth_lag"]
INTERACTIONS = ["dens_x_pci", "dens_x_pspi", "dens_x_pepi"]

#: direct / interaction column pairs for threshold and marginal-effect work
VARIABLE_PAIRS = {
    "PCI": ("pci_lag", "dens_x_pci"),
    "PSPI": ("pspi_orth_lag", "dens_x_pspi"),
    "PEPI": ("pepi_orth_lag", "dens_x_pepi"),
}

SAMPLES = {
    "ALL": ("H", "UM", "LM", "L"),
    "HUM": ("H", "UM"),
    "LML": ("LM", "L"),
}


@dataclass
class LogitFit:
    sample: str
    model: str  # "interactions" or "main"
    names: list[str]
    coef: np.ndarray
    se: np.ndarray
    z: np.ndarray
    p: np.ndarray
    cov: np.ndarray
    group_labels: list
    group_intercepts: np.ndarray
    loglik: float
    loglik_null: float  # single shared intercept on the estimation sample
    loglik_null_fe: float  # group intercepts only
    n_obs: int
    n_groups: int
    n_groups_dropped: int
    n_iter: int
    grad_norm: float
    converged: bool
    quasi_separation: bool
    se_clustered: np.ndarray | None = None
    row_index: np.ndarray = field(default=None, repr=False)  # panel rows used

    def coef_named(self) -> pd.Series:
        return pd.Series(self.coef, index=self.names)

    def summary_frame(self) -> pd.DataFrame:
        out = pd.DataFrame(
            {"coef": self.coef, "se": self.se, "z": self.z, "p": self.p},
            index=self.names,
        )
        if self.se_clustered is not None:
            out["se_clustered"] = self.se_clustered
        return out


def orthogonalize(t_p: ScoreVector, pci: ScoreVector) -> ScoreVector:
    """Residualize a product score on complexity within one year.

    Fits an OLS line of the score on complexity over the products holding
    both values and returns the standardized residuals, which are
    uncorrelated with complexity by construction.
    """
    if t_p.year != pci.year:
        raise ValueError(f"score years differ: {t_p.year} vs {pci.year}")
    joined = pd.concat([t_p.values.rename("t"), pci.values.rename("c")], axis=1).dropna()
    if len(joined) < 3:
        raise ValueError(f"need >= 3 products with both scores in {t_p.year}")
    x = joined["c"].to_numpy()
    y = joined["t"].to_numpy()
    sxx = np.sum((x - x.mean()) ** 2)
    if sxx == 0:
        raise ValueError(f"zero complexity variance in {t_p.year}")
    slope = np.sum((x - x.mean()) * (y - y.mean())) / sxx
    residuals = y - y.mean() - slope * (x - x.mean())
    if residuals.std(ddof=1) == 0:
        raise ValueError(f"{t_p.name} is collinear with complexity in {t_p.year}")
    values = pd.Series(np.nan, index=t_p.values.index)
    values.loc[joined.index] = zscore(residuals)
    return ScoreVector(name=f"{t_p.name}_orth", year=t_p.year,
                       entity_kind="product", values=values, standardized=True)


def _solve_group_intercepts(eta_x, y, gcodes, n_groups, lam, tol=1e-11, max_iter=200):
    """Exact per-group intercepts for fixed slopes (1-D Newton, vectorized)."""
    lam = lam.copy()
    for _ in range(max_iter):
        p = sigmoid(eta_x + lam[gcodes])
        score = np.bincount(gcodes, weights=y - p, minlength=n_groups)
        info = np.bincount(gcodes, weights=p * (1.0 - p), minlength=n_groups)
        step = score / np.maximum(info, 1e-300)
        np.clip(step, -10.0, 10.0, out=step)
        lam += step
        if np.abs(step).max() < tol:
            break
    return lam


def fit_fe_logit(
    panel: pd.DataFrame,
    model: str = "interactions",
    sample: str = "ALL",
    gradient_tol: float = 1e-7,
    max_iter: int = 100,
    cluster_by: str | None = None,
    regressors: list[str] | None = None,
) -> LogitFit:
    """Maximum-likelihood logit with country-year fixed effects.

    Groups whose outcome never varies are perfectly predicted by their own
    intercept and are dropped before fitting (count reported).  Iterates
    until the full-gradient infinity norm falls below ``gradient_tol``;
    exceeding ``max_iter`` raises.  Any slope larger than 50 in magnitude
    is flagged as quasi-separation.  ``cluster_by`` names a column (e.g.
    ``country``) for optional cluster-robust standard errors;
    ``regressors`` overrides the column list implied by ``model``.
    """
    if model not in ("interactions", "main"):
        raise ValueError(f"unknown model spec {model!r}")
    if sample not in SAMPLES:
        raise ValueError(f"unknown sample {sample!r}; choose from {sorted(SAMPLES)}")
    if regressors is None:
        names = MAIN_REGRESSORS + (INTERACTIONS if model == "interactions" else [])
    else:
        names = list(regressors)

    sub = panel[panel["income_group"].isin(SAMPLES[sample])]
    if sub.empty:
        raise ValueError(f"no rows for sample {sample}")

    group_key = (sub["country"].astype(str) + "\x1f" + sub["year"].astype(str)).to_numpy()
    labels, gcodes = np.unique(group_key, return_inverse=True)
    y = sub["entry"].to_numpy(dtype=float)

    # perfect-prediction groups: outcome sum of 0 or n_g
    ones = np.bincount(gcodes, weights=y)
    sizes = np.bincount(gcodes)
    varied = (ones > 0) & (ones < sizes)
    n_dropped = int((~varied).sum())
    keep = varied[gcodes]
    if not keep.any():
        raise ValueError("every fixed-effect group is perfectly predicted")
    if n_dropped:
        log.info("dropping %d of %d groups without outcome variation", n_dropped, len(sizes))

    sub = sub[keep]
    y = y[keep]
    X = sub[names].to_numpy(dtype=float)
    old_codes = gcodes[keep]
    kept_ids, gcodes = np.unique(old_codes, return_inverse=True)
    group_labels = [
        (c, int(t)) for c, t in (labels[i].split("\x1f") for i in kept_ids)
    ]
    n_groups = len(group_labels)
    n, k = X.shape

    means = np.bincount(gcodes, weights=y) / np.bincount(gcodes)
    lam = np.log(means / (1.0 - means))
    beta = np.zeros(k)
    grad_norm = np.inf
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        eta_x = X @ beta
        lam = _solve_group_intercepts(eta_x, y, gcodes, n_groups, lam)
        eta = eta_x + lam[gcodes]
        p = sigmoid(eta)
        resid = y - p
        grad_beta = X.T @ resid
        grad_lam = np.bincount(gcodes, weights=resid, minlength=n_groups)
        grad_norm = max(np.abs(grad_beta).max(), np.abs(grad_lam).max())
        if grad_norm <= gradient_tol:
            converged = True
            break

        w = p * (1.0 - p)
        h_groups = np.zeros((n_groups, k))
        np.add.at(h_groups, gcodes, X * w[:, None])
        d_groups = np.bincount(gcodes, weights=w, minlength=n_groups)
        hessian = (X * w[:, None]).T @ X
        hessian -= (h_groups / d_groups[:, None]).T @ h_groups
        try:
            delta = np.linalg.solve(hessian, grad_beta)
        except np.linalg.LinAlgError:
            raise ConvergenceError(
                f"singular profiled information at iteration {it} (gradient {grad_norm:.2e})"
            )

        ll_now = log_sigmoid_likelihood(y, eta)
        step = 1.0
        for _ in range(40):
            beta_try = beta + step * delta
            lam_try = _solve_group_intercepts(X @ beta_try, y, gcodes, n_groups, lam)
            if log_sigmoid_likelihood(y, X @ beta_try + lam_try[gcodes]) >= ll_now - 1e-10:
                break
            step /= 2.0
        beta = beta + step * delta
        lam = lam_try

    if not converged:
        raise ConvergenceError(
            f"no convergence after {max_iter} iterations; last gradient norm {grad_norm:.2e}"
        )

    eta = X @ beta + lam[gcodes]
    p = sigmoid(eta)
    w = p * (1.0 - p)
    h_groups = np.zeros((n_groups, k))
    np.add.at(h_groups, gcodes, X * w[:, None])
    d_groups = np.bincount(gcodes, weights=w, minlength=n_groups)
    info = (X * w[:, None]).T @ X - (h_groups / d_groups[:, None]).T @ h_groups
    cov = np.linalg.inv(info)
    se = np.sqrt(np.diag(cov))
    zval = beta / se
    pval = 2.0 * norm.sf(np.abs(zval))

    quasi = bool(np.abs(beta).max() > 50.0)
    if quasi:
        log.warning("possible quasi-separation: max |coefficient| = %.1f", np.abs(beta).max())

    loglik = log_sigmoid_likelihood(y, eta)
    ybar = y.mean()
    loglik_null = float(len(y) * (ybar * np.log(ybar) + (1.0 - ybar) * np.log(1.0 - ybar)))
    m_g = np.bincount(gcodes, weights=y) / np.bincount(gcodes)
    loglik_null_fe = float(np.sum(np.bincount(gcodes)
                                  * (m_g * np.log(m_g) + (1.0 - m_g) * np.log(1.0 - m_g))))

    se_cl = None
    if cluster_by is not None:
        # profile score per row: residual times the within-group demeaned design
        x_center = X - (h_groups / d_groups[:, None])[gcodes]
        scores = x_center * (y - p)[:, None]
        clusters, ccodes = np.unique(sub[cluster_by].to_numpy(), return_inverse=True)
        meat = np.zeros((k, k))
        for j in range(len(clusters)):
            s = scores[ccodes == j].sum(axis=0)
            meat += np.outer(s, s)
        cov_cl = cov @ meat @ cov
        se_cl = np.sqrt(np.diag(cov_cl))

    return LogitFit(
        sample=sample, model=model, names=names,
        coef=beta, se=se, z=zval, p=pval, cov=cov,
        group_labels=group_labels, group_intercepts=lam,
        loglik=loglik, loglik_null=loglik_null, loglik_null_fe=loglik_null_fe,
        n_obs=n, n_groups=n_groups, n_groups_dropped=n_dropped,
        n_iter=it, grad_norm=float(grad_norm), converged=converged,
        quasi_separation=quasi, se_clustered=se_cl,
        row_index=sub.index.to_numpy(),
    )


def predicted_probabilities(fit: LogitFit, panel: pd.DataFrame) -> np.ndarray:
    """In-sample event probabilities for the rows the fit retained."""
    rows = panel.loc[fit.row_index]
    X = rows[fit.names].to_numpy(dtype=float)
    key_to_code = {g: i for i, g in enumerate(fit.group_labels)}
    gcodes = np.array([key_to_code[(c, t)] for c, t in zip(rows["country"], rows["year"])])
    return sigmoid(X @ fit.coef + fit.group_intercepts[gcodes])


def relatedness_threshold(fit: LogitFit, variable: str) -> float:
    """Density level where a variable's marginal effect on log-odds turns positive.

    Equals minus the ratio of the direct coefficient to the density
    interaction coefficient.
    """
    direct_name, inter_name = VARIABLE_PAIRS[variable.upper()]
    coefs = fit.coef_named()
    if inter_name not in coefs.index:
        raise ValueError(f"fit has no interaction term for {variable}")
    if coefs[inter_name] == 0:
        raise ValueError(f"zero interaction coefficient for {variable}")
    return float(-coefs[direct_name] / coefs[inter_name])


def marginal_effect_grid(fit: LogitFit, variable: str, omega_grid) -> pd.DataFrame:
    """Log-odds marginal effect of a variable along a density grid.

    The effect is affine in density (direct + interaction * omega); the
    95% band comes from the delta method on the coefficient covariance.
    """
    direct_name, inter_name = VARIABLE_PAIRS[variable.upper()]
    if inter_name not in fit.names:
        raise ValueError(f"fit has no interaction term for {variable}")
    i = fit.names.index(direct_name)
    j = fit.names.index(inter_name)
    omega = np.asarray(omega_grid, dtype=float)
    effect = fit.coef[i] + fit.coef[j] * omega
    var = fit.cov[i, i] + omega ** 2 * fit.cov[j, j] + 2.0 * omega * fit.cov[i, j]
    band = 1.959963984540054 * np.sqrt(var)
    return pd.DataFrame(
        {
            "variable": variable.upper(),
            "omega": omega,
            "effect": effect,
            "se": np.sqrt(var),
            "lo95": effect - band,
            "hi95": effect + band,
            "direct_p": fit.p[i],
            "interaction_p": fit.p[j],
        }
    )


def mcfadden_r2(fit: LogitFit, null: str = "intercept") -> float:
    """Likelihood-ratio pseudo R-squared against the chosen null model."""
    if null == "intercept":
        ll0 = fit.loglik_null
    elif null == "fe":
        ll0 = fit.loglik_null_fe
    else:
        raise ValueError("null must be 'intercept' or 'fe'")
    if ll0 == 0:
        raise ValueError("null log-likelihood is zero")
    return 1.0 - fit.loglik / ll0


def roc_auc(scores, labels) -> tuple[pd.DataFrame, float]:
    """ROC curve at every distinct threshold plus the rank-statistic AUC.

    The AUC is the probability a random positive outscores a random
    negative, with ties counted half; it equals the trapezoidal area under
    the emitted curve.
    """
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    n_pos = int((labels == 1).sum())
    n_neg = int((labels == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise ValueError("need both classes to compute a ROC curve")

    order = np.argsort(-scores, kind="mergesort")
    s_sorted = scores[order]
    y_sorted = labels[order]
    distinct = np.nonzero(np.diff(s_sorted))[0]
    cut = np.concatenate([distinct, [len(scores) - 1]])
    tp = np.cumsum(y_sorted == 1)[cut]
    fp = np.cumsum(y_sorted == 0)[cut]
    curve = pd.DataFrame(
        {
            "threshold": np.concatenate([[np.inf], s_sorted[cut]]),
            "fpr": np.concatenate([[0.0], fp / n_neg]),
            "tpr": np.concatenate([[0.0], tp / n_pos]),
        }
    )

    ranks = pd.Series(scores).rank(method="average").to_numpy()
    r_pos = ranks[labels == 1].sum()
    auc = (r_pos - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)
    return curve, float(auc)


def vif(X, names) -> pd.Series:
    """Variance inflation factor of each column against the others.

    Each column is regressed (with intercept) on the remaining columns;
    VIF = 1 / (1 - R^2).  Exactly collinear columns report infinity.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] < 2:
        raise ValueError("need a matrix with at least 2 regressors")
    out = np.empty(X.shape[1])
    for j in range(X.shape[1]):
        target = X[:, j]
        others = np.column_stack([np.ones(len(X)), np.delete(X, j, axis=1)])
        coef, _, _, _ = np.linalg.lstsq(others, target, rcond=None)
        resid = target - others @ coef
        sst = np.sum((target - target.mean()) ** 2)
        if sst == 0:
            out[j] = np.inf
            continue
        r2 = 1.0 - np.sum(resid ** 2) / sst
        out[j] = np.inf if r2 >= 1.0 - 1e-12 else 1.0 / (1.0 - r2)
    return pd.Series(out, index=list(names), name="vif")
