"""OLS regression of Borda lever scores on covariates with treatment interactions.

Design matrix layout: intercept, covariates, treatment dummy, then
covariate-by-dummy interactions. Diagnostics cover t/p values, the overall
F test, R^2, adjusted R^2, AIC, and variance inflation factors.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import linalg as sla
from scipy import stats

from .catalog import LEVERS, Catalog
from .metrics import borda_scores

RANK_TOL = 1e-10

SIGNIFICANCE_LEVELS = ((0.001, "***"), (0.01, "**"), (0.05, "*"), (0.1, "+"))


class RegressionError(ValueError):
    """Raised for malformed covariate tables or unfittable designs."""


@dataclass(frozen=True)
class CovariateRow:
    community_id: int
    covariates: dict[str, float]
    treated: bool


@dataclass(frozen=True)
class CovariateTable:
    rows: tuple[CovariateRow, ...]
    covariate_names: tuple[str, ...]

    def __post_init__(self):
        for row in self.rows:
            for name in self.covariate_names:
                if name not in row.covariates:
                    raise RegressionError(
                        f"community {row.community_id} missing covariate {name!r}"
                    )
                value = row.covariates[name]
                if not 0.0 <= value <= 1.0:
                    raise RegressionError(
                        f"community {row.community_id}: {name}={value} not in [0,1]"
                    )


@dataclass
class FitResult:
    terms: list[str]
    coefficients: dict[str, float]
    std_errors: dict[str, float]
    t_values: dict[str, float]
    p_values: dict[str, float]
    r2: float
    adj_r2: float
    f_statistic: float
    f_pvalue: float
    aic: float
    n_obs: int
    n_params: int
    residuals: np.ndarray = field(repr=False, default=None)


def significance_stars(p: float) -> str:
    for threshold, stars in SIGNIFICANCE_LEVELS:
        if p < threshold:
            return stars
    return ""


def load_covariates(path: str | Path) -> tuple[dict[int, dict[str, float]], tuple[str, ...]]:
    """Read a covariate file keyed by community_id; values are fractions in [0,1]."""
    path = Path(path)
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or reader.fieldnames[0] != "community_id":
            raise RegressionError(f"{path}: first column must be community_id")
        names = tuple(reader.fieldnames[1:])
        table: dict[int, dict[str, float]] = {}
        for lineno, row in enumerate(reader, start=2):
            try:
                cid = int(row["community_id"])
                values = {name: float(row[name]) for name in names}
            except (TypeError, ValueError) as exc:
                raise RegressionError(f"{path}:{lineno}: {exc}") from exc
            if cid in table:
                raise RegressionError(f"{path}:{lineno}: duplicate community {cid}")
            table[cid] = values
    return table, names


def build_design_matrix(
    table: CovariateTable, covariate_names: tuple[str, ...] | list[str] | None = None
) -> tuple[np.ndarray, list[str]]:
    """Stack intercept, covariates, dummy, and interaction columns."""
    names = tuple(covariate_names) if covariate_names is not None else table.covariate_names
    n = len(table.rows)
    p = 2 * len(names) + 2
    if n < p:
        raise RegressionError(f"need at least {p} observations, got {n}")
    X = np.empty((n, p))
    for r, row in enumerate(table.rows):
        d = 1.0 if row.treated else 0.0
        X[r, 0] = 1.0
        for c, name in enumerate(names):
            X[r, 1 + c] = row.covariates[name]
        X[r, 1 + len(names)] = d
        for c, name in enumerate(names):
            X[r, 2 + len(names) + c] = row.covariates[name] * d
    terms = (
        ["constant"]
        + list(names)
        + ["info_dummy"]
        + [f"{name} x info" for name in names]
    )
    return X, terms


def _check_rank(X: np.ndarray, terms: list[str]) -> None:
    _, R, piv = sla.qr(X, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    if diag.size == 0 or diag[0] == 0.0:
        raise RegressionError("design matrix is all zeros")
    bad = [terms[piv[i]] for i in range(len(diag)) if diag[i] < RANK_TOL * diag[0]]
    if bad:
        raise RegressionError(f"collinear design columns: {bad}")


def fit_ols(X: np.ndarray, y: np.ndarray, terms: list[str] | None = None) -> FitResult:
    """Least-squares fit with classical Gaussian diagnostics.

    AIC counts the error variance as a parameter:
    AIC = n*ln(2*pi*SSE/n) + n + 2*(p+1).
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    n, p = X.shape
    if terms is None:
        terms = [f"x{j}" for j in range(p)]
    if len(terms) != p:
        raise RegressionError("terms length does not match design columns")
    if y.shape[0] != n:
        raise RegressionError("y length does not match design rows")
    if n <= p:
        raise RegressionError(f"n_obs={n} must exceed n_params={p}")
    _check_rank(X, terms)

    beta, _, _, _ = np.linalg.lstsq(X, y, rcond=None)
    residuals = y - X @ beta
    sse = float(residuals @ residuals)
    sst = float(np.sum((y - y.mean()) ** 2))
    ssr = sst - sse
    df_resid = n - p
    sigma2 = sse / df_resid
    xtx_inv = np.linalg.inv(X.T @ X)
    se = np.sqrt(sigma2 * np.diag(xtx_inv))
    with np.errstate(divide="ignore", invalid="ignore"):
        t_vals = np.where(se > 0, beta / se, np.inf)
    p_vals = 2.0 * stats.t.sf(np.abs(t_vals), df_resid)

    r2 = 1.0 - sse / sst if sst > 0 else 0.0
    adj_r2 = 1.0 - (1.0 - r2) * (n - 1) / df_resid
    df_model = p - 1
    if df_model > 0 and sse > 0:
        f_stat = (ssr / df_model) / sigma2
        f_pvalue = float(stats.f.sf(f_stat, df_model, df_resid))
    elif df_model > 0:
        f_stat, f_pvalue = math.inf, 0.0
    else:
        f_stat, f_pvalue = math.nan, math.nan
    if sse > 0:
        aic = n * math.log(2.0 * math.pi * sse / n) + n + 2.0 * (p + 1)
    else:
        aic = -math.inf

    return FitResult(
        terms=list(terms),
        coefficients=dict(zip(terms, beta.tolist())),
        std_errors=dict(zip(terms, se.tolist())),
        t_values=dict(zip(terms, [float(t) for t in t_vals])),
        p_values=dict(zip(terms, [float(v) for v in p_vals])),
        r2=r2,
        adj_r2=adj_r2,
        f_statistic=float(f_stat),
        f_pvalue=float(f_pvalue),
        aic=float(aic),
        n_obs=n,
        n_params=p,
        residuals=residuals,
    )


def vif(X: np.ndarray, names: list[str] | None = None) -> dict[str, float]:
    """Variance inflation factor per column of X (no intercept column).

    Perfect collinearity is reported as ``inf`` rather than raised.
    """
    X = np.asarray(X, dtype=float)
    n, p = X.shape
    if p < 2:
        raise RegressionError("vif needs at least two covariates")
    if names is None:
        names = [f"x{j}" for j in range(p)]
    out: dict[str, float] = {}
    ones = np.ones((n, 1))
    for j in range(p):
        yj = X[:, j]
        others = np.hstack([ones, np.delete(X, j, axis=1)])
        beta, _, _, _ = np.linalg.lstsq(others, yj, rcond=None)
        resid = yj - others @ beta
        sse = float(resid @ resid)
        sst = float(np.sum((yj - yj.mean()) ** 2))
        if sst <= 0:
            out[names[j]] = math.inf
            continue
        r2j = 1.0 - sse / sst
        out[names[j]] = math.inf if r2j >= 1.0 - 1e-12 else 1.0 / (1.0 - r2j)
    return out


def run_lever_regressions(
    rounds_know,
    rounds_com,
    covariates: dict[int, dict[str, float]],
    covariate_names: tuple[str, ...],
    catalog: Catalog,
) -> dict[str, FitResult]:
    """One fit per lever: treated (knowledge-augmented) stacked on untreated rounds."""
    results: dict[str, FitResult] = {}
    for lever in LEVERS:
        scores_know = borda_scores(rounds_know, catalog, lever)
        scores_com = borda_scores(rounds_com, catalog, lever)
        ids_know = {s.community_id for s in scores_know}
        ids_com = {s.community_id for s in scores_com}
        if ids_know != ids_com:
            raise RegressionError(
                f"scenario community sets differ: {sorted(ids_know ^ ids_com)}"
            )
        missing = ids_know - set(covariates)
        if missing:
            raise RegressionError(f"covariates missing communities: {sorted(missing)}")
        rows = []
        y = []
        for treated, scores in ((False, scores_com), (True, scores_know)):
            for s in sorted(scores, key=lambda s: s.community_id):
                rows.append(
                    CovariateRow(
                        community_id=s.community_id,
                        covariates={n: covariates[s.community_id][n] for n in covariate_names},
                        treated=treated,
                    )
                )
                y.append(s.score)
        table = CovariateTable(rows=tuple(rows), covariate_names=tuple(covariate_names))
        X, terms = build_design_matrix(table)
        results[lever] = fit_ols(X, np.array(y), terms)
    return results
