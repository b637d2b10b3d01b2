"""Least-squares core: QR-based OLS/WLS, robust covariance, fit statistics.

Coefficients are always computed through a Householder QR of the design, never
through the normal equations. Weighted fits scale rows by sqrt(weight) and
reuse the same arithmetic path, so unit weights reproduce OLS bit-for-bit.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .probdist import f_sf, student_t_sf

__all__ = [
    "LinAlgSpecError",
    "FitStatistics",
    "LeastSquaresFit",
    "ols",
    "wls",
    "white_cross_section_cov",
    "fit_statistics",
    "durbin_watson",
]


class LinAlgSpecError(ValueError):
    """Raised for rank-deficient or under-identified regression requests."""


@dataclass
class FitStatistics:
    """The summary block printed under a coefficient table."""

    r_squared: Optional[float]
    adjusted_r_squared: Optional[float]
    se_of_regression: float
    sum_squared_resid: float
    f_statistic: Optional[float]
    prob_f: Optional[float]
    durbin_watson: float
    mean_dependent: float
    sd_dependent: float
    n_obs: int
    k_params: int


@dataclass
class LeastSquaresFit:
    """Coefficients plus everything needed to report or re-cover them.

    ``residuals`` are in original units; under WLS they are orthogonal to the
    design in the weighted inner product. ``design`` keeps the unscaled design
    so robust covariances can be formed after the fact.
    """

    coefficients: np.ndarray
    residuals: np.ndarray
    covariance: np.ndarray
    standard_errors: np.ndarray
    t_statistics: np.ndarray
    probabilities: np.ndarray
    df_resid: int
    design: np.ndarray
    y: np.ndarray
    weights: Optional[np.ndarray]
    column_names: tuple[str, ...]
    covariance_kind: str = "classical"
    fit: Optional[FitStatistics] = None

    @property
    def fitted(self) -> np.ndarray:
        return self.design @ self.coefficients

    def with_covariance(self, cov: np.ndarray, kind: str) -> "LeastSquaresFit":
        se = np.sqrt(np.diag(cov))
        t = np.divide(self.coefficients, se, out=np.full_like(se, np.inf), where=se > 0)
        p = np.array([2.0 * student_t_sf(abs(ti), self.df_resid) for ti in t])
        return replace(
            self,
            covariance=cov,
            standard_errors=se,
            t_statistics=t,
            probabilities=p,
            covariance_kind=kind,
        )


def _design(X: np.ndarray, intercept: bool, column_names) -> tuple[np.ndarray, tuple[str, ...]]:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise LinAlgSpecError("design must be two-dimensional")
    names = list(column_names) if column_names is not None else [f"x{j + 1}" for j in range(X.shape[1])]
    if len(names) != X.shape[1]:
        raise LinAlgSpecError(f"{len(names)} names for {X.shape[1]} columns")
    if intercept:
        X = np.column_stack([np.ones(X.shape[0]), X])
        names = ["C"] + names
    return X, tuple(names)


def _qr_solve(Z: np.ndarray, y: np.ndarray, names, allow_square: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Solve min ||Zb - y|| via QR; returns (b, (Z'Z)^-1). Raises on rank loss."""
    n, k = Z.shape
    if n < k or (n == k and not allow_square):
        raise LinAlgSpecError(f"need more rows than columns, got {n} rows for {k} columns")
    q, r = np.linalg.qr(Z)
    col_norms = np.linalg.norm(Z, axis=0)
    tol = np.finfo(float).eps * max(n, k) * (col_norms.max() if k else 0.0)
    diag = np.abs(np.diag(r))
    deficient = np.nonzero(diag <= tol)[0]
    if len(deficient):
        j = int(deficient[0])
        raise LinAlgSpecError(
            f"design is rank deficient: column {names[j]!r} is linearly dependent on the preceding columns"
        )
    b = np.linalg.solve(r, q.T @ y)
    rinv = np.linalg.solve(r, np.eye(k))
    xtx_inv = rinv @ rinv.T
    return b, xtx_inv


def ols(
    X,
    y,
    intercept: bool = True,
    column_names=None,
    df_resid: Optional[int] = None,
    _allow_saturated: bool = False,
) -> LeastSquaresFit:
    """Ordinary least squares via Householder QR with classical covariance.

    ``df_resid`` overrides the residual degrees of freedom used for s^2 and
    the coefficient probabilities (the panel estimators pass n - K - N here).
    """
    y = np.asarray(y, dtype=float)
    Z, names = _design(X, intercept, column_names)
    n, k = Z.shape
    b, xtx_inv = _qr_solve(Z, y, names, allow_square=_allow_saturated)
    resid = y - Z @ b
    ssr = float(resid @ resid)
    df = int(df_resid) if df_resid is not None else n - k
    if df <= 0 and not _allow_saturated:
        raise LinAlgSpecError(f"non-positive residual degrees of freedom ({df})")
    if df > 0:
        s2 = ssr / df
        cov = s2 * xtx_inv
        se = np.sqrt(np.diag(cov))
        t = np.divide(b, se, out=np.full_like(se, np.inf), where=se > 0)
        p = np.array([2.0 * student_t_sf(abs(ti), df) for ti in t])
    else:
        # saturated system: coefficients are exact, inference is undefined
        cov = np.full((k, k), np.nan)
        se = np.full(k, np.nan)
        t = np.full(k, np.nan)
        p = np.full(k, np.nan)
    return LeastSquaresFit(
        coefficients=b,
        residuals=resid,
        covariance=cov,
        standard_errors=se,
        t_statistics=t,
        probabilities=p,
        df_resid=df,
        design=Z,
        y=y,
        weights=None,
        column_names=names,
    )


def wls(
    X,
    y,
    weights,
    intercept: bool = True,
    column_names=None,
    df_resid: Optional[int] = None,
) -> LeastSquaresFit:
    """Weighted least squares: OLS on rows scaled by sqrt(weight)."""
    w = np.asarray(weights, dtype=float)
    bad = np.nonzero(~(w > 0))[0]
    if len(bad):
        raise LinAlgSpecError(f"non-positive weight at row {int(bad[0])}")
    y = np.asarray(y, dtype=float)
    Z, names = _design(X, intercept, column_names)
    if len(w) != len(y):
        raise LinAlgSpecError("weights length must match rows")
    sw = np.sqrt(w)
    fit = ols(
        Z * sw[:, None], y * sw, intercept=False, column_names=names,
        df_resid=df_resid, _allow_saturated=True,
    )
    # report in original units: keep unscaled design, raw-unit residuals
    resid = y - Z @ fit.coefficients
    return replace(fit, design=Z, y=y, residuals=resid, weights=w)


def _weighted_parts(fit: LeastSquaresFit) -> tuple[np.ndarray, np.ndarray]:
    if fit.weights is None:
        return fit.design, fit.residuals
    sw = np.sqrt(fit.weights)
    return fit.design * sw[:, None], fit.residuals * sw


def white_cross_section_cov(
    fit: LeastSquaresFit,
    period_of_row,
    k_for_dof: Optional[int] = None,
) -> np.ndarray:
    """Period-clustered sandwich covariance with n/(n-K) correction.

    The meat sums X_t' u_t u_t' X_t over periods t on the weighted design and
    weighted residuals; ``k_for_dof`` is the parameter count K used in the
    degrees-of-freedom correction (defaults to the design's column count).
    """
    Z, u = _weighted_parts(fit)
    periods = np.asarray(period_of_row)
    if len(periods) != len(u):
        raise LinAlgSpecError("period_of_row length must match rows")
    n, k = Z.shape
    k_dof = k if k_for_dof is None else int(k_for_dof)
    if n <= k_dof:
        raise LinAlgSpecError(f"degrees-of-freedom correction undefined: n={n} <= K={k_dof}")
    bread = np.linalg.inv(Z.T @ Z)
    meat = np.zeros((k, k))
    for t in np.unique(periods):
        sel = periods == t
        if not sel.any():
            continue
        g = Z[sel].T @ u[sel]
        meat += np.outer(g, g)
    cov = bread @ meat @ bread * (n / (n - k_dof))
    return 0.5 * (cov + cov.T)


def durbin_watson(residuals, entity_of_row=None) -> float:
    """Durbin-Watson statistic; differences never span entity boundaries."""
    u = np.asarray(residuals, dtype=float)
    denom = float(u @ u)
    if denom == 0.0:
        raise LinAlgSpecError("Durbin-Watson undefined for all-zero residuals")
    if entity_of_row is None:
        num = float(np.sum(np.diff(u) ** 2))
    else:
        ents = np.asarray(entity_of_row)
        same = ents[1:] == ents[:-1]
        d = np.diff(u)
        num = float(np.sum(d[same] ** 2))
    return num / denom


def fit_statistics(
    fit: LeastSquaresFit,
    k_params: Optional[int] = None,
    entity_of_row=None,
    has_intercept: bool = True,
    weighted: bool = True,
) -> FitStatistics:
    """Summary block for a fit, in the (possibly weighted) estimation space.

    ``k_params`` is the total parameter count charged against the sample (the
    panel estimators pass slopes + N effects here); defaults to the design's
    column count. ``weighted=False`` recomputes the block from raw-unit
    residuals at the same coefficients.
    """
    if weighted:
        Z, u = _weighted_parts(fit)
        yv = fit.y if fit.weights is None else fit.y * np.sqrt(fit.weights)
    else:
        Z, u, yv = fit.design, fit.residuals, fit.y
    n = len(yv)
    k = int(k_params) if k_params is not None else Z.shape[1]
    ssr = float(u @ u)
    mean_dep = float(np.mean(yv))
    sd_dep = float(np.std(yv, ddof=1)) if n > 1 else 0.0
    tss = float(np.sum((yv - mean_dep) ** 2)) if has_intercept else float(yv @ yv)
    r2 = adj = fstat = pf = None
    if tss > 0:
        r2 = 1.0 - ssr / tss
        if n - k > 0:
            adj = 1.0 - (1.0 - r2) * (n - 1) / (n - k)
            if k > 1 and ssr > 0:
                fstat = ((tss - ssr) / (k - 1)) / (ssr / (n - k))
                pf = f_sf(fstat, k - 1, n - k)
            elif k > 1:
                fstat, pf = float("inf"), 0.0
    se_reg = float(np.sqrt(ssr / (n - k))) if n - k > 0 else float("nan")
    dw = durbin_watson(u, entity_of_row) if ssr > 0 else 0.0
    return FitStatistics(
        r_squared=r2,
        adjusted_r_squared=adj,
        se_of_regression=se_reg,
        sum_squared_resid=ssr,
        f_statistic=fstat,
        prob_f=pf,
        durbin_watson=dw,
        mean_dependent=mean_dep,
        sd_dependent=sd_dep,
        n_obs=n,
        k_params=k,
    )
