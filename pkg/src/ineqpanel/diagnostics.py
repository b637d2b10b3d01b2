"""Residual diagnostics for a fitted panel model.

The battery covers: the redundant-fixed-effects likelihood ratio, the Hausman
comparison of fixed and random effects, four cross-section-dependence tests
on the residual grid, Jarque-Bera normality, the n*R-squared serial-
correlation test with entity-safe residual lags, and the n*R-squared
heteroskedasticity test on squared standardized residuals.

All auxiliary regressions run on the raw (unweighted) residuals and the raw
regressor frame; every report row echoes the realized (n, df) of the design
it actually built.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .estimators import EstimationResult
from .linreg import LinAlgSpecError, ols
from .paneldata import EstimationFrame
from .probdist import chi2_sf, f_sf, normal_cdf

__all__ = [
    "DiagnosticError",
    "DiagnosticResult",
    "DiagnosticReport",
    "redundant_fe_lr",
    "hausman",
    "jarque_bera",
    "bpg_heteroskedasticity",
    "bp_serial",
    "cross_section_dependence",
    "regressor_correlation_matrix",
    "run_diagnostics",
]


class DiagnosticError(ValueError):
    """Raised when a diagnostic cannot be computed on the given inputs."""


@dataclass
class DiagnosticResult:
    """One battery row: statistic, degrees of freedom, probability."""

    name: str
    statistic: float
    probability: float
    df: str  # human-readable df spec, e.g. "chi2(5)" or "N(0,1) two-sided"
    n_used: Optional[int] = None
    df_used: Optional[int] = None
    reject_at_5pct: bool = False
    note: str = ""

    def __post_init__(self) -> None:
        self.reject_at_5pct = self.probability < 0.05


@dataclass
class DiagnosticReport:
    """Ordered battery results plus the regressor correlation matrix."""

    rows: list[DiagnosticResult]
    correlation_names: tuple[str, ...] = ()
    correlation_matrix: Optional[np.ndarray] = None
    extras: dict[str, float] = field(default_factory=dict)


def redundant_fe_lr(fe: EstimationResult, pooled: EstimationResult) -> DiagnosticResult:
    """Likelihood ratio for dropping the entity intercepts.

    LR = n ln(SSR_pooled / SSR_fe), chi-square with N-1 degrees of freedom;
    the companion F form is recorded in the note.
    """
    if fe.frame.n_rows != pooled.frame.n_rows or fe.variables != pooled.variables:
        raise DiagnosticError("fixed-effects and pooled fits must share sample and regressors")
    ssr_fe = fe.sum_squared_resid
    ssr_pooled = pooled.sum_squared_resid
    if ssr_fe <= 0:
        raise DiagnosticError("saturated fixed-effects fit (zero residual sum of squares)")
    n = fe.frame.n_rows
    n_ent = len(fe.entity_labels)
    k_slopes = len(fe.variables)
    df = n_ent - 1
    lr = n * np.log(ssr_pooled / ssr_fe)
    p = chi2_sf(max(lr, 0.0), df)
    df2 = n - n_ent - k_slopes
    f_stat = ((ssr_pooled - ssr_fe) / df) / (ssr_fe / df2)
    f_p = f_sf(max(f_stat, 0.0), df, df2)
    return DiagnosticResult(
        name="Redundant fixed effects LR",
        statistic=float(lr),
        probability=float(p),
        df=f"chi2({df})",
        n_used=n,
        df_used=df,
        note=f"F({df},{df2}) = {f_stat:.6g}, prob {f_p:.4f}",
    )


def hausman(fe: EstimationResult, re: EstimationResult) -> DiagnosticResult:
    """Fixed-versus-random effects comparison on the common slope block.

    H = d' (V_fe - V_re)^- d with d the slope gap; a variance gap that is not
    positive definite falls back to a pseudo-inverse and is flagged.
    """
    if fe.variables != re.variables:
        raise DiagnosticError("fixed and random effects fits must share the regressor set")
    d = fe.slopes - re.slopes
    gap = fe.classical_slope_covariance - re.classical_slope_covariance
    df = len(d)
    note = ""
    try:
        eigvals = np.linalg.eigvalsh(0.5 * (gap + gap.T))
        if eigvals.min() <= 0:
            raise np.linalg.LinAlgError
        h = float(d @ np.linalg.solve(gap, d))
    except np.linalg.LinAlgError:
        h = float(d @ np.linalg.pinv(0.5 * (gap + gap.T)) @ d)
        note = "variance gap not positive definite; pseudo-inverse used"
    h = max(h, 0.0)
    return DiagnosticResult(
        name="Hausman (correlated random effects)",
        statistic=h,
        probability=float(chi2_sf(h, df)),
        df=f"chi2({df})",
        n_used=fe.frame.n_rows,
        df_used=df,
        note=note,
    )


def jarque_bera(residuals) -> DiagnosticResult:
    """Moment-based normality test: n/6 (S^2 + (K-3)^2 / 4), chi-square(2)."""
    u = np.asarray(residuals, dtype=float)
    n = len(u)
    if n < 8:
        raise DiagnosticError(f"need at least 8 residuals, got {n}")
    c = u - u.mean()
    m2 = float(np.mean(c**2))
    if m2 <= 0:
        raise DiagnosticError("zero residual variance")
    skew = float(np.mean(c**3)) / m2**1.5
    kurt = float(np.mean(c**4)) / m2**2
    jb = n / 6.0 * (skew**2 + 0.25 * (kurt - 3.0) ** 2)
    return DiagnosticResult(
        name="Jarque-Bera",
        statistic=float(jb),
        probability=float(chi2_sf(jb, 2)),
        df="chi2(2)",
        n_used=n,
        df_used=2,
        note=f"skewness {skew:.4f}, kurtosis {kurt:.4f}",
    )


def bpg_heteroskedasticity(residuals, frame: EstimationFrame) -> DiagnosticResult:
    """n*R-squared test of the squared standardized residuals on the regressors."""
    u = np.asarray(residuals, dtype=float)
    if len(u) != frame.n_rows:
        raise DiagnosticError("residuals must align with the frame rows")
    sd = float(np.std(u))
    if sd <= 0:
        raise DiagnosticError("zero residual variance")
    z = (u / sd) ** 2
    try:
        aux = ols(frame.X, z, intercept=True, column_names=frame.x_names)
    except LinAlgSpecError as exc:
        raise DiagnosticError(f"auxiliary regression failed: {exc}") from exc
    n = frame.n_rows
    tss = float(np.sum((z - z.mean()) ** 2))
    ssr = float(aux.residuals @ aux.residuals)
    r2 = 1.0 - ssr / tss if tss > 0 else 0.0
    df = frame.X.shape[1]
    stat = n * r2
    return DiagnosticResult(
        name="Breusch-Pagan-Godfrey heteroskedasticity",
        statistic=float(stat),
        probability=float(chi2_sf(max(stat, 0.0), df)),
        df=f"chi2({df})",
        n_used=n,
        df_used=df,
    )


def bp_serial(residuals, frame: EstimationFrame, lags: int = 1) -> DiagnosticResult:
    """n*R-squared serial-correlation test with entity-safe residual lags.

    Residual lags never cross entity boundaries; rows without a complete lag
    set are dropped, so n shrinks by N*lags on a balanced frame.
    """
    if lags < 1:
        raise DiagnosticError("need at least one residual lag")
    u = np.asarray(residuals, dtype=float)
    if len(u) != frame.n_rows:
        raise DiagnosticError("residuals must align with the frame rows")
    sd = float(np.std(u))
    if sd <= 0:
        raise DiagnosticError("zero residual variance")
    z = u / sd
    keep_rows: list[int] = []
    lag_cols = [np.empty(0) for _ in range(lags)]
    lag_data: list[list[float]] = [[] for _ in range(lags)]
    for e in frame.entities:
        pos = np.nonzero(frame.row_entities == e)[0]
        if len(pos) <= lags:
            raise DiagnosticError(
                f"entity {e!r} has only {len(pos)} rows; cannot build {lags} residual lag(s)"
            )
        order = pos[np.argsort(frame.row_periods[pos])]
        for j, row in enumerate(order):
            if j < lags:
                continue
            keep_rows.append(int(row))
            for m in range(1, lags + 1):
                lag_data[m - 1].append(float(z[order[j - m]]))
    keep = np.array(keep_rows)
    X_aux = np.column_stack(
        [frame.X[keep]] + [np.array(col) for col in lag_data]
    )
    names = frame.x_names + tuple(f"resid(-{m})" for m in range(1, lags + 1))
    try:
        aux = ols(X_aux, z[keep], intercept=True, column_names=names)
    except LinAlgSpecError as exc:
        raise DiagnosticError(f"auxiliary regression failed: {exc}") from exc
    n = len(keep)
    dep = z[keep]
    tss = float(np.sum((dep - dep.mean()) ** 2))
    ssr = float(aux.residuals @ aux.residuals)
    r2 = 1.0 - ssr / tss if tss > 0 else 0.0
    stat = n * r2
    return DiagnosticResult(
        name="Breusch-Pagan serial correlation",
        statistic=float(stat),
        probability=float(chi2_sf(max(stat, 0.0), lags)),
        df=f"chi2({lags})",
        n_used=n,
        df_used=lags,
    )


def _residual_grid(residuals, frame: EstimationFrame) -> np.ndarray:
    """Rows as entities, columns as periods; requires a balanced frame."""
    if not frame.is_balanced:
        raise DiagnosticError("cross-section dependence tests need a balanced residual grid")
    periods = frame.periods_included
    n_ent = len(frame.entities)
    grid = np.full((n_ent, len(periods)), np.nan)
    p_index = {p: j for j, p in enumerate(periods)}
    u = np.asarray(residuals, dtype=float)
    for i, e in enumerate(frame.entities):
        pos = np.nonzero(frame.row_entities == e)[0]
        for row in pos:
            grid[i, p_index[int(frame.row_periods[row])]] = u[row]
    if np.isnan(grid).any():
        raise DiagnosticError("residual grid has holes")
    return grid


def cross_section_dependence(residuals, frame: EstimationFrame) -> list[DiagnosticResult]:
    """The four pairwise-correlation tests on the N x T residual grid.

    Returns, in order: the chi-square LM test, its normal-scaled version, the
    bias-corrected scaled version, and the cross-section dependence CD test.
    """
    grid = _residual_grid(residuals, frame)
    n_ent, t_len = grid.shape
    if n_ent < 2 or t_len < 3:
        raise DiagnosticError(f"need N >= 2 and T >= 3, got N={n_ent}, T={t_len}")
    centered = grid - grid.mean(axis=1, keepdims=True)
    norms = np.sqrt((centered**2).sum(axis=1))
    dead = np.nonzero(norms == 0)[0]
    if len(dead):
        raise DiagnosticError(
            f"entity {frame.entities[int(dead[0])]!r} has zero residual variance; "
            "pairwise correlations undefined"
        )
    corr = (centered @ centered.T) / np.outer(norms, norms)
    iu = np.triu_indices(n_ent, k=1)
    rho = corr[iu]
    n_pairs = len(rho)

    lm = t_len * float(np.sum(rho**2))
    lm_df = n_pairs
    scaled = np.sqrt(1.0 / (n_ent * (n_ent - 1.0))) * float(np.sum(t_len * rho**2 - 1.0))
    bias_corr = scaled - n_ent / (2.0 * (t_len - 1.0))
    cd = np.sqrt(2.0 * t_len / (n_ent * (n_ent - 1.0))) * float(np.sum(rho))

    def two_sided(z: float) -> float:
        return 2.0 * (1.0 - normal_cdf(abs(z)))

    return [
        DiagnosticResult(
            name="Breusch-Pagan LM",
            statistic=float(lm),
            probability=float(chi2_sf(max(lm, 0.0), lm_df)),
            df=f"chi2({lm_df})",
            n_used=n_ent * t_len,
            df_used=lm_df,
        ),
        DiagnosticResult(
            name="Pesaran scaled LM",
            statistic=float(scaled),
            probability=two_sided(scaled),
            df="N(0,1) two-sided",
            n_used=n_ent * t_len,
        ),
        DiagnosticResult(
            name="Bias-corrected scaled LM",
            statistic=float(bias_corr),
            probability=two_sided(bias_corr),
            df="N(0,1) two-sided",
            n_used=n_ent * t_len,
        ),
        DiagnosticResult(
            name="Pesaran CD",
            statistic=float(cd),
            probability=two_sided(cd),
            df="N(0,1) two-sided",
            n_used=n_ent * t_len,
        ),
    ]


def regressor_correlation_matrix(frame: EstimationFrame) -> tuple[tuple[str, ...], np.ndarray]:
    """Pairwise correlations of the regressors (multicollinearity screen)."""
    X = frame.X
    sd = X.std(axis=0)
    if (sd == 0).any():
        raise DiagnosticError("constant regressor; correlation matrix undefined")
    c = (X - X.mean(axis=0)) / sd
    return frame.x_names, (c.T @ c) / len(X)


def run_diagnostics(
    fe: EstimationResult,
    pooled: EstimationResult,
    re: EstimationResult,
    serial_lags: int = 1,
    residual_source: Optional[EstimationResult] = None,
) -> DiagnosticReport:
    """Assemble the full assumption battery in fixed report order.

    Model-comparison tests (redundancy LR, Hausman) use the unweighted fits;
    the residual tests run on ``residual_source`` when given (typically the
    weighted fit, whose residuals are kept in original units), else on ``fe``.
    """
    source = residual_source if residual_source is not None else fe
    rows: list[DiagnosticResult] = []
    rows.append(redundant_fe_lr(fe, pooled))
    rows.append(hausman(fe, re))
    rows.extend(cross_section_dependence(source.residuals, source.frame))
    rows.append(jarque_bera(source.residuals))
    rows.append(bp_serial(source.residuals, source.frame, lags=serial_lags))
    rows.append(bpg_heteroskedasticity(source.residuals, source.frame))
    names, corr = regressor_correlation_matrix(source.frame)
    return DiagnosticReport(rows=rows, correlation_names=names, correlation_matrix=corr)
