"""Panel estimators: pooled OLS, fixed effects (within and LSDV), random
effects, and the cross-section-weighted EGLS fixed-effects pipeline.

The headline pipeline runs one unweighted within fit, derives one inverse-
variance weight per entity from its residuals, refits under those weights and
reports White cross-section (period-clustered) standard errors, mirroring the
one-step weighting convention of panel EGLS software.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .linreg import (
    FitStatistics,
    LeastSquaresFit,
    LinAlgSpecError,
    fit_statistics,
    ols,
    white_cross_section_cov,
    wls,
)
from .paneldata import EstimationFrame, PanelDataset, VariableSpec, estimation_frame
from .probdist import student_t_sf

__all__ = [
    "EstimationError",
    "EstimationSpec",
    "EstimationResult",
    "ErrorComponents",
    "pooled_ols",
    "fixed_effects_within",
    "fixed_effects_lsdv",
    "random_effects_swamy_arora",
    "cross_section_weights",
    "panel_egls_fe",
]


class EstimationError(ValueError):
    """Raised when a model cannot be estimated on the given frame."""


@dataclass(frozen=True)
class EstimationSpec:
    """Regression configuration: variables, effects, weighting, covariance."""

    dependent: VariableSpec
    regressors: tuple[VariableSpec, ...]
    effects: str = "cross_section_fixed"  # none | cross_section_fixed | cross_section_random
    weighting: str = "none"  # none | cross_section_weights
    covariance: str = "classical"  # classical | white_cross_section

    def __post_init__(self) -> None:
        labels = [r.label for r in self.regressors]
        if len(set(labels)) != len(labels):
            raise EstimationError("regressor labels must be distinct")
        if self.dependent.label in labels:
            raise EstimationError("dependent variable cannot be a regressor at the same lag")
        if self.effects not in ("none", "cross_section_fixed", "cross_section_random"):
            raise EstimationError(f"unknown effects kind {self.effects!r}")
        if self.weighting not in ("none", "cross_section_weights"):
            raise EstimationError(f"unknown weighting kind {self.weighting!r}")
        if self.covariance not in ("classical", "white_cross_section"):
            raise EstimationError(f"unknown covariance kind {self.covariance!r}")

    def all_variables(self) -> tuple[VariableSpec, ...]:
        return (self.dependent,) + tuple(self.regressors)


@dataclass
class ErrorComponents:
    """Random-effects variance decomposition and quasi-demeaning fraction."""

    sigma_idiosyncratic2: float
    sigma_entity2: float
    theta: float
    clamped: bool = False


@dataclass
class EstimationResult:
    """Slope block, recovered intercept and effects, and both statistics blocks."""

    method: str
    variables: tuple[str, ...]
    slopes: np.ndarray
    slope_se: np.ndarray
    slope_t: np.ndarray
    slope_p: np.ndarray
    slope_covariance: np.ndarray
    classical_slope_covariance: np.ndarray
    covariance_kind: str
    intercept: float
    intercept_se: float
    intercept_t: float
    intercept_p: float
    effects: np.ndarray  # per entity, sum to zero; all-zero when no fixed effects
    entity_labels: tuple[str, ...]
    residuals: np.ndarray  # raw units, including effects, aligned to frame rows
    frame: EstimationFrame
    df_resid: int
    weighted_stats: FitStatistics
    unweighted_stats: Optional[FitStatistics] = None
    entity_weights: Optional[dict[str, float]] = None

    @property
    def n_obs(self) -> int:
        return self.frame.n_rows

    @property
    def sum_squared_resid(self) -> float:
        return float(self.residuals @ self.residuals)

    def coefficient_table(self) -> list[tuple[str, float, float, float, float]]:
        """Rows of (name, coefficient, std error, t, prob); intercept last."""
        rows = [
            (name, float(b), float(se), float(t), float(p))
            for name, b, se, t, p in zip(
                self.variables, self.slopes, self.slope_se, self.slope_t, self.slope_p
            )
        ]
        rows.append(("C", self.intercept, self.intercept_se, self.intercept_t, self.intercept_p))
        return rows


def _check_frame_for_effects(frame: EstimationFrame) -> None:
    if len(frame.entities) < 2:
        raise EstimationError("fixed effects need at least 2 cross-sections")
    for e, c in frame.entity_counts.items():
        if c < 2:
            raise EstimationError(f"cross-section {e!r} has fewer than 2 usable periods")
    if not frame.is_balanced:
        raise EstimationError(
            "estimation frame is unbalanced after alignment; the panel estimators require a balanced frame"
        )


def _entity_positions(frame: EstimationFrame) -> dict[str, np.ndarray]:
    return {e: np.nonzero(frame.row_entities == e)[0] for e in frame.entities}


def _row_weights(frame: EstimationFrame, entity_weights: Optional[dict[str, float]]) -> Optional[np.ndarray]:
    if entity_weights is None:
        return None
    missing = [e for e in frame.entities if e not in entity_weights]
    if missing:
        raise EstimationError(f"missing weights for entities {missing}")
    w = np.empty(frame.n_rows)
    for e, pos in _entity_positions(frame).items():
        w[pos] = entity_weights[e]
    # normalize to mean 1: coefficients and covariances are invariant to the
    # weight scale, and the weighted statistics stay on the data's own scale
    return w * (len(w) / w.sum())


def _full_dummy_design(frame: EstimationFrame) -> tuple[np.ndarray, tuple[str, ...]]:
    """Intercept + regressors + N-1 entity indicators (last entity baseline)."""
    n = frame.n_rows
    ents = frame.entities
    dummies = np.zeros((n, len(ents) - 1))
    pos = _entity_positions(frame)
    for i, e in enumerate(ents[:-1]):
        dummies[pos[e], i] = 1.0
    Z = np.column_stack([np.ones(n), frame.X, dummies])
    names = ("C",) + frame.x_names + tuple(f"[{e}]" for e in ents[:-1])
    return Z, names


def _fe_engine(
    frame: EstimationFrame,
    entity_weights: Optional[dict[str, float]],
    covariance: str,
    method: str,
) -> EstimationResult:
    """Within-transform fixed-effects fit with full-design covariance reporting."""
    _check_frame_for_effects(frame)
    n = frame.n_rows
    ents = frame.entities
    n_ent = len(ents)
    k_slopes = frame.X.shape[1]
    k_total = k_slopes + n_ent
    df = n - k_total
    if df <= 0:
        raise EstimationError(f"not enough observations: n={n}, slopes={k_slopes}, entities={n_ent}")

    pos = _entity_positions(frame)
    y_dm = frame.y.astype(float).copy()
    X_dm = frame.X.astype(float).copy()
    y_means = np.empty(n_ent)
    x_means = np.empty((n_ent, k_slopes))
    for i, e in enumerate(ents):
        p = pos[e]
        y_means[i] = frame.y[p].mean()
        x_means[i] = frame.X[p].mean(axis=0)
        y_dm[p] -= y_means[i]
        X_dm[p] -= x_means[i]

    row_w = _row_weights(frame, entity_weights)
    if row_w is None:
        inner = ols(X_dm, y_dm, intercept=False, column_names=frame.x_names, df_resid=df)
    else:
        inner = wls(X_dm, y_dm, row_w, intercept=False, column_names=frame.x_names, df_resid=df)
    slopes = inner.coefficients

    alphas = y_means - x_means @ slopes
    intercept = float(alphas.mean())
    effects = alphas - intercept
    resid = y_dm - X_dm @ slopes  # == y - alpha_i - X b

    # covariance on the full dummy design so the reported C carries a standard
    # error consistent with the d.f.-corrected parameter count
    Z_full, _ = _full_dummy_design(frame)
    sw = np.ones(n) if row_w is None else np.sqrt(row_w)
    Zw = Z_full * sw[:, None]
    uw = resid * sw
    ssr_w = float(uw @ uw)
    ztz_inv = np.linalg.inv(Zw.T @ Zw)
    v_classical = (ssr_w / df) * ztz_inv
    if covariance == "white_cross_section":
        meat = np.zeros((k_total, k_total))
        for t in np.unique(frame.row_periods):
            sel = frame.row_periods == t
            g = Zw[sel].T @ uw[sel]
            meat += np.outer(g, g)
        v_selected = ztz_inv @ meat @ ztz_inv * (n / (n - k_total))
        v_selected = 0.5 * (v_selected + v_selected.T)
    else:
        v_selected = v_classical

    sl = slice(1, 1 + k_slopes)
    slope_cov = v_selected[sl, sl]
    classical_slope_cov = v_classical[sl, sl]
    # reported intercept is the average entity intercept: C_raw + mean(dummies)
    L = np.zeros(k_total)
    L[0] = 1.0
    L[1 + k_slopes:] = 1.0 / n_ent
    ivar = float(L @ v_selected @ L)

    slope_se = np.sqrt(np.diag(slope_cov))
    slope_t = np.divide(slopes, slope_se, out=np.full_like(slope_se, np.inf), where=slope_se > 0)
    slope_p = np.array([2.0 * student_t_sf(abs(t), df) for t in slope_t])
    i_se = float(np.sqrt(max(ivar, 0.0)))
    i_t = intercept / i_se if i_se > 0 else float("inf")
    i_p = 2.0 * student_t_sf(abs(i_t), df)

    stats_fit = LeastSquaresFit(
        coefficients=np.zeros(1),
        residuals=resid,
        covariance=np.zeros((1, 1)),
        standard_errors=np.zeros(1),
        t_statistics=np.zeros(1),
        probabilities=np.zeros(1),
        df_resid=df,
        design=Z_full,
        y=frame.y,
        weights=row_w,
        column_names=("C",),
    )
    weighted_stats = fit_statistics(stats_fit, k_params=k_total, entity_of_row=frame.row_entities)
    unweighted_stats = None
    if row_w is not None:
        unweighted_stats = fit_statistics(
            stats_fit, k_params=k_total, entity_of_row=frame.row_entities, weighted=False
        )

    return EstimationResult(
        method=method,
        variables=frame.x_names,
        slopes=slopes,
        slope_se=slope_se,
        slope_t=slope_t,
        slope_p=slope_p,
        slope_covariance=slope_cov,
        classical_slope_covariance=classical_slope_cov,
        covariance_kind=covariance,
        intercept=intercept,
        intercept_se=i_se,
        intercept_t=i_t,
        intercept_p=i_p,
        effects=effects,
        entity_labels=ents,
        residuals=resid,
        frame=frame,
        df_resid=df,
        weighted_stats=weighted_stats,
        unweighted_stats=unweighted_stats,
        entity_weights=dict(entity_weights) if entity_weights is not None else None,
    )


def pooled_ols(panel: PanelDataset, spec: EstimationSpec) -> EstimationResult:
    """Common-intercept OLS over the aligned frame (no effects)."""
    frame = estimation_frame(panel, spec.all_variables())
    fit = ols(frame.X, frame.y, intercept=True, column_names=frame.x_names)
    if spec.covariance == "white_cross_section":
        fit = fit.with_covariance(
            white_cross_section_cov(fit, frame.row_periods), "white_cross_section"
        )
    k = fit.design.shape[1]
    stats = fit_statistics(fit, k_params=k, entity_of_row=frame.row_entities)
    return EstimationResult(
        method="Pooled OLS",
        variables=frame.x_names,
        slopes=fit.coefficients[1:],
        slope_se=fit.standard_errors[1:],
        slope_t=fit.t_statistics[1:],
        slope_p=fit.probabilities[1:],
        slope_covariance=fit.covariance[1:, 1:],
        classical_slope_covariance=(
            fit.covariance[1:, 1:]
            if spec.covariance == "classical"
            else ols(frame.X, frame.y, intercept=True, column_names=frame.x_names).covariance[1:, 1:]
        ),
        covariance_kind=spec.covariance,
        intercept=float(fit.coefficients[0]),
        intercept_se=float(fit.standard_errors[0]),
        intercept_t=float(fit.t_statistics[0]),
        intercept_p=float(fit.probabilities[0]),
        effects=np.zeros(len(frame.entities)),
        entity_labels=frame.entities,
        residuals=fit.residuals,
        frame=frame,
        df_resid=fit.df_resid,
        weighted_stats=stats,
    )


def fixed_effects_within(panel: PanelDataset, spec: EstimationSpec) -> EstimationResult:
    """Fixed effects by within transformation with recovered intercepts."""
    frame = estimation_frame(panel, spec.all_variables())
    return _fe_engine(frame, None, spec.covariance, "Fixed effects (within)")


def fixed_effects_lsdv(panel: PanelDataset, spec: EstimationSpec) -> EstimationResult:
    """Fixed effects by explicit least-squares dummy variables.

    Runs plain OLS on the intercept + N-1 indicator design and re-normalizes
    the reported effects to sum to zero. Slopes agree with the within route.
    """
    frame = estimation_frame(panel, spec.all_variables())
    _check_frame_for_effects(frame)
    Z, names = _full_dummy_design(frame)
    fit = ols(Z, frame.y, intercept=False, column_names=names)
    if spec.covariance == "white_cross_section":
        fit = fit.with_covariance(
            white_cross_section_cov(fit, frame.row_periods), "white_cross_section"
        )
    k_slopes = frame.X.shape[1]
    n_ent = len(frame.entities)
    base = float(fit.coefficients[0])
    dummy_coefs = np.concatenate([fit.coefficients[1 + k_slopes:], [0.0]])
    alphas = base + dummy_coefs
    intercept = float(alphas.mean())
    effects = alphas - intercept
    L = np.zeros(Z.shape[1])
    L[0] = 1.0
    L[1 + k_slopes:] = 1.0 / n_ent
    ivar = float(L @ fit.covariance @ L)
    i_se = float(np.sqrt(max(ivar, 0.0)))
    i_t = intercept / i_se if i_se > 0 else float("inf")
    i_p = 2.0 * student_t_sf(abs(i_t), fit.df_resid)
    sl = slice(1, 1 + k_slopes)
    classical_cov = fit.covariance[sl, sl]
    if spec.covariance == "white_cross_section":
        classical_cov = ols(Z, frame.y, intercept=False, column_names=names).covariance[sl, sl]
    stats = fit_statistics(fit, k_params=Z.shape[1], entity_of_row=frame.row_entities)
    return EstimationResult(
        method="Fixed effects (LSDV)",
        variables=frame.x_names,
        slopes=fit.coefficients[sl],
        slope_se=fit.standard_errors[sl],
        slope_t=fit.t_statistics[sl],
        slope_p=fit.probabilities[sl],
        slope_covariance=fit.covariance[sl, sl],
        classical_slope_covariance=classical_cov,
        covariance_kind=spec.covariance,
        intercept=intercept,
        intercept_se=i_se,
        intercept_t=i_t,
        intercept_p=i_p,
        effects=effects,
        entity_labels=frame.entities,
        residuals=fit.residuals,
        frame=frame,
        df_resid=fit.df_resid,
        weighted_stats=stats,
    )


def random_effects_swamy_arora(
    panel: PanelDataset,
    spec: EstimationSpec,
    theta_override: Optional[float] = None,
) -> tuple[EstimationResult, ErrorComponents]:
    """Random effects GLS with Swamy-Arora variance components.

    theta = 1 - sqrt(sigma_e^2 / (sigma_e^2 + T sigma_u^2)); theta = 0 reduces
    to pooled OLS and theta -> 1 approaches the within estimator. A negative
    entity variance estimate is clamped to zero and flagged.
    """
    frame = estimation_frame(panel, spec.all_variables())
    _check_frame_for_effects(frame)
    n = frame.n_rows
    ents = frame.entities
    n_ent = len(ents)
    k_slopes = frame.X.shape[1]
    t_len = n // n_ent

    within = _fe_engine(frame, None, "classical", "Fixed effects (within)")
    sigma_e2 = within.sum_squared_resid / (n - n_ent - k_slopes)

    pos = _entity_positions(frame)
    y_means = np.array([frame.y[pos[e]].mean() for e in ents])
    x_means = np.vstack([frame.X[pos[e]].mean(axis=0) for e in ents])
    clamped = False
    if n_ent <= k_slopes + 1:
        # between regression is saturated; no information on the entity variance
        sigma_u2 = 0.0
        clamped = True
    else:
        between = ols(x_means, y_means, intercept=True, column_names=frame.x_names)
        ssr_b = float(between.residuals @ between.residuals)
        sigma_between2 = ssr_b / (n_ent - k_slopes - 1)
        sigma_u2 = sigma_between2 - sigma_e2 / t_len
        if sigma_u2 < 0:
            sigma_u2 = 0.0
            clamped = True
    theta = 1.0 - np.sqrt(sigma_e2 / (sigma_e2 + t_len * sigma_u2)) if sigma_u2 > 0 else 0.0
    if theta_override is not None:
        theta = float(theta_override)
    components = ErrorComponents(
        sigma_idiosyncratic2=float(sigma_e2),
        sigma_entity2=float(max(sigma_u2, 0.0)),
        theta=float(theta),
        clamped=clamped,
    )

    y_star = frame.y.astype(float).copy()
    X_star = frame.X.astype(float).copy()
    for i, e in enumerate(ents):
        p = pos[e]
        y_star[p] -= theta * y_means[i]
        X_star[p] -= theta * x_means[i]
    const = np.full(n, 1.0 - theta)
    if theta >= 1.0 - 1e-12:
        # degenerate GLS: intercept column vanishes, slopes equal the within fit
        re_slopes = within.slopes
        re_cov = within.classical_slope_covariance
        resid = frame.y - frame.X @ re_slopes - (y_means - x_means @ re_slopes).mean()
        intercept = float((y_means - x_means @ re_slopes).mean())
        i_se = float("nan")
        df = within.df_resid
    else:
        Z = np.column_stack([const, X_star])
        df = n - k_slopes - 1
        fit = ols(Z, y_star, intercept=False, column_names=("C",) + frame.x_names, df_resid=df)
        re_slopes = fit.coefficients[1:]
        re_cov = fit.covariance[1:, 1:]
        intercept = float(fit.coefficients[0])
        i_se = float(fit.standard_errors[0])
        resid = frame.y - intercept - frame.X @ re_slopes
    se = np.sqrt(np.diag(re_cov))
    tstat = np.divide(re_slopes, se, out=np.full_like(se, np.inf), where=se > 0)
    pvals = np.array([2.0 * student_t_sf(abs(t), df) for t in tstat])
    i_t = intercept / i_se if i_se and i_se > 0 else float("nan")
    i_p = 2.0 * student_t_sf(abs(i_t), df) if np.isfinite(i_t) else float("nan")

    stats_fit = LeastSquaresFit(
        coefficients=np.zeros(1),
        residuals=resid,
        covariance=np.zeros((1, 1)),
        standard_errors=np.zeros(1),
        t_statistics=np.zeros(1),
        probabilities=np.zeros(1),
        df_resid=df,
        design=np.column_stack([np.ones(n), frame.X]),
        y=frame.y,
        weights=None,
        column_names=("C",) + frame.x_names,
    )
    stats = fit_statistics(stats_fit, k_params=k_slopes + 1, entity_of_row=frame.row_entities)
    result = EstimationResult(
        method="Random effects (Swamy-Arora)",
        variables=frame.x_names,
        slopes=re_slopes,
        slope_se=se,
        slope_t=tstat,
        slope_p=pvals,
        slope_covariance=re_cov,
        classical_slope_covariance=re_cov,
        covariance_kind="classical",
        intercept=intercept,
        intercept_se=i_se,
        intercept_t=i_t,
        intercept_p=i_p,
        effects=np.zeros(n_ent),
        entity_labels=ents,
        residuals=resid,
        frame=frame,
        df_resid=df,
        weighted_stats=stats,
    )
    return result, components


def cross_section_weights(first_stage: EstimationResult, divisor: str = "periods") -> dict[str, float]:
    """Inverse residual-variance weight per entity from a first-stage fit.

    sigma_i^2 divides by the entity's period count by default; pass
    divisor="periods_minus_k" for the small-sample alternative.
    """
    if divisor not in ("periods", "periods_minus_k"):
        raise EstimationError(f"unknown sigma divisor {divisor!r}")
    frame = first_stage.frame
    k_slopes = frame.X.shape[1]
    weights: dict[str, float] = {}
    for e in frame.entities:
        p = np.nonzero(frame.row_entities == e)[0]
        ssr = float(first_stage.residuals[p] @ first_stage.residuals[p])
        d = len(p) if divisor == "periods" else max(len(p) - k_slopes, 1)
        sigma2 = ssr / d
        if sigma2 <= 0.0:
            raise EstimationError(
                f"entity {e!r} has a perfect first-stage fit (zero residual variance); "
                "cross-section weighting is undefined, review the specification"
            )
        weights[e] = 1.0 / sigma2
    return weights


def panel_egls_fe(
    panel: PanelDataset,
    spec: EstimationSpec,
    sigma_divisor: str = "periods",
) -> EstimationResult:
    """One-step cross-section-weighted EGLS with fixed effects.

    Pipeline: unweighted within fit -> per-entity inverse-variance weights ->
    weighted within fit -> White cross-section covariance on the weighted
    data (when requested). Exactly one weighting iteration is performed.
    """
    if spec.effects != "cross_section_fixed":
        raise EstimationError("panel EGLS is defined here for cross-section fixed effects")
    if spec.weighting != "cross_section_weights":
        raise EstimationError("spec.weighting must be cross_section_weights")
    frame = estimation_frame(panel, spec.all_variables())
    first = _fe_engine(frame, None, "classical", "Fixed effects (within)")
    weights = cross_section_weights(first, divisor=sigma_divisor)
    return _fe_engine(frame, weights, spec.covariance, "Panel EGLS (cross-section weights)")
