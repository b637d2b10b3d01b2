"""Unit-root tests: ADF and Phillips-Perron per series, pooled and averaged
panel tests, Fisher combinations, and the 12-slot stationarity battery.

All level tests share the same Dickey-Fuller regression core with Schwarz
lag selection on a common sample. Panel statistics are standardized with the
shipped adjustment/moment tables; long-run variances use a Bartlett kernel
with the deterministic bandwidth floor(4 * (n/100)^(2/9)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .linreg import LinAlgSpecError, ols
from .paneldata import PanelDataset
from .probdist import chi2_sf, normal_cdf
from .urtables import (
    TableRangeError,
    finite_sample_pvalue,
    ips_moments,
    llc_adjustment,
    mackinnon_pvalue,
)

__all__ = [
    "UnitRootError",
    "UnitRootResult",
    "BatterySlot",
    "BatteryVerdict",
    "adf_test",
    "pp_test",
    "llc_test",
    "breitung_test",
    "ips_test",
    "fisher_combine",
    "adf_fisher_test",
    "pp_fisher_test",
    "majority_verdict",
    "summary_battery",
    "BATTERY_SLOTS",
    "bartlett_bandwidth",
]

DETERMINISTICS = ("none", "constant", "constant_and_trend")

MIN_PP_LENGTH = 8
MIN_LLC_LENGTH = 5
MIN_BREITUNG_LENGTH = 6
P_VALUE_FLOOR = 1e-6  # Fisher combination clamp for surface output of 0


class UnitRootError(ValueError):
    """Raised for series that are too short or degenerate for a test."""


@dataclass
class UnitRootResult:
    """One test outcome: statistic, p-value and the lag orders used."""

    test: str
    deterministic: str
    statistic: float
    p_value: float
    lags: dict[str, int]
    null: str = "unit_root"
    alternative: str = "individual"  # "common" for pooled tests
    details: dict[str, float] = field(default_factory=dict)


def bartlett_bandwidth(n: int) -> int:
    return int(math.floor(4.0 * (n / 100.0) ** (2.0 / 9.0)))


def _long_run_variance(u: np.ndarray, demean: bool) -> float:
    u = np.asarray(u, dtype=float)
    if demean:
        u = u - u.mean()
    n = len(u)
    gamma0 = float(u @ u) / n
    q = bartlett_bandwidth(n)
    lrv = gamma0
    for j in range(1, min(q, n - 1) + 1):
        gamma_j = float(u[j:] @ u[:-j]) / n
        lrv += 2.0 * (1.0 - j / (q + 1.0)) * gamma_j
    return lrv


def _check_series(y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if y.ndim != 1:
        raise UnitRootError("series must be one-dimensional")
    if np.isnan(y).any():
        raise UnitRootError("series contains missing values")
    if np.ptp(y) == 0.0:
        raise UnitRootError("series is constant; the test regression is degenerate")
    return y


def _det_columns(rows: int, deterministic: str) -> list[np.ndarray]:
    cols: list[np.ndarray] = []
    if deterministic in ("constant", "constant_and_trend"):
        cols.append(np.ones(rows))
    if deterministic == "constant_and_trend":
        cols.append(np.arange(1.0, rows + 1.0))
    elif deterministic not in DETERMINISTICS:
        raise UnitRootError(f"unknown deterministic spec {deterministic!r}")
    return cols


def _df_design(y: np.ndarray, p: int, deterministic: str, start: Optional[int] = None):
    """Dickey-Fuller regression pieces: dep = diff rows, X = [level, dlags, det]."""
    dy = np.diff(y)
    n_all = len(dy)
    s = p if start is None else start
    if s < p:
        raise UnitRootError("start must be >= lag order")
    rows = n_all - s
    dep = dy[s:]
    cols = [y[s:-1]]
    for j in range(1, p + 1):
        cols.append(dy[s - j : n_all - j])
    cols.extend(_det_columns(rows, deterministic))
    X = np.column_stack(cols)
    return dep, X


@dataclass
class _DFFit:
    tau: float
    coef_level: float
    se_level: float
    ssr: float
    n_obs: int
    k_params: int
    residuals: np.ndarray


def _df_fit(y: np.ndarray, p: int, deterministic: str, start: Optional[int] = None) -> _DFFit:
    dep, X = _df_design(y, p, deterministic, start)
    rows, k = X.shape
    if rows < k + 2:
        raise UnitRootError(
            f"series too short: {rows} usable observations for {k} parameters"
        )
    try:
        fit = ols(X, dep, intercept=False)
    except LinAlgSpecError as exc:
        raise UnitRootError(f"degenerate test regression: {exc}") from exc
    ssr = float(fit.residuals @ fit.residuals)
    scale = max(float(dep @ dep), 1.0)
    if ssr <= scale * 1e-24:
        raise UnitRootError("residual variance is zero; the test regression is degenerate")
    return _DFFit(
        tau=float(fit.t_statistics[0]),
        coef_level=float(fit.coefficients[0]),
        se_level=float(fit.standard_errors[0]),
        ssr=ssr,
        n_obs=rows,
        k_params=k,
        residuals=fit.residuals,
    )


def _n_det(deterministic: str) -> int:
    return {"none": 0, "constant": 1, "constant_and_trend": 2}[deterministic]


def _feasible_max_lag(n_diff: int, deterministic: str, max_lag: int) -> int:
    # at lag p on the common sample: rows = n_diff - max -> need rows >= k + 2
    best = -1
    for p in range(max_lag + 1):
        rows = n_diff - p
        k = 1 + p + _n_det(deterministic)
        if rows >= k + 2:
            best = p
    return best


def _schwarz_lag(y: np.ndarray, deterministic: str, max_lag: int) -> int:
    """Lag order 0..max_lag minimizing the Schwarz criterion on a common sample."""
    n_diff = len(y) - 1
    cap = _feasible_max_lag(n_diff, deterministic, max_lag)
    if cap < 0:
        raise UnitRootError(
            f"series too short for a lag-{max_lag} test regression ({len(y)} observations)"
        )
    best_p, best_sic = 0, math.inf
    for p in range(cap + 1):
        fit = _df_fit(y, p, deterministic, start=cap)
        n_c = fit.n_obs
        sic = math.log(fit.ssr / n_c) + fit.k_params * math.log(n_c) / n_c
        if sic < best_sic - 1e-12:
            best_p, best_sic = p, sic
    return best_p


def adf_test(
    series,
    deterministic: str = "constant",
    max_lag: int = 1,
    criterion: str = "schwarz",
) -> UnitRootResult:
    """Augmented Dickey-Fuller test with Schwarz-selected augmentation order.

    The p-value comes from the shipped asymptotic response surface for the
    chosen deterministic spec.
    """
    if criterion != "schwarz":
        raise UnitRootError(f"unsupported lag selection criterion {criterion!r}")
    y = _check_series(series)
    p = _schwarz_lag(y, deterministic, max_lag)
    fit = _df_fit(y, p, deterministic)
    # finite-sample null quantiles are calibrated for the whole procedure
    # (selection included), keyed by the requested lag cap and series length
    pv = finite_sample_pvalue("adf", deterministic, max_lag, len(y) - 1, fit.tau)
    if pv is None:
        pv = mackinnon_pvalue(fit.tau, deterministic)
    return UnitRootResult(
        test="ADF",
        deterministic=deterministic,
        statistic=fit.tau,
        p_value=pv,
        lags={"series": p},
        details={"n_obs": fit.n_obs},
    )


def pp_test(series, deterministic: str = "constant") -> UnitRootResult:
    """Phillips-Perron Z-t test with Bartlett-kernel long-run variance."""
    y = _check_series(series)
    if len(y) < MIN_PP_LENGTH:
        raise UnitRootError(f"need at least {MIN_PP_LENGTH} observations, got {len(y)}")
    fit = _df_fit(y, 0, deterministic)
    n = fit.n_obs
    u = fit.residuals
    s2 = fit.ssr / (n - fit.k_params)
    gamma0 = fit.ssr / n
    lam2 = _long_run_variance(u, demean=False)
    if lam2 <= 0:
        raise UnitRootError("non-positive long-run variance estimate")
    z_tau = math.sqrt(gamma0 / lam2) * fit.tau - 0.5 * (lam2 - gamma0) / math.sqrt(
        lam2
    ) * (n * fit.se_level / math.sqrt(s2))
    pv = finite_sample_pvalue("pp", deterministic, 0, n, z_tau)
    if pv is None:
        pv = mackinnon_pvalue(z_tau, deterministic)
    return UnitRootResult(
        test="PP",
        deterministic=deterministic,
        statistic=z_tau,
        p_value=pv,
        lags={"series": 0},
        details={"n_obs": n, "bandwidth": bartlett_bandwidth(n), "long_run_variance": lam2},
    )


def _residualize(dep: np.ndarray, W: Optional[np.ndarray]) -> np.ndarray:
    if W is None or W.shape[1] == 0:
        return dep.astype(float)
    coef, *_ = np.linalg.lstsq(W, dep, rcond=None)
    return dep - W @ coef


def _series_map(series_by_entity) -> dict[str, np.ndarray]:
    if isinstance(series_by_entity, dict):
        items = series_by_entity.items()
    else:
        items = ((f"unit{i + 1}", s) for i, s in enumerate(series_by_entity))
    return {str(k): _check_series(v) for k, v in items}


def llc_test(series_by_entity, deterministic: str = "constant", max_lag: int = 1) -> UnitRootResult:
    """Pooled panel unit-root t-test with mean/std adjustments (common root).

    Per entity, the level and difference terms are orthogonalized against the
    lagged differences and deterministics, standardized by the entity's
    regression error, then pooled into a single t-ratio that is centered and
    scaled with the shipped adjustment table.
    """
    data = _series_map(series_by_entity)
    n_units = len(data)
    if n_units < 1:
        raise UnitRootError("empty panel")
    for name, y in data.items():
        if len(y) < MIN_LLC_LENGTH:
            raise UnitRootError(
                f"entity {name!r}: need at least {MIN_LLC_LENGTH} observations, got {len(y)}"
            )
    e_all, v_all = [], []
    ratios, lags, row_counts = [], {}, []
    for name, y in data.items():
        p = _schwarz_lag(y, deterministic, max_lag)
        lags[name] = p
        fit = _df_fit(y, p, deterministic)
        n_i = fit.n_obs
        s_i = math.sqrt(fit.ssr / (n_i - fit.k_params))
        dep, X = _df_design(y, p, deterministic)
        W = X[:, 1:] if X.shape[1] > 1 else None
        e = _residualize(dep, W)
        v = _residualize(X[:, 0], W)
        e_all.append(e / s_i)
        v_all.append(v / s_i)
        dy = np.diff(y)
        lrv = _long_run_variance(dy, demean=deterministic != "none")
        if lrv <= 0:
            raise UnitRootError(f"entity {name!r}: non-positive long-run variance")
        ratios.append(math.sqrt(lrv) / s_i)
        row_counts.append(n_i)

    e = np.concatenate(e_all)
    v = np.concatenate(v_all)
    svv = float(v @ v)
    if svv <= 0:
        raise UnitRootError("degenerate pooled regression")
    delta = float(v @ e) / svv
    resid = e - delta * v
    n_total = len(e)
    sig2 = float(resid @ resid) / n_total
    if sig2 <= 0:
        raise UnitRootError("zero pooled residual variance")
    se_delta = math.sqrt(sig2 / svv)
    t_delta = delta / se_delta
    t_tilde = float(np.mean(row_counts))
    s_bar = float(np.mean(ratios))
    mu, sigma = llc_adjustment(deterministic, t_tilde)
    adjustment = n_units * t_tilde * s_bar * se_delta / sig2
    t_star = (t_delta - adjustment * mu) / sigma
    return UnitRootResult(
        test="LLC",
        deterministic=deterministic,
        statistic=t_star,
        p_value=normal_cdf(t_star),
        lags=lags,
        alternative="common",
        details={"t_delta": t_delta, "t_tilde": t_tilde, "s_bar": s_bar},
    )


def breitung_test(series_by_entity, max_lag: int = 1) -> UnitRootResult:
    """Pooled trend-robust panel unit-root t-test (common root).

    Only the autoregressive portion is removed when constructing the proxies:
    differences are forward-orthogonalized and levels are de-trended through
    their endpoints, so no deterministic terms enter the pooled regression and
    the statistic is asymptotically standard normal without adjustment terms.
    """
    data = _series_map(series_by_entity)
    if not data:
        raise UnitRootError("empty panel")
    e_all, l_all, lags = [], [], {}
    for name, y in data.items():
        if len(y) < MIN_BREITUNG_LENGTH:
            raise UnitRootError(
                f"entity {name!r}: need at least {MIN_BREITUNG_LENGTH} observations, got {len(y)}"
            )
        p = _schwarz_lag(y, "constant_and_trend", max_lag)
        lags[name] = p
        # innovation scale from the full test regression (deterministics kept
        # there only; the proxies below stay un-detrended)
        fit = _df_fit(y, p, "constant_and_trend")
        s = math.sqrt(fit.ssr / (fit.n_obs - fit.k_params))
        dy = np.diff(y)
        n_all = len(dy)
        dep = dy[p:]
        lvl = y[p:-1]
        if p > 0:
            W = np.column_stack([dy[p - j : n_all - j] for j in range(1, p + 1)])
            dep = _residualize(dep, W)
            lvl = _residualize(lvl, W)
        n = len(dep)
        if n < 3:
            raise UnitRootError(f"entity {name!r}: too few rows after prewhitening")
        e = dep / s
        lv = lvl / s
        # forward (Helmert) orthogonalization drops the last difference and
        # removes any drift without estimating it
        suffix_sums = np.cumsum(e[::-1])[::-1]
        e_star = np.empty(n - 1)
        for t in range(n - 1):
            remaining = n - 1 - t
            mean_ahead = suffix_sums[t + 1] / remaining
            e_star[t] = math.sqrt(remaining / (remaining + 1.0)) * (e[t] - mean_ahead)
        # levels de-trended through the full difference sum; the fraction of
        # the total sum keeps the proxies orthogonal under the null
        total = float(e.sum())
        frac = np.arange(n) / float(n)
        l_star = (lv - lv[0] - frac * total)[: n - 1]
        e_all.append(e_star)
        l_all.append(l_star)
    e = np.concatenate(e_all)
    lv = np.concatenate(l_all)
    sll = float(lv @ lv)
    if sll <= 0:
        raise UnitRootError("degenerate pooled regression")
    delta = float(lv @ e) / sll
    resid = e - delta * lv
    n_total = len(e)
    sig2 = float(resid @ resid) / (n_total - 1)
    stat = delta * math.sqrt(sll) / math.sqrt(sig2)
    return UnitRootResult(
        test="Breitung",
        deterministic="constant_and_trend",
        statistic=stat,
        p_value=normal_cdf(stat),
        lags=lags,
        alternative="common",
    )


def ips_test(series_by_entity, deterministic: str = "constant", max_lag: int = 1) -> UnitRootResult:
    """Averaged-t panel unit-root test (individual roots).

    The per-entity Dickey-Fuller t-ratios are averaged and standardized with
    tabulated means/variances indexed by each entity's regression length and
    lag order. Only defined with a constant (with or without trend).
    """
    if deterministic not in ("constant", "constant_and_trend"):
        raise UnitRootError("averaged-t test requires a constant or constant+trend spec")
    data = _series_map(series_by_entity)
    n_units = len(data)
    if n_units < 1:
        raise UnitRootError("empty panel")
    taus, means, variances, lags = [], [], [], {}
    for name, y in data.items():
        p = _schwarz_lag(y, deterministic, max_lag)
        lags[name] = p
        fit = _df_fit(y, p, deterministic)
        m, v = ips_moments(deterministic, p, fit.n_obs)
        taus.append(fit.tau)
        means.append(m)
        variances.append(v)
    t_bar = float(np.mean(taus))
    w_stat = math.sqrt(n_units) * (t_bar - float(np.mean(means))) / math.sqrt(float(np.mean(variances)))
    return UnitRootResult(
        test="IPS",
        deterministic=deterministic,
        statistic=w_stat,
        p_value=normal_cdf(w_stat),
        lags=lags,
        details={"t_bar": t_bar},
    )


def fisher_combine(p_values) -> tuple[float, int, float]:
    """Combine independent p-values: (-2 sum(ln p), 2N, chi-square tail)."""
    ps = [float(p) for p in p_values]
    if not ps:
        raise UnitRootError("no p-values to combine")
    for p in ps:
        if not (0.0 < p <= 1.0):
            raise UnitRootError(f"p-values must lie in (0, 1], got {p}")
    stat = -2.0 * sum(math.log(p) for p in ps)
    df = 2 * len(ps)
    return stat, df, chi2_sf(stat, df)


def _fisher_family(
    runner: Callable[[np.ndarray], UnitRootResult],
    series_by_entity,
    test_name: str,
    deterministic: str,
) -> UnitRootResult:
    data = _series_map(series_by_entity)
    ps, lags = [], {}
    for name, y in data.items():
        res = runner(y)
        ps.append(min(max(res.p_value, P_VALUE_FLOOR), 1.0))
        lags[name] = res.lags["series"]
    stat, df, p = fisher_combine(ps)
    return UnitRootResult(
        test=test_name,
        deterministic=deterministic,
        statistic=stat,
        p_value=p,
        lags=lags,
        details={"df": df},
    )


def adf_fisher_test(series_by_entity, deterministic: str = "constant", max_lag: int = 1) -> UnitRootResult:
    """Fisher chi-square combination of per-entity ADF p-values."""
    return _fisher_family(
        lambda y: adf_test(y, deterministic, max_lag), series_by_entity, "ADF-Fisher", deterministic
    )


def pp_fisher_test(series_by_entity, deterministic: str = "constant") -> UnitRootResult:
    """Fisher chi-square combination of per-entity Phillips-Perron p-values."""
    return _fisher_family(
        lambda y: pp_test(y, deterministic), series_by_entity, "PP-Fisher", deterministic
    )


# the fixed 12-slot battery: (test family, deterministic spec)
BATTERY_SLOTS: tuple[tuple[str, str], ...] = (
    ("LLC", "constant_and_trend"),
    ("LLC", "constant"),
    ("LLC", "none"),
    ("Breitung", "constant_and_trend"),
    ("IPS", "constant_and_trend"),
    ("IPS", "constant"),
    ("ADF-Fisher", "constant_and_trend"),
    ("ADF-Fisher", "constant"),
    ("ADF-Fisher", "none"),
    ("PP-Fisher", "constant_and_trend"),
    ("PP-Fisher", "constant"),
    ("PP-Fisher", "none"),
)


@dataclass
class BatterySlot:
    """One of the 12 battery configurations and its outcome (or skip reason)."""

    test: str
    deterministic: str
    result: Optional[UnitRootResult]
    skipped: Optional[str] = None


@dataclass
class BatteryVerdict:
    """Vote counts at level and first difference plus the integration order."""

    variable: str
    level_slots: list[BatterySlot]
    level_votes: int
    level_applicable: int
    diff_slots: Optional[list[BatterySlot]]
    diff_votes: Optional[int]
    diff_applicable: Optional[int]
    order: str  # "I(0)" | "I(1)" | "undetermined"
    threshold: float


def _entity_series(panel: PanelDataset, var: str) -> dict[str, np.ndarray]:
    grid = panel.values(var)
    out: dict[str, np.ndarray] = {}
    for i, entity in enumerate(panel.cross_sections):
        row = grid[i]
        obs = ~np.isnan(row)
        if not obs.any():
            raise UnitRootError(f"entity {entity!r} has no observations for {var!r}")
        j0, j1 = np.argmax(obs), len(row) - np.argmax(obs[::-1])
        if np.isnan(row[j0:j1]).any():
            raise UnitRootError(f"entity {entity!r} has interior gaps in {var!r}")
        out[entity] = row[j0:j1].astype(float)
    return out


def _run_battery(data: dict[str, np.ndarray], max_lag: int, threshold: float) -> tuple[list[BatterySlot], int, int]:
    slots: list[BatterySlot] = []
    votes = applicable = 0
    for test, det in BATTERY_SLOTS:
        try:
            if test == "LLC":
                res = llc_test(data, det, max_lag)
            elif test == "Breitung":
                res = breitung_test(data, max_lag)
            elif test == "IPS":
                res = ips_test(data, det, max_lag)
            elif test == "ADF-Fisher":
                res = adf_fisher_test(data, det, max_lag)
            else:
                res = pp_fisher_test(data, det)
        except (UnitRootError, TableRangeError) as exc:
            slots.append(BatterySlot(test=test, deterministic=det, result=None, skipped=str(exc)))
            continue
        slots.append(BatterySlot(test=test, deterministic=det, result=res))
        applicable += 1
        if res.p_value < threshold:
            votes += 1
    return slots, votes, applicable


def majority_verdict(
    level_votes: int,
    level_applicable: int,
    diff_votes: Optional[int],
    diff_applicable: Optional[int],
) -> str:
    """Integration-order verdict from vote counts: strict majority rules.

    A strict majority of applicable slots at level gives I(0) (7 of 12
    qualifies, 6 of 12 does not); otherwise a strict majority at first
    difference gives I(1); otherwise the order is undetermined.
    """
    if level_applicable > 0 and level_votes * 2 > level_applicable:
        return "I(0)"
    if diff_votes is None or diff_applicable is None:
        return "undetermined"
    if diff_applicable > 0 and diff_votes * 2 > diff_applicable:
        return "I(1)"
    return "undetermined"


def summary_battery(
    panel: PanelDataset,
    var: str,
    max_lag: int = 1,
    threshold: float = 0.05,
) -> BatteryVerdict:
    """Run the 12-slot battery at level and, short of a majority, at first
    difference; skipped (degenerate) slots shrink the applicable count.

    A slot confirms stationarity when its p-value is below ``threshold``; the
    verdict needs a strict majority of the applicable slots.
    """
    data = _entity_series(panel, var)
    level_slots, level_votes, level_app = _run_battery(data, max_lag, threshold)
    if majority_verdict(level_votes, level_app, None, None) == "I(0)":
        return BatteryVerdict(
            variable=var,
            level_slots=level_slots,
            level_votes=level_votes,
            level_applicable=level_app,
            diff_slots=None,
            diff_votes=None,
            diff_applicable=None,
            order="I(0)",
            threshold=threshold,
        )
    diff_data = {k: np.diff(v) for k, v in data.items()}
    diff_slots, diff_votes, diff_app = _run_battery(diff_data, max_lag, threshold)
    return BatteryVerdict(
        variable=var,
        level_slots=level_slots,
        level_votes=level_votes,
        level_applicable=level_app,
        diff_slots=diff_slots,
        diff_votes=diff_votes,
        diff_applicable=diff_app,
        order=majority_verdict(level_votes, level_app, diff_votes, diff_app),
        threshold=threshold,
    )
