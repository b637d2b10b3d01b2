"""Rendering of estimation, unit-root and diagnostic results.

Every renderer is deterministic: fixed field order, fixed float formatting,
no timestamps. JSON payloads carry a schema_version and are serialized with
sorted keys so that parse -> re-render reproduces identical bytes.
"""

from __future__ import annotations

import json
from typing import Optional

from . import JSON_SCHEMA_VERSION
from .diagnostics import DiagnosticReport
from .estimators import EstimationResult
from .linreg import FitStatistics
from .unitroot import BatteryVerdict

__all__ = [
    "dump_json",
    "estimate_to_dict",
    "render_estimate_text",
    "estimate_to_csv_rows",
    "diagnostics_to_dict",
    "render_diagnostics_text",
    "diagnostics_to_csv_rows",
    "battery_to_dict",
    "render_battery_text",
    "battery_to_csv_rows",
]


def dump_json(payload: dict) -> str:
    body = dict(payload)
    body.setdefault("schema_version", JSON_SCHEMA_VERSION)
    return json.dumps(body, indent=2, sort_keys=True) + "\n"


def _num(x: float) -> str:
    if x != x:
        return "NaN"
    return f"{x:.6f}"


def _stats_to_dict(stats: Optional[FitStatistics]) -> Optional[dict]:
    if stats is None:
        return None
    return {
        "r_squared": stats.r_squared,
        "adjusted_r_squared": stats.adjusted_r_squared,
        "se_of_regression": stats.se_of_regression,
        "sum_squared_resid": stats.sum_squared_resid,
        "f_statistic": stats.f_statistic,
        "prob_f": stats.prob_f,
        "durbin_watson": stats.durbin_watson,
        "mean_dependent": stats.mean_dependent,
        "sd_dependent": stats.sd_dependent,
        "n_obs": stats.n_obs,
        "k_params": stats.k_params,
    }


def estimate_to_dict(result: EstimationResult, dependent: str, label: str) -> dict:
    return {
        "schema_version": JSON_SCHEMA_VERSION,
        "label": label,
        "dependent": dependent,
        "method": result.method,
        "covariance": result.covariance_kind,
        "sample": {
            "entities": list(result.entity_labels),
            "periods_included": [int(p) for p in result.frame.periods_included],
            "n_obs": result.n_obs,
        },
        "coefficients": [
            {
                "variable": name,
                "coefficient": coef,
                "std_error": se,
                "t_statistic": t,
                "probability": p,
            }
            for name, coef, se, t, p in result.coefficient_table()
        ],
        "fixed_effects": {
            e: float(v) for e, v in zip(result.entity_labels, result.effects)
        },
        "entity_weights": result.entity_weights,
        "weighted_statistics": _stats_to_dict(result.weighted_stats),
        "unweighted_statistics": _stats_to_dict(result.unweighted_stats),
    }


def render_estimate_text(result: EstimationResult, dependent: str, label: str) -> str:
    lines = [
        label,
        f"Dependent variable: {dependent}",
        f"Method: {result.method}",
        f"Cross-sections included: {len(result.entity_labels)}",
        f"Periods included: {len(result.frame.periods_included)}",
        f"Total panel (balanced) observations: {result.n_obs}",
        f"Covariance: {result.covariance_kind.replace('_', ' ')} (d.f. corrected)",
        "",
        f"{'Variable':<16}{'Coefficient':>14}{'Std. Error':>14}{'t-Statistic':>14}{'Prob.':>10}",
    ]
    for name, coef, se, t, p in result.coefficient_table():
        lines.append(f"{name:<16}{coef:>14.6f}{se:>14.6f}{t:>14.6f}{p:>10.4f}")
    lines.append("")
    lines.append("Effects: cross-section fixed, normalized to sum to zero")

    def stats_block(title: str, stats: Optional[FitStatistics]) -> None:
        if stats is None:
            return
        lines.append("")
        lines.append(title)
        r2 = "undefined" if stats.r_squared is None else _num(stats.r_squared)
        adj = "undefined" if stats.adjusted_r_squared is None else _num(stats.adjusted_r_squared)
        fs = "undefined" if stats.f_statistic is None else _num(stats.f_statistic)
        pf = "undefined" if stats.prob_f is None else f"{stats.prob_f:.6f}"
        lines.append(f"  R-squared            {r2:>12}   Mean dependent var  {_num(stats.mean_dependent):>12}")
        lines.append(f"  Adjusted R-squared   {adj:>12}   S.D. dependent var  {_num(stats.sd_dependent):>12}")
        lines.append(f"  S.E. of regression   {_num(stats.se_of_regression):>12}   Sum squared resid   {_num(stats.sum_squared_resid):>12}")
        lines.append(f"  F-statistic          {fs:>12}   Durbin-Watson stat  {_num(stats.durbin_watson):>12}")
        lines.append(f"  Prob(F-statistic)    {pf:>12}")

    stats_block("Weighted statistics", result.weighted_stats)
    stats_block("Unweighted statistics", result.unweighted_stats)
    lines.append("")
    return "\n".join(lines)


def estimate_to_csv_rows(result: EstimationResult, dependent: str, label: str) -> list[list]:
    rows = [["label", "dependent", "variable", "coefficient", "std_error", "t_statistic", "probability"]]
    for name, coef, se, t, p in result.coefficient_table():
        rows.append([label, dependent, name, repr(coef), repr(se), repr(t), repr(p)])
    return rows


def diagnostics_to_dict(report: DiagnosticReport, label: str) -> dict:
    corr = None
    if report.correlation_matrix is not None:
        corr = {
            "variables": list(report.correlation_names),
            "matrix": [[float(v) for v in row] for row in report.correlation_matrix],
        }
    return {
        "schema_version": JSON_SCHEMA_VERSION,
        "label": label,
        "tests": [
            {
                "name": r.name,
                "statistic": r.statistic,
                "probability": r.probability,
                "df": r.df,
                "n_used": r.n_used,
                "df_used": r.df_used,
                "reject_at_5pct": r.reject_at_5pct,
                "note": r.note,
            }
            for r in report.rows
        ],
        "regressor_correlations": corr,
    }


def render_diagnostics_text(report: DiagnosticReport, label: str) -> str:
    lines = [
        label,
        "",
        f"{'Test':<44}{'Statistic':>12}{'Probability':>14}  Annotation",
    ]
    for r in report.rows:
        annot = f"(n = {r.n_used}, df = {r.df_used})" if r.df_used is not None else ""
        lines.append(
            f"{r.name:<44}{r.statistic:>12.4f}{100.0 * r.probability:>13.2f}%  {annot}"
        )
    if report.correlation_matrix is not None:
        lines.append("")
        lines.append("Regressor correlation matrix:")
        names = report.correlation_names
        header = " " * 16 + "".join(f"{n[:12]:>13}" for n in names)
        lines.append(header)
        for i, n in enumerate(names):
            row = "".join(f"{report.correlation_matrix[i, j]:>13.4f}" for j in range(len(names)))
            lines.append(f"{n[:15]:<16}" + row)
    lines.append("")
    return "\n".join(lines)


def diagnostics_to_csv_rows(report: DiagnosticReport, label: str) -> list[list]:
    rows = [["label", "test", "statistic", "probability", "df", "n_used", "df_used"]]
    for r in report.rows:
        rows.append([label, r.name, repr(r.statistic), repr(r.probability), r.df, r.n_used, r.df_used])
    return rows


def battery_to_dict(verdicts: list[BatteryVerdict], label: str) -> dict:
    def slots_payload(slots):
        if slots is None:
            return None
        out = []
        for s in slots:
            entry = {"test": s.test, "deterministic": s.deterministic}
            if s.result is not None:
                entry.update(
                    statistic=s.result.statistic,
                    p_value=s.result.p_value,
                    lags=dict(sorted(s.result.lags.items())),
                )
            else:
                entry["skipped"] = s.skipped
            out.append(entry)
        return out

    return {
        "schema_version": JSON_SCHEMA_VERSION,
        "label": label,
        "variables": [
            {
                "variable": v.variable,
                "order": v.order,
                "level_votes": v.level_votes,
                "level_applicable": v.level_applicable,
                "diff_votes": v.diff_votes,
                "diff_applicable": v.diff_applicable,
                "threshold": v.threshold,
                "level_tests": slots_payload(v.level_slots),
                "difference_tests": slots_payload(v.diff_slots),
            }
            for v in verdicts
        ],
    }


def render_battery_text(verdicts: list[BatteryVerdict], label: str) -> str:
    lines = [
        label,
        "",
        f"{'Variable':<18}{'Stationary at level':>22}{'At first difference':>22}  Verdict",
    ]
    for v in verdicts:
        level = f"{v.level_votes} of {v.level_applicable}"
        diff = "-" if v.diff_votes is None else f"{v.diff_votes} of {v.diff_applicable}"
        lines.append(f"{v.variable:<18}{level:>22}{diff:>22}  {v.order}")
    lines.append("")
    return "\n".join(lines)


def battery_to_csv_rows(verdicts: list[BatteryVerdict], label: str) -> list[list]:
    rows = [["label", "variable", "level_votes", "level_applicable", "diff_votes", "diff_applicable", "order"]]
    for v in verdicts:
        rows.append(
            [label, v.variable, v.level_votes, v.level_applicable,
             "" if v.diff_votes is None else v.diff_votes,
             "" if v.diff_applicable is None else v.diff_applicable,
             v.order]
        )
    return rows
