"""Lookup tables behind the unit-root p-values and panel-test adjustments.

Three versioned CSVs ship under ``tables/``:

* ``mackinnon_tau.csv`` — response-surface coefficients mapping a Dickey-
  Fuller t-ratio to an asymptotic p-value (MacKinnon's published surface).
* ``llc_adjustments.csv`` — mean/std adjustments for the pooled panel t-ratio,
  indexed by deterministic spec and average regression length; generated by
  the seeded Monte Carlo in ``scripts/calibrate_tables.py``.
* ``ips_moments.csv`` — mean/variance of the per-unit t-ratio under the null,
  indexed by spec, lag order and regression length; same generator.
* ``df_tau_quantiles.csv`` — finite-sample null quantiles of the ADF t-ratio
  and the Phillips-Perron Z-tau for short regressions, where the asymptotic
  surface is unreliable; same generator. p-values interpolate the empirical
  null distribution.

Between grid points the panel tables interpolate linearly; requests below
the smallest tabulated length raise, requests above the largest clamp.
"""

from __future__ import annotations

import csv
from functools import lru_cache
from pathlib import Path

from .probdist import normal_cdf

__all__ = [
    "TableRangeError",
    "mackinnon_pvalue",
    "finite_sample_pvalue",
    "llc_adjustment",
    "ips_moments",
    "TABLES_DIR",
]

TABLES_DIR = Path(__file__).parent / "tables"

DETERMINISTICS = ("none", "constant", "constant_and_trend")


class TableRangeError(ValueError):
    """Raised when a request falls outside a shipped table's range."""


@lru_cache(maxsize=1)
def _tau_surface() -> dict[str, dict[str, tuple[float, ...]]]:
    out: dict[str, dict[str, tuple[float, ...]]] = {}
    with (TABLES_DIR / "mackinnon_tau.csv").open(newline="", encoding="utf-8") as fh:
        for rec in csv.DictReader(fh):
            out[rec["deterministic"]] = {
                "star": (float(rec["tau_star"]),),
                "min": (float(rec["tau_min"]),),
                "max": (float(rec["tau_max"]),),
                "small": tuple(float(rec[f"small_c{i}"]) for i in range(3)),
                "large": tuple(float(rec[f"large_c{i}"]) for i in range(4)),
            }
    return out


def mackinnon_pvalue(tau: float, deterministic: str) -> float:
    """Asymptotic left-tail p-value of a Dickey-Fuller t-ratio."""
    surface = _tau_surface()
    if deterministic not in surface:
        raise TableRangeError(f"no response surface for deterministic spec {deterministic!r}")
    entry = surface[deterministic]
    if tau > entry["max"][0]:
        return 1.0
    if tau < entry["min"][0]:
        return 0.0
    coefs = entry["small"] if tau <= entry["star"][0] else entry["large"]
    z = 0.0
    for c in reversed(coefs):
        z = z * tau + c
    return normal_cdf(z)


@lru_cache(maxsize=1)
def _quantile_table():
    import numpy as np

    with (TABLES_DIR / "df_tau_quantiles_pgrid.csv").open(newline="", encoding="utf-8") as fh:
        p_grid = np.array([float(rec["p"]) for rec in csv.DictReader(fh)])
    table: dict[tuple[str, str, int], dict[int, "np.ndarray"]] = {}
    with (TABLES_DIR / "df_tau_quantiles.csv").open(newline="", encoding="utf-8") as fh:
        for rec in csv.DictReader(fh):
            key = (rec["test"], rec["deterministic"], int(rec["lag"]))
            qs = np.array([float(v) for v in rec["quantiles"].split(";")])
            table.setdefault(key, {})[int(rec["t_obs"])] = qs
    return p_grid, table


def finite_sample_pvalue(test: str, deterministic: str, lag: int, t_obs: int, stat: float):
    """Empirical-null p-value for short regressions; None when the cell is
    above the calibrated range (use the asymptotic surface instead)."""
    import numpy as np

    p_grid, table = _quantile_table()
    key = (test, deterministic, int(lag))
    if key not in table:
        return None
    grid = table[key]
    t_max = max(grid)
    if t_obs > t_max:
        return None
    if t_obs not in grid:
        raise TableRangeError(
            f"{test} null quantiles not tabulated for spec {deterministic!r}, "
            f"lag {lag}, length {t_obs}"
        )
    return float(np.interp(stat, grid[t_obs], p_grid))


def _load_grid(name: str, key_fields: tuple[str, ...], value_fields: tuple[str, ...]):
    table: dict[tuple, dict[float, tuple[float, ...]]] = {}
    with (TABLES_DIR / name).open(newline="", encoding="utf-8") as fh:
        for rec in csv.DictReader(fh):
            key = tuple(rec[f] for f in key_fields)
            t = float(rec["t_obs"])
            table.setdefault(key, {})[t] = tuple(float(rec[f]) for f in value_fields)
    return {k: dict(sorted(v.items())) for k, v in table.items()}


@lru_cache(maxsize=1)
def _llc_table():
    return _load_grid("llc_adjustments.csv", ("deterministic",), ("mu", "sigma"))


@lru_cache(maxsize=1)
def _ips_table():
    return _load_grid("ips_moments.csv", ("deterministic", "lag"), ("mean", "variance"))


def _interpolate(grid: dict[float, tuple[float, ...]], t: float, label: str) -> tuple[float, ...]:
    ts = list(grid)
    if t < ts[0]:
        raise TableRangeError(
            f"{label}: length {t} below tabulated minimum {ts[0]}; "
            "regenerate the table with scripts/calibrate_tables.py for smaller samples"
        )
    if t >= ts[-1]:
        return grid[ts[-1]]
    import bisect

    hi = bisect.bisect_right(ts, t)
    lo = hi - 1
    if ts[lo] == t:
        return grid[ts[lo]]
    t0, t1 = ts[lo], ts[hi]
    w = (t - t0) / (t1 - t0)
    a, b = grid[t0], grid[t1]
    return tuple((1 - w) * ai + w * bi for ai, bi in zip(a, b))


def llc_adjustment(deterministic: str, t_tilde: float) -> tuple[float, float]:
    """(mean, std) adjustment for the pooled panel t-ratio at length t_tilde."""
    table = _llc_table()
    key = (deterministic,)
    if key not in table:
        raise TableRangeError(f"no pooled-t adjustments for spec {deterministic!r}")
    return _interpolate(table[key], t_tilde, f"pooled-t adjustment ({deterministic})")  # type: ignore[return-value]


def ips_moments(deterministic: str, lag: int, t_obs: int) -> tuple[float, float]:
    """(mean, variance) of the per-unit t-ratio for the given cell."""
    table = _ips_table()
    key = (deterministic, str(int(lag)))
    if key not in table:
        raise TableRangeError(
            f"no per-unit t moments for spec {deterministic!r} at lag {lag}; "
            "regenerate with scripts/calibrate_tables.py"
        )
    return _interpolate(table[key], float(t_obs), f"per-unit t moments ({deterministic}, lag {lag})")  # type: ignore[return-value]
