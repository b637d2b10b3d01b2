#!/usr/bin/env python3
"""Regenerate the Monte Carlo tables shipped under src/ineqpanel/tables/.

Two tables are produced, both simulated under the driftless random-walk null
with standard normal innovations:

* ips_moments.csv — mean and variance of the per-unit Dickey-Fuller t-ratio,
  per (deterministic spec, lag order, regression length). Used to center and
  scale the averaged-t panel statistic.
* llc_adjustments.csv — mean/std adjustments for the pooled panel t-ratio,
  per (deterministic spec, average regression length). Estimated from a wide
  panel so the adjustment is the N-asymptotic one.

Every cell is seeded independently and reproducibly; rerunning the script
rewrites byte-identical tables.

Usage: python scripts/calibrate_tables.py [--quick] [--out-dir DIR]
"""

from __future__ import annotations

import argparse
import csv
import math
from pathlib import Path

import numpy as np

BASE_SEED = 20260808
DETERMINISTICS = ("none", "constant", "constant_and_trend")
N_DET = {"none": 0, "constant": 1, "constant_and_trend": 2}


def cell_rng(*key) -> np.random.Generator:
    material = ":".join(str(k) for k in key)
    digest = sum((i + 1) * b for i, b in enumerate(material.encode())) % (2**31)
    return np.random.default_rng(np.random.SeedSequence(entropy=BASE_SEED, spawn_key=(digest,)))


def df_tstats_batch(rng: np.random.Generator, reps: int, t_obs: int, lag: int, det: str) -> np.ndarray:
    """t-ratios on the level term of the DF regression, simulated under the null."""
    L = t_obs + lag + 1
    k = 1 + lag + N_DET[det]
    taus = np.empty(reps)
    chunk = max(1, 2_000_000 // (L * max(k, 1)))
    done = 0
    while done < reps:
        m = min(chunk, reps - done)
        y = np.cumsum(rng.standard_normal((m, L)), axis=1)
        dy = np.diff(y, axis=1)
        n_all = L - 1
        dep = dy[:, lag:]
        cols = [y[:, lag : L - 1]]
        for j in range(1, lag + 1):
            cols.append(dy[:, lag - j : n_all - j])
        if det in ("constant", "constant_and_trend"):
            cols.append(np.broadcast_to(np.ones(t_obs), (m, t_obs)))
        if det == "constant_and_trend":
            cols.append(np.broadcast_to(np.arange(1.0, t_obs + 1.0), (m, t_obs)))
        X = np.stack(cols, axis=2)
        XtX = np.einsum("rti,rtj->rij", X, X)
        Xty = np.einsum("rti,rt->ri", X, dep)
        beta = np.linalg.solve(XtX, Xty[..., None])[..., 0]
        resid = dep - np.einsum("rtk,rk->rt", X, beta)
        ssr = np.einsum("rt,rt->r", resid, resid)
        s2 = ssr / (t_obs - k)
        inv00 = np.linalg.inv(XtX)[:, 0, 0]
        taus[done : done + m] = beta[:, 0] / np.sqrt(s2 * inv00)
        done += m
    return taus


def pooled_t_pieces(
    rng: np.random.Generator, reps: int, n_units: int, t_obs: int, det: str
) -> tuple[np.ndarray, np.ndarray]:
    """(t_delta, premultiplier) pairs for the pooled panel t under the null, p=0.

    The premultiplier is N * T * mean(long-run ratio) * se(delta) / sigma2 as
    used by the adjustment formula in ineqpanel.unitroot.llc_test.
    """
    rows = t_obs
    L = t_obs + 1
    nd = N_DET[det]
    k = 1 + nd
    if nd:
        if nd == 1:
            D = np.ones((rows, 1))
        else:
            D = np.column_stack([np.ones(rows), np.arange(1.0, rows + 1.0)])
        M = np.eye(rows) - D @ np.linalg.solve(D.T @ D, D.T)
    else:
        M = np.eye(rows)
    q = int(math.floor(4.0 * (rows / 100.0) ** (2.0 / 9.0)))
    w = np.array([1 - j / (q + 1) for j in range(1, q + 1)]) if q > 0 else np.zeros(0)
    t_out = np.empty(reps)
    p_out = np.empty(reps)
    chunk = max(1, 3_000_000 // (n_units * L))
    done = 0
    while done < reps:
        m = min(chunk, reps - done)
        y = np.cumsum(rng.standard_normal((m, n_units, L)), axis=2)
        dy = np.diff(y, axis=2)
        lvl = y[:, :, :-1]
        e = dy @ M.T
        v = lvl @ M.T
        ve = np.einsum("mnt,mnt->mn", v, e)
        vv = np.einsum("mnt,mnt->mn", v, v)
        ee = np.einsum("mnt,mnt->mn", e, e)
        s2 = (ee - ve**2 / vv) / (rows - k)
        dyd = dy - dy.mean(axis=2, keepdims=True) if det != "none" else dy
        g0 = np.einsum("mnt,mnt->mn", dyd, dyd) / rows
        lrv = g0.copy()
        for j in range(1, q + 1):
            gj = np.einsum("mnt,mnt->mn", dyd[:, :, j:], dyd[:, :, :-j]) / rows
            lrv += 2 * w[j - 1] * gj
        ratio = np.sqrt(np.maximum(lrv, 1e-300)) / np.sqrt(s2)
        num = (ve / s2).sum(axis=1)
        den = (vv / s2).sum(axis=1)
        delta = num / den
        ssr_pool = (ee / s2).sum(axis=1) - 2 * delta * num + delta**2 * den
        sig2 = ssr_pool / (n_units * rows)
        se = np.sqrt(sig2 / den)
        t_out[done : done + m] = delta / se
        p_out[done : done + m] = n_units * rows * ratio.mean(axis=1) * se / sig2
        done += m
    return t_out, p_out


def pp_ztau_batch(rng: np.random.Generator, reps: int, t_obs: int, det: str) -> np.ndarray:
    """Phillips-Perron Z-tau statistics simulated under the null.

    Mirrors ineqpanel.unitroot.pp_test: zero-lag DF regression, Bartlett
    long-run variance without demeaning, bandwidth floor(4 (n/100)^(2/9)).
    """
    L = t_obs + 1
    k = 1 + N_DET[det]
    q = int(math.floor(4.0 * (t_obs / 100.0) ** (2.0 / 9.0)))
    w = [1 - j / (q + 1) for j in range(1, q + 1)]
    out = np.empty(reps)
    chunk = max(1, 2_000_000 // L)
    done = 0
    while done < reps:
        m = min(chunk, reps - done)
        y = np.cumsum(rng.standard_normal((m, L)), axis=1)
        dy = np.diff(y, axis=1)
        dep = dy
        cols = [y[:, :-1]]
        if det in ("constant", "constant_and_trend"):
            cols.append(np.broadcast_to(np.ones(t_obs), (m, t_obs)))
        if det == "constant_and_trend":
            cols.append(np.broadcast_to(np.arange(1.0, t_obs + 1.0), (m, t_obs)))
        X = np.stack(cols, axis=2)
        XtX = np.einsum("rti,rtj->rij", X, X)
        Xty = np.einsum("rti,rt->ri", X, dep)
        beta = np.linalg.solve(XtX, Xty[..., None])[..., 0]
        u = dep - np.einsum("rtk,rk->rt", X, beta)
        ssr = np.einsum("rt,rt->r", u, u)
        s2 = ssr / (t_obs - k)
        inv00 = np.linalg.inv(XtX)[:, 0, 0]
        se = np.sqrt(s2 * inv00)
        tau = beta[:, 0] / se
        gamma0 = ssr / t_obs
        lam2 = gamma0.copy()
        for j in range(1, q + 1):
            gj = np.einsum("rt,rt->r", u[:, j:], u[:, :-j]) / t_obs
            lam2 += 2 * w[j - 1] * gj
        lam2 = np.maximum(lam2, 1e-12)
        z = np.sqrt(gamma0 / lam2) * tau - 0.5 * (lam2 - gamma0) / np.sqrt(lam2) * (
            t_obs * se / np.sqrt(s2)
        )
        out[done : done + m] = z
        done += m
    return out


# probability grid for the finite-sample null quantiles; denser in the tails
P_GRID = (
    [0.0005, 0.001, 0.0025, 0.005, 0.0075]
    + [round(0.01 * i, 4) for i in range(1, 100)]
    + [0.9925, 0.995, 0.9975, 0.999, 0.9995]
)

FINITE_T_MAX = 40


def adf_selected_taus_batch(
    rng: np.random.Generator, reps: int, n_diff: int, max_lag: int, det: str
) -> np.ndarray:
    """t-ratios of the full ADF procedure (Schwarz selection on a common
    sample, refit at the chosen lag) simulated under the null.

    Mirrors ineqpanel.unitroot.adf_test: candidates 0..cap are compared on
    the common sample at the largest feasible lag, the winner is refit on its
    maximal sample.
    """
    nd = N_DET[det]
    cap = -1
    for p in range(max_lag + 1):
        if (n_diff - p) >= (1 + p + nd) + 2:
            cap = p
    if cap < 0:
        raise ValueError(f"series too short: n_diff={n_diff}, max_lag={max_lag}, det={det}")
    L = n_diff + 1
    out = np.empty(reps)
    chunk = max(1, 1_500_000 // (L * (cap + 1)))
    done = 0

    def fit(y, dy, p, start):
        rows = n_diff - start
        dep = dy[:, start:]
        cols = [y[:, start : L - 1]]
        for j in range(1, p + 1):
            cols.append(dy[:, start - j : n_diff - j])
        if det in ("constant", "constant_and_trend"):
            cols.append(np.broadcast_to(np.ones(rows), (dep.shape[0], rows)))
        if det == "constant_and_trend":
            cols.append(np.broadcast_to(np.arange(1.0, rows + 1.0), (dep.shape[0], rows)))
        X = np.stack(cols, axis=2)
        k = X.shape[2]
        XtX = np.einsum("rti,rtj->rij", X, X)
        Xty = np.einsum("rti,rt->ri", X, dep)
        beta = np.linalg.solve(XtX, Xty[..., None])[..., 0]
        resid = dep - np.einsum("rtk,rk->rt", X, beta)
        ssr = np.einsum("rt,rt->r", resid, resid)
        s2 = ssr / (rows - k)
        inv00 = np.linalg.inv(XtX)[:, 0, 0]
        tau = beta[:, 0] / np.sqrt(s2 * inv00)
        sic = np.log(ssr / rows) + k * np.log(rows) / rows
        return tau, sic

    while done < reps:
        m = min(chunk, reps - done)
        y = np.cumsum(rng.standard_normal((m, L)), axis=1)
        dy = np.diff(y, axis=1)
        sics = np.column_stack([fit(y, dy, p, cap)[1] for p in range(cap + 1)])
        best = np.argmin(np.round(sics, 12), axis=1)
        taus_full = np.column_stack([fit(y, dy, p, p)[0] for p in range(cap + 1)])
        out[done : done + m] = taus_full[np.arange(m), best]
        done += m
    return out


def write_df_quantiles(out_dir: Path, quick: bool) -> None:
    reps = 10_000 if quick else 100_000
    rows_out = []
    for det in DETERMINISTICS:
        nd = N_DET[det]
        for max_lag in (0, 1, 2):
            t_min = (1 + nd) + 2  # lag 0 must be feasible
            ts = range(t_min, FINITE_T_MAX + 1) if not quick else [t_min, 10, 25, FINITE_T_MAX]
            for n_diff in ts:
                rng = cell_rng("adfq", det, max_lag, n_diff)
                taus = adf_selected_taus_batch(rng, reps, n_diff, max_lag, det)
                qs = np.quantile(taus, P_GRID)
                rows_out.append(
                    dict(
                        test="adf", deterministic=det, lag=max_lag, t_obs=n_diff, reps=reps,
                        seed=BASE_SEED,
                        quantiles=";".join(f"{v:.5f}" for v in qs),
                    )
                )
            print(f"adf quantiles {det} max_lag={max_lag}: n_diff {t_min}..{FINITE_T_MAX}")
        for n_diff in (range(1 + nd + 2, FINITE_T_MAX + 1) if not quick else [7, 10, 25, FINITE_T_MAX]):
            rng = cell_rng("ppq", det, n_diff)
            zs = pp_ztau_batch(rng, reps, n_diff, det)
            qs = np.quantile(zs, P_GRID)
            rows_out.append(
                dict(
                    test="pp", deterministic=det, lag=0, t_obs=n_diff, reps=reps,
                    seed=BASE_SEED,
                    quantiles=";".join(f"{v:.5f}" for v in qs),
                )
            )
        print(f"pp quantiles {det}: done")
    path = out_dir / "df_tau_quantiles.csv"
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(
            fh,
            fieldnames=["test", "deterministic", "lag", "t_obs", "reps", "seed", "quantiles"],
            lineterminator="\n",
        )
        writer.writeheader()
        writer.writerows(rows_out)
    with (out_dir / "df_tau_quantiles_pgrid.csv").open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["p"])
        for p in P_GRID:
            writer.writerow([p])
    print(f"wrote {path} ({len(rows_out)} cells)")


def t_grid(t_min: int, quick: bool) -> list[int]:
    if quick:
        return sorted({t_min, t_min + 2, 10, 20, 50, 100})
    return (
        list(range(t_min, 31))
        + list(range(32, 61, 2))
        + list(range(65, 101, 5))
    )


def llc_grid(t_min: int, quick: bool) -> list[int]:
    if quick:
        return sorted({t_min, t_min + 2, 10, 24, 49, 100})
    return list(range(t_min, 31)) + list(range(35, 61, 5)) + list(range(70, 101, 10))


def write_ips(out_dir: Path, quick: bool) -> None:
    reps = 4000 if quick else 50_000
    rows_out = []
    for det in ("constant", "constant_and_trend"):
        for lag in (0, 1, 2):
            k = 1 + lag + N_DET[det]
            t_min = k + 3
            for t_obs in t_grid(t_min, quick):
                if t_obs < t_min:
                    continue
                rng = cell_rng("ips", det, lag, t_obs)
                taus = df_tstats_batch(rng, reps, t_obs, lag, det)
                rows_out.append(
                    dict(
                        deterministic=det,
                        lag=lag,
                        t_obs=t_obs,
                        mean=round(float(taus.mean()), 6),
                        variance=round(float(taus.var(ddof=1)), 6),
                        reps=reps,
                        seed=BASE_SEED,
                    )
                )
                print(f"ips {det} lag={lag} t={t_obs}: mean={rows_out[-1]['mean']:+.3f} var={rows_out[-1]['variance']:.3f}")
    path = out_dir / "ips_moments.csv"
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(
            fh, fieldnames=["deterministic", "lag", "t_obs", "mean", "variance", "reps", "seed"],
            lineterminator="\n",
        )
        writer.writeheader()
        writer.writerows(rows_out)
    print(f"wrote {path} ({len(rows_out)} cells)")


def write_llc(out_dir: Path, quick: bool) -> None:
    reps = 400 if quick else 2400
    n_units = 128
    rows_out = []
    for det in DETERMINISTICS:
        k = 1 + N_DET[det]
        t_min = k + 3
        for t_obs in llc_grid(t_min, quick):
            if t_obs < t_min:
                continue
            rng = cell_rng("llc", det, t_obs)
            t_delta, pre = pooled_t_pieces(rng, reps, n_units, t_obs, det)
            mu = float(t_delta.mean() / pre.mean())
            sigma = float(np.std(t_delta - mu * pre))
            rows_out.append(
                dict(
                    deterministic=det,
                    t_obs=t_obs,
                    mu=round(mu, 6),
                    sigma=round(sigma, 6),
                    n_units=n_units,
                    reps=reps,
                    seed=BASE_SEED,
                )
            )
            print(f"llc {det} t={t_obs}: mu={mu:+.4f} sigma={sigma:.4f}")
    path = out_dir / "llc_adjustments.csv"
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(
            fh, fieldnames=["deterministic", "t_obs", "mu", "sigma", "n_units", "reps", "seed"],
            lineterminator="\n",
        )
        writer.writeheader()
        writer.writerows(rows_out)
    print(f"wrote {path} ({len(rows_out)} cells)")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--quick", action="store_true", help="coarse grid / few reps (smoke run only)")
    parser.add_argument(
        "--out-dir",
        default=str(Path(__file__).resolve().parent.parent / "src" / "ineqpanel" / "tables"),
    )
    args = parser.parse_args()
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_ips(out_dir, args.quick)
    write_llc(out_dir, args.quick)
    write_df_quantiles(out_dir, args.quick)


if __name__ == "__main__":
    main()
