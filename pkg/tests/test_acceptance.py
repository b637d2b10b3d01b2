"""Acceptance gate: one test per criterion, each printing a PASS line.

The Monte Carlo blocks are seeded and time-boxed; tolerances are pinned to
the values stated alongside each criterion.
"""

import json
import os
import time
from pathlib import Path

import numpy as np
import pytest
import scipy.stats as st

from conftest import make_panel, one_regressor_spec
from ineqpanel.cli import main as cli_main
from ineqpanel.cluster import (
    IncomeDistribution,
    gini_from_distribution,
    load_scores_csv,
    median_split,
    subindex_stability,
)
from ineqpanel.diagnostics import bp_serial, bpg_heteroskedasticity, cross_section_dependence, jarque_bera
from ineqpanel.estimators import (
    EstimationSpec,
    fixed_effects_lsdv,
    fixed_effects_within,
    panel_egls_fe,
)
from ineqpanel.linreg import ols
from ineqpanel.paneldata import PanelDataset, VariableSpec, estimation_frame
from ineqpanel.probdist import chi2_sf, f_sf, normal_cdf, student_t_sf
from ineqpanel.unitroot import adf_test, ips_test, llc_test, majority_verdict, pp_test


def ok(line: str) -> None:
    print(f"PASS acceptance: {line}")


def test_estimator_equivalence_within_vs_lsdv():
    """200 seeded random balanced panels: within and LSDV slopes agree to 1e-8."""
    rng = np.random.default_rng(20260808)
    start = time.time()
    done = 0
    while done < 200:
        n = int(rng.integers(2, 11))
        t = int(rng.integers(3, 9))
        k = int(rng.integers(1, 5))
        if n * t <= 1 + k + n + 1:
            continue
        x = rng.normal(size=(n, t, k))
        beta = rng.normal(size=k)
        eff = rng.normal(0, 2, n)
        y = eff[:, None] + x @ beta + rng.normal(0, 0.6, size=(n, t))
        series = {"y": y}
        for j in range(k):
            series[f"x{j}"] = x[:, :, j]
        panel = PanelDataset(tuple(f"E{i}" for i in range(n)), tuple(range(2000, 2000 + t)), series)
        spec = EstimationSpec(
            VariableSpec("y", role="dependent"),
            tuple(VariableSpec(f"x{j}") for j in range(k)),
        )
        w = fixed_effects_within(panel, spec)
        l = fixed_effects_lsdv(panel, spec)
        assert np.max(np.abs(w.slopes - l.slopes)) < 1e-8
        done += 1
    elapsed = time.time() - start
    assert elapsed < 10.0, f"equivalence sweep took {elapsed:.1f}s (budget 10s)"
    ok(f"within/LSDV slope equivalence on 200 panels in {elapsed:.1f}s")


def test_least_squares_oracle():
    """QR solution matches the brute-force normal equations to 1e-9."""
    rng = np.random.default_rng(7)
    checked = 0
    while checked < 100:
        n = int(rng.integers(20, 80))
        k = int(rng.integers(1, 6))
        X = rng.normal(size=(n, k)) @ np.diag(rng.uniform(0.5, 3.0, k))
        if np.linalg.cond(X) > 1e6:
            continue
        y = rng.normal(size=n)
        mine = ols(X, y, intercept=False).coefficients
        oracle = np.linalg.solve(X.T @ X, X.T @ y)
        assert np.max(np.abs(mine - oracle)) < 1e-9
        checked += 1
    ok("QR least squares matches normal-equation oracle on 100 systems")


def test_egls_degeneracy_equal_variances():
    """Equal entity residual variances: weighted slopes equal unweighted FE."""
    rng = np.random.default_rng(11)
    for trial in range(5):
        n, t = 6, 9
        x = rng.normal(size=(n, t))
        eff = rng.normal(0, 1, n)
        u = rng.normal(size=(n, t))
        u = u - u.mean(axis=1, keepdims=True)
        xd = x - x.mean(axis=1, keepdims=True)
        u = u - ((u * xd).sum(axis=1) / (xd * xd).sum(axis=1))[:, None] * xd
        u = u / np.sqrt((u * u).sum(axis=1, keepdims=True)) * 0.7
        y = eff[:, None] + 1.5 * x + u
        panel = PanelDataset(tuple(f"E{i}" for i in range(n)), tuple(range(2000, 2000 + t)), {"y": y, "x": x})
        within = fixed_effects_within(panel, one_regressor_spec())
        egls = panel_egls_fe(panel, one_regressor_spec(weighting="cross_section_weights"))
        assert np.max(np.abs(egls.slopes - within.slopes)) < 1e-9
    ok("EGLS with equal entity variances reproduces unweighted FE slopes")


def test_distribution_precision_grid():
    """Tail functions within 1e-10 of oracles on 500-point grids; the
    two-degree chi-square closed form holds to 1e-13."""
    rng = np.random.default_rng(3)
    xs = rng.uniform(0.0, 60.0, 500)
    dfs = rng.uniform(0.5, 60.0, 500)
    for x, d in zip(xs, dfs):
        assert abs(chi2_sf(x, d) - st.chi2.sf(x, d)) < 1e-10
    ts = rng.uniform(-8.0, 8.0, 500)
    tdfs = rng.uniform(1.0, 80.0, 500)
    for x, d in zip(ts, tdfs):
        assert abs(student_t_sf(x, d) - st.t.sf(x, d)) < 1e-10
    fs = rng.uniform(0.0, 20.0, 500)
    d1 = rng.uniform(1.0, 40.0, 500)
    d2 = rng.uniform(1.0, 40.0, 500)
    for x, a, b in zip(fs, d1, d2):
        assert abs(f_sf(x, a, b) - st.f.sf(x, a, b)) < 1e-10
    zs = rng.uniform(-8.0, 8.0, 500)
    for z in zs:
        assert abs(normal_cdf(z) - st.norm.cdf(z)) < 1e-10
    for x in np.linspace(0.01, 60.0, 200):
        assert abs(chi2_sf(x, 2.0) - np.exp(-x / 2.0)) < 1e-13
    ok("distribution tails within 1e-10 of oracles; chi2(2) closed form to 1e-13")


def test_diagnostic_arithmetic_paper_shape():
    """N=14, T=7 with two once-lagged variables: the heteroskedasticity
    design has (n=84, df=5) and the serial design has (n=70, df=1)."""
    rng = np.random.default_rng(5)
    n, t = 14, 7
    names = tuple(f"C{i:02d}" for i in range(n))
    series = {
        "gini": np.cumsum(rng.normal(size=(n, t)), axis=1) + 30,
        "poverty": rng.normal(20, 2, (n, t)),
        "neetsrate": rng.normal(12, 2, (n, t)),
        "social": rng.normal(20, 2, (n, t)),
        "creditb": rng.normal(80, 10, (n, t)),
    }
    panel = PanelDataset(names, tuple(range(2010, 2017)), series)
    frame = estimation_frame(
        panel,
        [
            VariableSpec("gini", role="dependent"),
            VariableSpec("gini", 1),
            VariableSpec("poverty"),
            VariableSpec("neetsrate", 1),
            VariableSpec("social"),
            VariableSpec("creditb"),
        ],
    )
    assert frame.n_rows == 84
    u = rng.standard_normal(84)
    het = bpg_heteroskedasticity(u, frame)
    assert (het.n_used, het.df_used) == (84, 5)
    serial = bp_serial(u, frame, lags=1)
    assert (serial.n_used, serial.df_used) == (70, 1)
    ok("auxiliary designs annotate (n=84, df=5) and (n=70, df=1)")


def test_monte_carlo_size_battery():
    """Nominal-5% empirical sizes: one-series unit-root tests in [3%, 8%];
    the cross-section dependence, normality and serial tests within 2pp of
    5%. Total runtime under 5 minutes."""
    start = time.time()
    reps = 2000
    rng = np.random.default_rng(101)

    adf_rej = pp_rej = 0
    for _ in range(reps):
        y = np.cumsum(rng.standard_normal(100))
        if adf_test(y, "constant", max_lag=2).p_value < 0.05:
            adf_rej += 1
        if pp_test(y, "constant").p_value < 0.05:
            pp_rej += 1
    adf_size = adf_rej / reps
    pp_size = pp_rej / reps
    assert 0.03 <= adf_size <= 0.08, f"ADF size {adf_size}"
    assert 0.03 <= pp_size <= 0.08, f"PP size {pp_size}"

    # Pesaran CD on iid residual grids, N=14, T=6
    names = tuple(f"C{i:02d}" for i in range(14))
    base = PanelDataset(
        names, tuple(range(2000, 2006)),
        {"y": rng.normal(size=(14, 6)), "x": rng.normal(size=(14, 6))},
    )
    frame = estimation_frame(base, [VariableSpec("y", role="dependent"), VariableSpec("x")])
    cd_rej = 0
    for _ in range(reps):
        u = rng.standard_normal(frame.n_rows)
        rows = cross_section_dependence(u, frame)
        cd = [r for r in rows if r.name == "Pesaran CD"][0]
        if cd.probability < 0.05:
            cd_rej += 1
    cd_size = cd_rej / reps
    assert 0.03 <= cd_size <= 0.07, f"CD size {cd_size}"

    jb_rej = 0
    for _ in range(reps):
        if jarque_bera(rng.standard_normal(84)).probability < 0.05:
            jb_rej += 1
    jb_size = jb_rej / reps
    assert 0.03 <= jb_size <= 0.07, f"JB size {jb_size}"

    # serial test consumes residuals of a fitted model: regress iid errors
    # through the frame so the residuals carry the orthogonality the n*R^2
    # degrees-of-freedom accounting assumes
    paper = PanelDataset(
        names, tuple(range(2010, 2017)),
        {"g": rng.normal(size=(14, 7)), "p": rng.normal(size=(14, 7))},
    )
    pframe = estimation_frame(paper, [VariableSpec("g", role="dependent"), VariableSpec("p")])
    bp_rej = 0
    for _ in range(reps):
        y = 0.5 * pframe.X[:, 0] + rng.standard_normal(pframe.n_rows)
        u = ols(pframe.X, y, intercept=True).residuals
        if bp_serial(u, pframe, lags=1).probability < 0.05:
            bp_rej += 1
    bp_size = bp_rej / reps
    assert 0.03 <= bp_size <= 0.07, f"BP-serial size {bp_size}"

    elapsed = time.time() - start
    assert elapsed < 300.0, f"size battery took {elapsed:.0f}s (budget 300s)"
    ok(
        f"sizes at 5%: ADF {adf_size:.3f}, PP {pp_size:.3f}, CD {cd_size:.3f}, "
        f"JB {jb_size:.3f}, BP-serial {bp_size:.3f} in {elapsed:.0f}s"
    )


def test_monte_carlo_power_battery():
    """Power: pooled and averaged panel tests reject stationary AR panels in
    at least 80% of draws; the serial test flags AR(0.8) residuals in 90%."""
    rng = np.random.default_rng(202)
    reps = 500
    llc_rej = ips_rej = 0
    for _ in range(reps):
        data = {}
        for i in range(14):
            rho = rng.uniform(0.2, 0.5)
            e = rng.standard_normal(50)
            x = np.empty(50)
            x[0] = e[0] / np.sqrt(1 - rho**2)
            for s in range(1, 50):
                x[s] = rho * x[s - 1] + e[s]
            data[f"c{i}"] = x
        if llc_test(data, "constant", max_lag=1).p_value < 0.05:
            llc_rej += 1
        if ips_test(data, "constant", max_lag=1).p_value < 0.05:
            ips_rej += 1
    llc_power = llc_rej / reps
    ips_power = ips_rej / reps
    assert llc_power >= 0.80, f"pooled-test power {llc_power}"
    assert ips_power >= 0.80, f"averaged-test power {ips_power}"

    names = tuple(f"C{i:02d}" for i in range(14))
    paper = PanelDataset(
        names, tuple(range(2010, 2017)),
        {"g": rng.normal(size=(14, 7)), "p": rng.normal(size=(14, 7))},
    )
    frame = estimation_frame(paper, [VariableSpec("g", role="dependent"), VariableSpec("p")])
    bp_rej = 0
    for _ in range(reps):
        u = np.empty(frame.n_rows)
        for e in frame.entities:
            pos = np.nonzero(frame.row_entities == e)[0]
            x = np.empty(len(pos))
            x[0] = rng.standard_normal()
            for j in range(1, len(pos)):
                x[j] = 0.8 * x[j - 1] + rng.standard_normal() * 0.6
            u[pos] = x
        y = 0.5 * frame.X[:, 0] + u
        resid = ols(frame.X, y, intercept=True).residuals
        if bp_serial(resid, frame, lags=1).probability < 0.05:
            bp_rej += 1
    bp_power = bp_rej / reps
    assert bp_power >= 0.90, f"serial-test power {bp_power}"
    ok(f"power: pooled {llc_power:.2f}, averaged {ips_power:.2f}, serial {bp_power:.2f}")


def test_battery_verdict_logic():
    """Vote-count rules: 7 of 12 at level is I(0); at most 6 at level with a
    strict majority at difference is I(1)."""
    assert majority_verdict(7, 12, None, None) == "I(0)"
    assert majority_verdict(5, 12, 9, 12) == "I(1)"
    assert majority_verdict(6, 12, 9, 12) == "I(1)"
    assert majority_verdict(3, 12, 10, 12) == "I(1)"
    assert majority_verdict(5, 12, 6, 6) == "I(1)"  # shrunken difference battery
    assert majority_verdict(6, 12, 6, 12) == "undetermined"
    assert majority_verdict(0, 0, 0, 0) == "undetermined"
    assert majority_verdict(2, 12, None, None) == "undetermined"
    ok("battery verdict logic reproduces the published vote patterns")


def test_gini_criteria():
    """Equal shares give 0; a two-person {0, 1} split gives exactly 0.5;
    1000 random progressive transfers never increase the index."""
    assert gini_from_distribution(IncomeDistribution((0.5, 0.5), (0.5, 0.5))) == 0.0
    assert gini_from_distribution(IncomeDistribution((0.25,) * 4, (0.25,) * 4)) == pytest.approx(0.0, abs=1e-15)
    assert gini_from_distribution(IncomeDistribution((0.5, 0.5), (0.0, 1.0))) == 0.5

    rng = np.random.default_rng(9)
    done = 0
    while done < 1000:
        k = int(rng.integers(3, 9))
        pop = np.full(k, 1.0 / k)
        inc = np.sort(rng.uniform(0.05, 1.0, k))
        inc = inc / inc.sum()
        i = int(rng.integers(0, k - 1))
        j = int(rng.integers(i + 1, k))
        eps = float(rng.uniform(0.0, 0.5)) * (inc[j] - inc[i]) / 2.0
        new = inc.copy()
        new[j] -= eps
        new[i] += eps
        if np.any(np.diff(new) < 0):
            continue
        g0 = gini_from_distribution(IncomeDistribution(tuple(pop), tuple(inc)))
        g1 = gini_from_distribution(IncomeDistribution(tuple(pop), tuple(new)))
        assert g1 <= g0 + 1e-12
        done += 1
    ok("gini fixed points and 1000 progressive transfers")


def test_clustering_criteria(scores_path):
    """Bundled scores: threshold 4.29, 14/14 split, and the four documented
    sub-indices reproduce the main split."""
    recs = load_scores_csv(scores_path)
    split = median_split([(r.country, r.pillar) for r in recs])
    assert split.threshold == pytest.approx(4.29, abs=1e-12)
    assert len(split.inclusive) == 14 and len(split.extractive) == 14
    rep = subindex_stability(recs)
    assert set(rep.matching_subindices) == {
        "Property rights",
        "Public trust in politicians",
        "Diversion of public funds",
        "Ethical behavior of firms",
    }
    ok("median threshold 4.29, 14/14 split, four matching sub-indices")


def test_synthetic_end_to_end(tmp_path, scores_path):
    """The full pipeline on the bundled seeded DGP recovers every true slope
    within 3 Monte Carlo standard errors and writes byte-identical reports."""
    from make_fixtures import SEED, TRUE_COEFFICIENTS, YEARS, simulate_panel

    spec = EstimationSpec(
        VariableSpec("gini", role="dependent"),
        (
            VariableSpec("gini", 1),
            VariableSpec("poverty"),
            VariableSpec("neetsrate", 1),
            VariableSpec("social"),
            VariableSpec("creditb"),
        ),
        weighting="cross_section_weights",
        covariance="white_cross_section",
    )
    recs = load_scores_csv(scores_path)
    split = median_split([(r.country, r.pillar) for r in recs])

    def slope_estimates(seed):
        countries, grids, _, _ = simulate_panel(seed)
        panel = PanelDataset(tuple(countries), tuple(YEARS), grids)
        out = {}
        for label, members in (("inclusive", split.inclusive), ("extractive", split.extractive)):
            r = panel_egls_fe(panel.subset_entities(members), spec)
            out[label] = dict(zip(r.variables, r.slopes))
        return out

    mc = [slope_estimates(1000 + k) for k in range(60)]
    mc_sd = {
        label: {
            var: float(np.std([r[label][var] for r in mc], ddof=1))
            for var in mc[0][label]
        }
        for label in ("inclusive", "extractive")
    }

    code = cli_main(["replicate", "--out", str(tmp_path / "run1")])
    assert code == 0
    worst = 0.0
    for label in ("inclusive", "extractive"):
        payload = json.loads((tmp_path / "run1" / f"estimate_{label}.json").read_text())
        for row in payload["coefficients"]:
            var = row["variable"]
            if var == "C":
                continue
            z = abs(row["coefficient"] - TRUE_COEFFICIENTS[var]) / mc_sd[label][var]
            worst = max(worst, z)
            assert z <= 3.0, f"{label} {var}: |z| = {z:.2f}"

    code = cli_main(["replicate", "--out", str(tmp_path / "run2")])
    assert code == 0
    files1 = {p.name: p.read_bytes() for p in sorted((tmp_path / "run1").iterdir())}
    files2 = {p.name: p.read_bytes() for p in sorted((tmp_path / "run2").iterdir())}
    assert files1 == files2
    ok(f"end-to-end recovery (worst |z| = {worst:.2f}) with byte-identical reports")


def test_optional_golden_vintage_diff(tmp_path):
    """Optional: when the original data vintage is supplied via the
    INEQPANEL_VINTAGE_DATA environment variable, the benchmark diff must put
    every coefficient within 0.05 of the reference (reported as warnings,
    never hard failures, since the vintage cannot be certified)."""
    vintage = os.environ.get("INEQPANEL_VINTAGE_DATA")
    if not vintage:
        pytest.skip("original data vintage not supplied; set INEQPANEL_VINTAGE_DATA to enable")
    code = cli_main(["replicate", "--data", vintage, "--out", str(tmp_path), "--benchmark"])
    assert code in (0, 1)
    diff = json.loads((tmp_path / "benchmark_diff.json").read_text())
    warned = [
        (label, row["variable"], row["delta"])
        for label, rows in diff["clusters"].items()
        for row in rows
        if row["status"] != "ok"
    ]
    if warned:
        import warnings

        warnings.warn(f"benchmark deltas beyond 0.05: {warned}")
    ok("golden vintage diff emitted (deviations downgraded to warnings)")
