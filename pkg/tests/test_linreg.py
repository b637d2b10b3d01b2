import numpy as np
import pytest

from ineqpanel.linreg import (
    LinAlgSpecError,
    durbin_watson,
    fit_statistics,
    ols,
    white_cross_section_cov,
    wls,
)


def normal_equation_oracle(X, y):
    """Independent brute-force solution via the normal equations."""
    X = np.asarray(X, float)
    return np.linalg.solve(X.T @ X, X.T @ y)


class TestOls:
    def test_exact_line_no_intercept(self):
        fit = ols(np.array([[1.0], [2.0], [3.0]]), np.array([1.0, 2.0, 3.0]), intercept=False)
        assert fit.coefficients[0] == pytest.approx(1.0, abs=1e-14)
        assert fit.residuals @ fit.residuals == pytest.approx(0.0, abs=1e-24)

    def test_hand_normal_equations(self):
        fit = ols(np.array([0.0, 1.0, 2.0, 3.0]), np.array([1.0, 3.0, 5.0, 6.0]), intercept=True)
        assert fit.coefficients[0] == pytest.approx(1.2, abs=1e-12)  # intercept
        assert fit.coefficients[1] == pytest.approx(1.7, abs=1e-12)  # slope

    def test_matches_normal_equation_oracle(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            X = rng.normal(size=(50, 4))
            y = rng.normal(size=50)
            fit = ols(X, y, intercept=False)
            assert np.allclose(fit.coefficients, normal_equation_oracle(X, y), atol=1e-9)

    def test_rank_deficiency_names_column(self):
        X = np.column_stack([np.ones(10), np.arange(10.0), 2 * np.arange(10.0)])
        with pytest.raises(LinAlgSpecError, match="'dup'"):
            ols(X, np.arange(10.0), intercept=False, column_names=("c", "base", "dup"))

    def test_zero_column_rejected_not_absorbed(self):
        X = np.column_stack([np.arange(1.0, 9.0), np.zeros(8)])
        with pytest.raises(LinAlgSpecError):
            ols(X, np.arange(8.0), intercept=False)

    def test_underdetermined_rejected(self):
        with pytest.raises(LinAlgSpecError):
            ols(np.ones((3, 3)), np.ones(3), intercept=True)

    def test_classical_covariance_formula(self):
        rng = np.random.default_rng(1)
        X = rng.normal(size=(40, 3))
        y = rng.normal(size=40)
        fit = ols(X, y, intercept=True)
        Z = np.column_stack([np.ones(40), X])
        u = y - Z @ fit.coefficients
        s2 = (u @ u) / (40 - 4)
        want = s2 * np.linalg.inv(Z.T @ Z)
        assert np.allclose(fit.covariance, want, atol=1e-10)

    def test_residuals_orthogonal_to_design(self):
        rng = np.random.default_rng(2)
        X = rng.normal(size=(60, 4))
        y = rng.normal(size=60)
        fit = ols(X, y, intercept=True)
        assert np.max(np.abs(fit.design.T @ fit.residuals)) < 1e-8


class TestWls:
    def test_unit_weights_reproduce_ols_bitwise(self):
        rng = np.random.default_rng(3)
        X = rng.normal(size=(30, 2))
        y = rng.normal(size=30)
        a = ols(X, y, intercept=True)
        b = wls(X, y, np.ones(30), intercept=True)
        assert (a.coefficients == b.coefficients).all()
        assert (a.covariance == b.covariance).all()

    def test_duplicated_row_equals_doubled_weight(self):
        rng = np.random.default_rng(4)
        X = rng.normal(size=(12, 2))
        y = rng.normal(size=12)
        X2 = np.vstack([X, X[3]])
        y2 = np.append(y, y[3])
        w = np.ones(12)
        w[3] = 2.0
        a = ols(X2, y2, intercept=True)
        b = wls(X, y, w, intercept=True)
        assert np.allclose(a.coefficients, b.coefficients, atol=1e-10)

    def test_saturated_two_point_fit(self):
        fit = wls(np.array([[0.0], [1.0]]).reshape(2, 1), np.array([2.0, 5.0]), np.array([4.0, 1.0]), intercept=True)
        assert fit.residuals @ fit.residuals == pytest.approx(0.0, abs=1e-20)

    def test_weighted_orthogonality(self):
        rng = np.random.default_rng(5)
        X = rng.normal(size=(25, 3))
        y = rng.normal(size=25)
        w = rng.uniform(0.5, 4.0, size=25)
        fit = wls(X, y, w, intercept=True)
        assert np.max(np.abs(fit.design.T @ (w * fit.residuals))) < 1e-8

    def test_nonpositive_weight_names_row(self):
        with pytest.raises(LinAlgSpecError, match="row 2"):
            wls(np.ones((4, 1)), np.ones(4), [1.0, 1.0, 0.0, 1.0], intercept=False)


class TestWhiteCrossSection:
    def test_zero_residuals_zero_covariance(self):
        X = np.arange(1.0, 7.0).reshape(6, 1)
        fit = ols(X, 2.0 * X[:, 0], intercept=False)
        cov = white_cross_section_cov(fit, [1, 1, 2, 2, 3, 3], k_for_dof=1)
        assert np.allclose(cov, 0.0, atol=1e-20)

    def test_one_row_per_period_equals_hc0_scaled(self):
        rng = np.random.default_rng(7)
        X = rng.normal(size=(30, 2))
        y = rng.normal(size=30)
        fit = ols(X, y, intercept=True)
        cov = white_cross_section_cov(fit, np.arange(30))
        Z, u = fit.design, fit.residuals
        bread = np.linalg.inv(Z.T @ Z)
        hc0 = bread @ (Z * (u**2)[:, None]).T @ Z @ bread
        assert np.allclose(cov, hc0 * 30 / (30 - 3), atol=1e-12)

    def test_two_period_hand_sandwich(self):
        X = np.array([[1.0], [2.0], [3.0], [4.0]])
        y = np.array([1.0, 1.0, 2.0, 5.0])
        periods = np.array([1, 2, 1, 2])
        fit = ols(X, y, intercept=False)
        u = fit.residuals
        bread = 1.0 / float(X[:, 0] @ X[:, 0])
        g1 = X[0, 0] * u[0] + X[2, 0] * u[2]
        g2 = X[1, 0] * u[1] + X[3, 0] * u[3]
        want = bread * (g1**2 + g2**2) * bread * 4.0 / 3.0
        got = white_cross_section_cov(fit, periods)
        assert got[0, 0] == pytest.approx(want, abs=1e-12)

    def test_weighted_fit_uses_weighted_design(self):
        rng = np.random.default_rng(8)
        X = rng.normal(size=(20, 2))
        y = rng.normal(size=20)
        w = rng.uniform(0.5, 2.0, 20)
        fit = wls(X, y, w, intercept=True)
        cov = white_cross_section_cov(fit, np.repeat(np.arange(5), 4))
        sw = np.sqrt(w)
        Z = fit.design * sw[:, None]
        u = fit.residuals * sw
        bread = np.linalg.inv(Z.T @ Z)
        meat = np.zeros((3, 3))
        for t in range(5):
            sel = np.repeat(np.arange(5), 4) == t
            g = Z[sel].T @ u[sel]
            meat += np.outer(g, g)
        want = bread @ meat @ bread * 20 / 17
        assert np.allclose(cov, want, atol=1e-12)


class TestFitStatistics:
    def test_perfect_fit(self):
        X = np.arange(1.0, 9.0)
        fit = ols(X, 3.0 * X + 1.0, intercept=True)
        stats = fit_statistics(fit)
        assert stats.r_squared == pytest.approx(1.0, abs=1e-12)
        assert stats.sum_squared_resid == pytest.approx(0.0, abs=1e-18)

    def test_alternating_residual_dw(self):
        assert durbin_watson(np.array([1.0, -1.0, 1.0, -1.0])) == pytest.approx(3.0)

    def test_dw_skips_entity_boundaries(self):
        u = np.array([1.0, 1.0, -5.0, -5.0])
        ents = np.array(["A", "A", "B", "B"])
        # within-entity differences are zero; the A->B jump must not count
        assert durbin_watson(u, ents) == 0.0
        assert durbin_watson(u) > 0.0

    def test_dw_sign_invariance_and_range(self):
        rng = np.random.default_rng(9)
        for _ in range(10):
            u = rng.normal(size=50)
            ents = np.repeat([f"e{i}" for i in range(5)], 10)
            d = durbin_watson(u, ents)
            assert durbin_watson(-u, ents) == pytest.approx(d, abs=1e-14)
            assert 0.0 <= d <= 4.0

    def test_adjusted_r2_and_f(self):
        rng = np.random.default_rng(10)
        X = rng.normal(size=(84, 5))
        beta = np.array([1.0, -0.5, 0.2, 0.0, 0.3])
        y = 2.0 + X @ beta + rng.normal(0, 0.7, 84)
        fit = ols(X, y, intercept=True)
        stats = fit_statistics(fit, k_params=19)
        r2 = stats.r_squared
        assert stats.adjusted_r_squared == pytest.approx(1 - (1 - r2) * 83 / (84 - 19), abs=1e-12)
        assert stats.se_of_regression == pytest.approx(
            np.sqrt(stats.sum_squared_resid / (84 - 19)), abs=1e-12
        )
        expected_f = (r2 / (1 - r2)) * (84 - 19) / 18
        assert stats.f_statistic == pytest.approx(expected_f, rel=1e-10)

    def test_zero_tss_reports_undefined(self):
        fit = ols(np.arange(1.0, 7.0), np.full(6, 3.0), intercept=True)
        stats = fit_statistics(fit)
        assert stats.r_squared is None
