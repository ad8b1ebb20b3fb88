import math

import numpy as np
import pytest

from netblock.errors import DomainError, ZeroVarianceError
from netblock.linalg_stats import sample_correlation
from netblock.sparse_regress import (
    dantzig_fit,
    dantzig_solve,
    lasso_fit,
    nodewise_residual_panel,
    soft_threshold,
    tuning_lambda,
)

from oracles import (
    center_cols,
    dantzig_vertex_oracle,
    lasso_kkt_violation,
    standardized_problem,
)


def orthonormal_design(rng, n=40, k=4):
    """Panel whose first k columns have identity 1/n covariance; last column is free."""
    g = center_cols(rng.standard_normal((n, k)))
    q, _ = np.linalg.qr(g)
    y = rng.standard_normal(n) + q @ rng.uniform(-4, 4, k)
    return np.column_stack([q * math.sqrt(n), y])


def correlated_panel(rng, n, q):
    mix = rng.standard_normal((q, q)) * 0.6 + np.eye(q)
    return rng.standard_normal((n, q)) @ mix


class TestTuning:
    def test_unit_log(self):
        n, q = 100, 3
        x = np.zeros((n, q))
        x[:, 0] = np.tile([1.0, -1.0], n // 2)
        x[:, 1:] = np.random.default_rng(0).standard_normal((n, q - 1))
        # with q = e the log factor is 1; emulate through the formula directly
        lam = tuning_lambda(x, 0, 2.0)
        assert lam == pytest.approx(2.0 * math.sqrt(math.log(3) / 100))

    def test_formula_value(self, rng):
        n, q = 80, 50
        x = rng.standard_normal((n, q))
        x[:, 0] = x[:, 0] / x[:, 0].std() * math.sqrt(2.5)
        # mpmath: 2.02 * sqrt(2.5 * log(50) / 80) = 0.706280279690475624
        assert tuning_lambda(x, 0, 2.02) == pytest.approx(0.706280279690475624, abs=1e-12)

    def test_zero_delta(self, rng):
        assert tuning_lambda(rng.standard_normal((10, 3)), 1, 0.0) == 0.0

    def test_single_component_rejected(self, rng):
        with pytest.raises(DomainError):
            tuning_lambda(rng.standard_normal((10, 1)), 0, 2.0)

    def test_zero_variance(self, rng):
        x = rng.standard_normal((10, 3))
        x[:, 2] = 1.0
        with pytest.raises(ZeroVarianceError):
            tuning_lambda(x, 0, 2.0)


class TestLasso:
    def test_large_penalty_gives_null_model(self, rng):
        x = correlated_panel(rng, 30, 4)
        sigma, b, s = standardized_problem(x, 2)
        fit = lasso_fit(x, 2, lam=np.max(np.abs(s * b)) * 1.0001)
        assert np.all(fit.beta_hat == 0)
        np.testing.assert_array_equal(fit.residuals, center_cols(x)[:, 2])

    def test_orthonormal_design_soft_thresholds(self, rng):
        x = orthonormal_design(rng)
        i = x.shape[1] - 1
        sigma, b, s = standardized_problem(x, i)
        np.testing.assert_allclose(sigma, np.eye(4), atol=1e-12)
        lam = 0.4 * np.max(np.abs(b))
        fit = lasso_fit(x, i, lam=lam)
        np.testing.assert_allclose(fit.beta_hat, soft_threshold(b, lam), atol=1e-9)

    def test_objective_beats_truth(self, rng):
        n, beta_true = 50, np.array([1.5, -0.7])
        x = rng.standard_normal((n, 3))
        x[:, 2] = x[:, :2] @ beta_true + 0.5 * rng.standard_normal(n)
        fit = lasso_fit(x, 2)
        xc = center_cols(x)
        sd = xc[:, :2].std(axis=0)
        z = xc[:, :2] / sd

        def objective(alpha):
            r = xc[:, 2] - z @ alpha
            return r @ r / (2 * n) + fit.lam * np.abs(alpha).sum()

        assert objective(fit.beta_hat * sd) <= objective(beta_true * sd) + 1e-12

    def test_kkt_and_residual_mean(self, rng):
        for _ in range(20):
            q = int(rng.integers(2, 9))
            x = correlated_panel(rng, int(rng.integers(10, 60)), q)
            i = int(rng.integers(q))
            fit = lasso_fit(x, i, delta=float(rng.uniform(0.3, 3)))
            assert lasso_kkt_violation(x, i, fit.beta_hat, fit.lam) <= 1e-5
            assert abs(fit.residuals.mean()) <= 1e-12 * max(1.0, np.abs(x).max())
            assert fit.intercept == pytest.approx(
                x[:, i].mean() - np.delete(x.mean(axis=0), i) @ fit.beta_hat
            )

    def test_tiny_penalty_reaches_ols(self, rng):
        x = correlated_panel(rng, 60, 4)
        xc = center_cols(x)
        ols = np.linalg.lstsq(xc[:, :3], xc[:, 3], rcond=None)[0]
        fit = lasso_fit(x, 3, lam=1e-8)
        assert np.max(np.abs(fit.beta_hat - ols)) <= 1e-4


class TestDantzig:
    def test_large_penalty_gives_zero(self, rng):
        x = correlated_panel(rng, 30, 4)
        sigma, b, s = standardized_problem(x, 0)
        fit = dantzig_fit(x, 0, lam=np.max(np.abs(s * b)))
        assert np.all(fit.beta_hat == 0)

    def test_identity_design_soft_thresholds(self, rng):
        x = orthonormal_design(rng)
        i = x.shape[1] - 1
        _, b, _ = standardized_problem(x, i)
        lam = 0.3 * np.max(np.abs(b))
        fit = dantzig_fit(x, i, lam=lam)
        np.testing.assert_allclose(fit.beta_hat, soft_threshold(b, lam), atol=1e-9)

    def test_matches_vertex_oracle(self, rng):
        x = correlated_panel(rng, 40, 4)
        sigma, b, s = standardized_problem(x, 1)
        M, c = s[:, None] * sigma, s * b
        fit = dantzig_fit(x, 1)
        best, _ = dantzig_vertex_oracle(M, c, fit.lam)
        assert np.abs(fit.beta_hat).sum() <= best + 1e-8
        assert np.max(np.abs(M @ fit.beta_hat - c)) <= fit.lam + 1e-8

    def test_feasibility_always(self, rng):
        for _ in range(20):
            q = int(rng.integers(2, 10))
            x = correlated_panel(rng, int(rng.integers(8, 50)), q)
            i = int(rng.integers(q))
            fit = dantzig_fit(x, i, delta=float(rng.uniform(0.1, 3)))
            sigma, b, s = standardized_problem(x, i)
            assert np.max(np.abs(s * (sigma @ fit.beta_hat - b))) <= fit.lam + 1e-8
            assert abs(fit.residuals.mean()) <= 1e-12 * max(1.0, np.abs(x).max())

    def test_tiny_penalty_reaches_ols(self, rng):
        x = correlated_panel(rng, 60, 4)
        xc = center_cols(x)
        ols = np.linalg.lstsq(xc[:, 1:], xc[:, 0], rcond=None)[0]
        fit = dantzig_fit(x, 0, lam=1e-8)
        assert np.max(np.abs(fit.beta_hat - ols)) <= 1e-4

    def test_solve_rejects_negative_penalty(self):
        with pytest.raises(DomainError):
            dantzig_solve(np.eye(2), np.ones(2), -1.0)


class TestResidualPanel:
    def test_single_column(self, rng):
        x = rng.standard_normal((12, 1)) + 3
        np.testing.assert_array_equal(nodewise_residual_panel(x), x - x.mean(axis=0))

    def test_huge_penalty_returns_centered(self, rng):
        x = correlated_panel(rng, 30, 5)
        for method in ("lasso", "dantzig"):
            out = nodewise_residual_panel(x, method, delta=1e6)
            np.testing.assert_array_equal(out, x - x.mean(axis=0))

    def test_residual_decorrelates(self, rng):
        n = 200
        x = rng.standard_normal((n, 3))
        x[:, 2] = x[:, 0] + 0.5 * rng.standard_normal(n)
        raw = sample_correlation(x[:, [2]], x[:, [0]])[0, 0]
        for method in ("lasso", "dantzig"):
            resid = nodewise_residual_panel(x, method)
            after = sample_correlation(resid[:, [2]], x[:, [0]])[0, 0]
            assert abs(after) < abs(raw)

    @pytest.mark.parametrize("method", ["lasso", "dantzig"])
    def test_columns_match_single_fits(self, rng, method):
        x = correlated_panel(rng, 40, 6)
        out = nodewise_residual_panel(x, method)
        fit = lasso_fit if method == "lasso" else dantzig_fit
        for i in range(6):
            np.testing.assert_allclose(out[:, i], fit(x, i).residuals, atol=1e-6)
        np.testing.assert_allclose(out.mean(axis=0), 0, atol=1e-12)

    def test_unknown_method(self, rng):
        with pytest.raises(DomainError):
            nodewise_residual_panel(rng.standard_normal((10, 3)), "ridge")
