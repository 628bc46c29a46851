import numpy as np
import pytest
import scipy.stats as sps

from fluencykit.models import fit_mlr_stepwise, fit_ols


class TestOls:
    def test_noiseless_recovery(self):
        rng = np.random.default_rng(0)
        X = rng.normal(size=(50, 2))
        y = 1.5 * X[:, 0] - 2.0 * X[:, 1] + 0.5
        fit = fit_ols(X, y, ["a", "b"])
        assert fit.coefficients == pytest.approx([1.5, -2.0], abs=1e-9)
        assert fit.intercept == pytest.approx(0.5, abs=1e-9)
        assert fit.r2 == pytest.approx(1.0, abs=1e-12)

    def test_matches_normal_equations_oracle(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            n = int(rng.integers(12, 120))
            d = int(rng.integers(1, 6))
            X = rng.normal(size=(n, d))
            y = rng.normal(size=n)
            fit = fit_ols(X, y)
            design = np.column_stack([np.ones(n), X])
            oracle = np.linalg.solve(design.T @ design, design.T @ y)
            got = np.concatenate([[fit.intercept], fit.coefficients])
            assert np.max(np.abs(got - oracle)) <= 1e-8 * max(1.0, np.max(np.abs(oracle)))

    def test_pvalues_match_t_distribution_oracle(self):
        rng = np.random.default_rng(2)
        n, d = 80, 3
        X = rng.normal(size=(n, d))
        y = X[:, 0] + rng.normal(size=n)
        fit = fit_ols(X, y)
        design = np.column_stack([np.ones(n), X])
        beta = np.linalg.solve(design.T @ design, design.T @ y)
        resid = y - design @ beta
        sigma2 = resid @ resid / (n - d - 1)
        cov = sigma2 * np.linalg.inv(design.T @ design)
        se = np.sqrt(np.diag(cov))[1:]
        t = beta[1:] / se
        p_oracle = 2 * sps.t.sf(np.abs(t), n - d - 1)
        assert fit.p_values == pytest.approx(p_oracle, abs=1e-9)

    def test_rank_deficient_rejected(self):
        X = np.ones((30, 2))
        X[:, 1] = 2 * X[:, 0]
        with pytest.raises(ValueError, match="rank"):
            fit_ols(X, np.arange(30.0))

    def test_too_few_rows_rejected(self):
        with pytest.raises(ValueError, match="n > d"):
            fit_ols(np.ones((4, 2)) * np.arange(4)[:, None], np.arange(4.0))


class TestStepwise:
    def test_noiseless_keeps_both(self):
        rng = np.random.default_rng(3)
        X = rng.normal(size=(50, 2))
        y = 1.5 * X[:, 0] - 2.0 * X[:, 1] + 0.5
        model = fit_mlr_stepwise(X, y, ["a", "b"])
        assert set(model.retained) == {"a", "b"}
        assert model.coefficients["a"] == pytest.approx(1.5, abs=1e-9)
        assert model.coefficients["b"] == pytest.approx(-2.0, abs=1e-9)
        assert model.r2 == pytest.approx(1.0, abs=1e-12)
        assert model.eliminated == []

    def test_noise_predictor_eliminated(self):
        rng = np.random.default_rng(4)
        n = 200
        X = rng.normal(size=(n, 3))
        y = 2.0 * X[:, 0] + 1.0 * X[:, 1] + rng.normal(0, 0.5, n)
        model = fit_mlr_stepwise(X, y, ["x1", "x2", "noise"])
        assert "noise" in model.eliminated
        assert set(model.retained) == {"x1", "x2"}

    def test_elimination_rate_over_seeds(self):
        eliminated = 0
        for seed in range(100):
            rng = np.random.default_rng(31_000 + seed)
            n = 200
            X = rng.normal(size=(n, 3))
            y = 2.0 * X[:, 0] + 1.0 * X[:, 1] + rng.normal(0, 0.5, n)
            model = fit_mlr_stepwise(X, y, ["x1", "x2", "noise"])
            if "noise" not in model.retained:
                eliminated += 1
            assert model.nonsignificant_last or all(
                p <= 0.05 for p in model.p_values.values())
        assert eliminated >= 95

    def test_last_predictor_flagged_not_dropped(self):
        rng = np.random.default_rng(5)
        X = rng.normal(size=(40, 1))
        y = rng.normal(size=40)  # no relationship at all
        model = fit_mlr_stepwise(X, y, ["only"])
        assert model.retained == ["only"]
        assert model.nonsignificant_last

    def test_standardized_betas(self):
        rng = np.random.default_rng(6)
        X = rng.normal(size=(120, 2)) * np.array([3.0, 0.2])
        y = 0.5 * X[:, 0] - 4.0 * X[:, 1] + rng.normal(0, 0.3, 120)
        model = fit_mlr_stepwise(X, y, ["a", "b"])
        for name, col in (("a", 0), ("b", 1)):
            expected = model.coefficients[name] * np.std(X[:, col]) / np.std(y)
            assert model.beta_coefficients[name] == pytest.approx(expected, abs=1e-12)

    def test_constant_column_dropped(self):
        rng = np.random.default_rng(7)
        X = np.column_stack([rng.normal(size=60), np.full(60, 2.5)])
        y = X[:, 0] + rng.normal(0, 0.1, 60)
        model = fit_mlr_stepwise(X, y, ["real", "flat"])
        assert model.dropped_constant == ["flat"]
        assert model.retained == ["real"]

    def test_predict_uses_named_columns(self):
        rng = np.random.default_rng(8)
        X = rng.normal(size=(80, 3))
        y = 1.0 * X[:, 2] + rng.normal(0, 0.05, 80)
        model = fit_mlr_stepwise(X, y, ["a", "b", "c"])
        preds = model.predict(X, ["a", "b", "c"])
        assert np.sqrt(np.mean((preds - y) ** 2)) < 0.1
