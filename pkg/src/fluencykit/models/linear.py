"""Ordinary least squares and backward stepwise selection.

The solver is QR-based; coefficient p-values come from the exact t
distribution implemented in the stats module, so the stepwise criterion has
no external statistical dependency.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..stats import t_sf


@dataclass
class OlsFit:
    names: list[str]
    coefficients: np.ndarray      # aligned with names
    intercept: float
    std_errors: np.ndarray
    t_values: np.ndarray
    p_values: np.ndarray          # two-tailed, per coefficient
    r2: float
    n: int

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        return X @ self.coefficients + self.intercept

    def residual_rmse(self, X, y) -> float:
        r = np.asarray(y, dtype=np.float64) - self.predict(X)
        return float(np.sqrt(r @ r / len(r)))


def fit_ols(X, y, names: list[str] | None = None) -> OlsFit:
    """OLS with intercept via QR; t-based two-tailed coefficient p-values."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("X must be 2-D")
    n, d = X.shape
    if names is None:
        names = [f"x{j}" for j in range(d)]
    if len(names) != d:
        raise ValueError("names must match the number of columns")
    if n <= d + 2:
        raise ValueError(f"need n > d + 2 observations, got n={n}, d={d}")

    design = np.column_stack([np.ones(n), X])
    q, r = np.linalg.qr(design)
    diag = np.abs(np.diag(r))
    if diag.min() <= 1e-10 * max(diag.max(), 1.0):
        raise ValueError("design matrix is rank deficient")
    beta = np.linalg.solve(r, q.T @ y)

    resid = y - design @ beta
    rss = float(resid @ resid)
    df = n - d - 1
    sigma2 = rss / df
    r_inv = np.linalg.solve(r, np.eye(d + 1))
    cov = sigma2 * (r_inv @ r_inv.T)
    se = np.sqrt(np.diag(cov))

    tss = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - rss / tss if tss > 0 else 1.0

    t_vals = np.divide(beta, se, out=np.zeros_like(beta), where=se > 0)
    p_vals = np.array([2.0 * t_sf(abs(t), df) for t in t_vals])
    return OlsFit(
        names=list(names),
        coefficients=beta[1:],
        intercept=float(beta[0]),
        std_errors=se[1:],
        t_values=t_vals[1:],
        p_values=p_vals[1:],
        r2=r2,
        n=n,
    )


@dataclass
class MlrModel:
    """Backward-stepwise linear model over named predictors."""

    retained: list[str]
    coefficients: dict[str, float]
    intercept: float
    p_values: dict[str, float]
    beta_coefficients: dict[str, float]   # standardized: b_j * sd(x_j) / sd(y)
    r2: float
    eliminated: list[str] = field(default_factory=list)
    dropped_constant: list[str] = field(default_factory=list)
    nonsignificant_last: bool = False

    def predict(self, X, names: list[str]) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        cols = [names.index(r) for r in self.retained]
        coef = np.array([self.coefficients[r] for r in self.retained])
        return X[:, cols] @ coef + self.intercept


def fit_mlr_stepwise(X, y, names: list[str] | None = None, alpha: float = 0.05) -> MlrModel:
    """Backward elimination: drop the worst-p predictor until all p <= alpha.

    If the last remaining predictor is itself nonsignificant it is still
    reported, flagged via nonsignificant_last.  Constant columns cannot enter
    any fit and are dropped up front.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if names is None:
        names = [f"x{j}" for j in range(X.shape[1])]
    names = list(names)

    keep = [j for j in range(X.shape[1]) if np.ptp(X[:, j]) > 0]
    dropped_constant = [names[j] for j in range(X.shape[1]) if j not in keep]
    if not keep:
        raise ValueError("all predictors are constant")

    active = list(keep)
    eliminated: list[str] = []
    nonsignificant_last = False
    while True:
        fit = fit_ols(X[:, active], y, [names[j] for j in active])
        worst = int(np.argmax(fit.p_values))
        if fit.p_values[worst] <= alpha:
            break
        if len(active) == 1:
            nonsignificant_last = True
            break
        eliminated.append(names[active[worst]])
        active.pop(worst)

    sy = float(np.std(y))
    betas = {
        name: float(coef * np.std(X[:, col]) / sy) if sy > 0 else 0.0
        for name, coef, col in zip(fit.names, fit.coefficients, active)
    }
    model = MlrModel(
        retained=fit.names,
        coefficients={nm: float(c) for nm, c in zip(fit.names, fit.coefficients)},
        intercept=fit.intercept,
        p_values={nm: float(p) for nm, p in zip(fit.names, fit.p_values)},
        beta_coefficients=betas,
        r2=fit.r2,
        eliminated=eliminated,
        dropped_constant=dropped_constant,
        nonsignificant_last=nonsignificant_last,
    )
    assert nonsignificant_last or all(p <= alpha for p in model.p_values.values())
    return model
