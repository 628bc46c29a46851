"""Epsilon-insensitive support vector regression with a radial kernel.

The dual is solved by sequential minimal optimization on the doubled variable
vector u = (alpha, alpha*), picking the maximal violating pair each step
(LIBSVM-style first-order working set selection).  Features are standardized
internally with training-fold statistics, so predict() accepts raw features
and the fit is invariant to affine rescaling of the inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class ConvergenceError(RuntimeError):
    """SMO hit the iteration cap before reaching the KKT tolerance."""


def rbf_kernel(a: np.ndarray, b: np.ndarray, gamma: float) -> np.ndarray:
    sq = (
        (a * a).sum(axis=1)[:, None]
        + (b * b).sum(axis=1)[None, :]
        - 2.0 * (a @ b.T)
    )
    return np.exp(-gamma * np.maximum(sq, 0.0))


@dataclass
class SvrModel:
    support_vectors: np.ndarray   # standardized coordinates
    dual_coef: np.ndarray         # alpha - alpha*, nonzero entries only
    bias: float
    gamma: float
    C: float
    epsilon: float
    feature_means: np.ndarray
    feature_sds: np.ndarray
    n_iterations: int
    kkt_gap: float
    objective_history: list[float] = field(default_factory=list)

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        z = (X - self.feature_means) / self.feature_sds
        if len(self.dual_coef) == 0:
            return np.full(len(z), self.bias)
        return rbf_kernel(z, self.support_vectors, self.gamma) @ self.dual_coef + self.bias


def _smo(K: np.ndarray, y: np.ndarray, C: float, epsilon: float, tol: float,
         max_iter: int, track_objective: bool) -> tuple[np.ndarray, float, int, float, list[float]]:
    """Solve min 0.5 u'Qu + p'u, s'u = 0, 0 <= u <= C, Q = [[K,-K],[-K,K]]."""
    l = len(y)
    s = np.concatenate([np.ones(l), -np.ones(l)])
    p = np.concatenate([epsilon - y, epsilon + y])
    Q = np.block([[K, -K], [-K, K]])
    u = np.zeros(2 * l)
    g = p.copy()                 # gradient of the objective at u
    kdiag = np.diag(K)
    qdiag = np.concatenate([kdiag, kdiag])
    history: list[float] = []

    it = 0
    gap = np.inf
    while it < max_iter:
        neg_sg = -s * g
        up_mask = ((s > 0) & (u < C - 1e-12)) | ((s < 0) & (u > 1e-12))
        low_mask = ((s < 0) & (u < C - 1e-12)) | ((s > 0) & (u > 1e-12))
        if not up_mask.any() or not low_mask.any():
            gap = 0.0
            break
        i = int(np.flatnonzero(up_mask)[np.argmax(neg_sg[up_mask])])
        j = int(np.flatnonzero(low_mask)[np.argmin(neg_sg[low_mask])])
        m = neg_sg[i]
        mm = neg_sg[j]
        gap = m - mm
        if gap < tol:
            break

        # move u_i by s_i * step and u_j by -s_j * step, keeping s'u constant
        quad = qdiag[i] + qdiag[j] - 2.0 * s[i] * s[j] * Q[i, j]
        step = gap / max(quad, 1e-12)
        if s[i] > 0:
            step = min(step, C - u[i])
        else:
            step = min(step, u[i])
        if s[j] > 0:
            step = min(step, u[j])
        else:
            step = min(step, C - u[j])
        du_i = s[i] * step
        du_j = -s[j] * step
        u[i] += du_i
        u[j] += du_j
        g += Q[:, i] * du_i + Q[:, j] * du_j
        it += 1
        if track_objective:
            history.append(float(0.5 * u @ (g + p)))  # 0.5 u'Qu + p'u since g = Qu + p
    else:
        raise ConvergenceError(
            f"SMO did not converge in {max_iter} iterations (KKT gap {gap:.3g}, tol {tol:.3g})")

    free = (u > 1e-9) & (u < C - 1e-9)
    if free.any():
        b = float(np.mean((-s * g)[free]))
    else:
        neg_sg = -s * g
        up_mask = ((s > 0) & (u < C - 1e-12)) | ((s < 0) & (u > 1e-12))
        low_mask = ((s < 0) & (u < C - 1e-12)) | ((s > 0) & (u > 1e-12))
        hi = neg_sg[up_mask].max() if up_mask.any() else 0.0
        lo = neg_sg[low_mask].min() if low_mask.any() else 0.0
        b = float((hi + lo) / 2.0)
    beta = u[:l] - u[l:]
    return beta, b, it, float(max(gap, 0.0)), history


def fit_svr(X, y, C: float = 1.0, epsilon: float = 0.1, gamma: float | None = None,
            tol: float = 1e-3, max_iter: int = 200_000,
            track_objective: bool = False) -> SvrModel:
    """Fit an RBF epsilon-SVR; gamma defaults to 1 / (d * var of scaled X)."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if C <= 0 or epsilon < 0:
        raise ValueError("need C > 0 and epsilon >= 0")
    if X.ndim != 2 or len(X) != len(y):
        raise ValueError("X must be 2-D and aligned with y")

    means = X.mean(axis=0)
    sds = X.std(axis=0)
    sds = np.where(sds > 0, sds, 1.0)
    z = (X - means) / sds
    if gamma is None:
        var = float(z.var())
        gamma = 1.0 / (z.shape[1] * var) if var > 0 else 1.0 / z.shape[1]
    if gamma <= 0:
        raise ValueError("gamma must be positive")

    K = rbf_kernel(z, z, gamma)
    beta, b, n_iter, gap, history = _smo(K, y, C, epsilon, tol, max_iter, track_objective)
    nz = np.abs(beta) > 1e-12
    return SvrModel(
        support_vectors=z[nz],
        dual_coef=beta[nz],
        bias=b,
        gamma=gamma,
        C=C,
        epsilon=epsilon,
        feature_means=means,
        feature_sds=sds,
        n_iterations=n_iter,
        kkt_gap=gap,
        objective_history=history,
    )
