"""nu-parameterized one-class SVM with an RBF kernel and an SMO dual solver."""

from __future__ import annotations

import numpy as np
from scipy.spatial.distance import cdist, pdist

from gearline.occ.base import OccConfig, OccModel, check_training

KKT_TOL = 1e-6
_TAU = 1e-12


def median_gamma(X: np.ndarray) -> float:
    """1 / (2 median^2) of the pairwise Euclidean distances."""
    d = pdist(X)
    med = float(np.median(d)) if d.size else 0.0
    if med <= 0:
        positive = d[d > 0]
        med = float(positive.mean()) if positive.size else 1.0
    return 1.0 / (2.0 * med**2)


def rbf_kernel(A: np.ndarray, B: np.ndarray, gamma: float) -> np.ndarray:
    return np.exp(-gamma * cdist(A, B, "sqeuclidean"))


def solve_one_class_dual(K: np.ndarray, nu: float, tol: float = KKT_TOL, max_iter: int | None = None):
    """Minimize 0.5 a'Ka subject to 0 <= a_i <= 1 and sum(a) = nu * n.

    Sequential minimal optimization with second-order working-set selection.
    Returns (alpha, rho, iterations); the decision function is K(., X) a - rho.
    """
    n = K.shape[0]
    total = nu * n
    alpha = np.zeros(n)
    n_full = int(np.floor(total))
    alpha[:n_full] = 1.0
    if n_full < n:
        alpha[n_full] = total - n_full
    grad = K @ alpha
    diag = np.diag(K).copy()
    max_iter = max_iter or max(10_000_000, 100 * n)

    it = 0
    while it < max_iter:
        can_up = alpha < 1.0
        can_down = alpha > 0.0
        neg_grad = -grad
        up_vals = np.where(can_up, neg_grad, -np.inf)
        i = int(np.argmax(up_vals))
        g_max = up_vals[i]
        low_vals = np.where(can_down, neg_grad, np.inf)
        if g_max - low_vals.min() < tol:
            break
        b = g_max + grad  # g_max - (-grad_j)
        a = diag[i] + diag - 2.0 * K[i]
        a = np.where(a > 0, a, _TAU)
        candidates = can_down & (b > 0)
        gain = np.where(candidates, -(b * b) / a, np.inf)
        j = int(np.argmin(gain))
        step = min(b[j] / a[j], 1.0 - alpha[i], alpha[j])
        alpha[i] += step
        alpha[j] -= step
        grad += step * (K[:, i] - K[:, j])
        it += 1

    free = (alpha > 0) & (alpha < 1)
    if np.any(free):
        rho = float(grad[free].mean())
    else:
        at_upper = alpha >= 1.0
        lb = grad[at_upper].max() if np.any(at_upper) else -np.inf
        ub = grad[~at_upper].min() if np.any(~at_upper) else np.inf
        rho = float(0.5 * (lb + ub))
    return alpha, rho, it


class OneClassSvmModel(OccModel):
    kind = "ocsvm"

    def __init__(self, support: np.ndarray, dual_coef: np.ndarray, rho: float, gamma: float, nu: float):
        self.support = support
        self.dual_coef = dual_coef
        self.rho = float(rho)
        self.gamma = float(gamma)
        self.nu = float(nu)
        self.n_features = support.shape[1]

    def decision_function(self, X) -> np.ndarray:
        X = self._check_query(X)
        return rbf_kernel(X, self.support, self.gamma) @ self.dual_coef - self.rho

    def score_samples(self, X) -> np.ndarray:
        return self.decision_function(X)

    def to_state(self):
        meta = {"rho": self.rho, "gamma": self.gamma, "nu": self.nu}
        return meta, {"support": self.support, "dual_coef": self.dual_coef}

    @classmethod
    def from_state(cls, meta, arrays):
        return cls(arrays["support"], arrays["dual_coef"], meta["rho"], meta["gamma"], meta["nu"])


def ocsvm_fit(X, cfg: OccConfig) -> OneClassSvmModel:
    X = check_training(X, 10)
    gamma = median_gamma(X) if cfg.rbf_gamma == "median" else float(cfg.rbf_gamma)
    K = rbf_kernel(X, X, gamma)
    alpha, rho, _ = solve_one_class_dual(K, cfg.contamination_nu)
    sv = alpha > 0
    return OneClassSvmModel(X[sv].copy(), alpha[sv].copy(), rho, gamma, cfg.contamination_nu)
