"""NIPALS PLS1 regression plus the resampling helpers built on it."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .errors import ConstantTarget, DimensionMismatch, RankDeficient

WEIGHT_NORM_EPS = 1e-12


def _nipals(Xc, yc, n_components):
    """Core loop on centered data. Returns W, P, q, T, ssy (A achieved may be smaller)."""
    n, p = Xc.shape
    E = Xc.copy()
    f = yc.copy()
    W = np.empty((p, n_components))
    P = np.empty((p, n_components))
    q = np.empty(n_components)
    T = np.empty((n, n_components))
    ssy = np.empty(n_components)
    a = 0
    for a in range(n_components):
        w = E.T @ f
        norm = np.linalg.norm(w)
        if norm < WEIGHT_NORM_EPS:
            break
        w /= norm
        t = E @ w
        tt = t @ t
        if tt < WEIGHT_NORM_EPS ** 2:
            break
        p_a = E.T @ t / tt
        q_a = f @ t / tt
        E -= np.outer(t, p_a)
        f = f - q_a * t
        W[:, a], P[:, a], q[a], T[:, a] = w, p_a, q_a, t
        ssy[a] = q_a * q_a * tt
    else:
        a = n_components
    return W[:, :a], P[:, :a], q[:a], T[:, :a], ssy[:a]


class PLS1Regression(BaseEstimator, RegressorMixin):
    """Single-response partial least squares fitted with NIPALS.

    ``n_components`` is capped at ``min(n - 1, p)``. If deflation runs out of
    signal earlier (weight norm below 1e-12) fitting stops and
    ``n_components_`` records how many components were actually built.

    Attributes
    ----------
    x_mean_, y_mean_ : centering statistics
    x_weights_ : (p, A) unit-norm weight vectors W
    x_loadings_ : (p, A) loadings P
    y_loadings_ : (A,) inner coefficients q
    x_scores_ : (n, A) scores T
    coef_ : (p,) regression coefficients b = W (P'W)^-1 q
    ssy_per_component_ : (A,) explained sum of squares of y per component
    ssy_cum_ : float
    """

    def __init__(self, n_components=2):
        self.n_components = n_components

    def fit(self, X, y):
        X = check_array(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64).ravel()
        n, p = X.shape
        if y.shape[0] != n:
            raise DimensionMismatch(f"X has {n} rows but y has {y.shape[0]}")
        if n < 2:
            raise ValueError("PLS needs at least two samples")
        if self.n_components < 1:
            raise ValueError("n_components must be >= 1")
        self.x_mean_ = X.mean(axis=0)
        self.y_mean_ = float(y.mean())
        yc = y - self.y_mean_
        self.ssy_total_ = float(yc @ yc)
        if self.ssy_total_ <= 1e-300 or np.ptp(y) == 0.0:
            raise ConstantTarget("y is constant")
        A = min(int(self.n_components), n - 1, p)
        W, P, q, T, ssy = _nipals(X - self.x_mean_, yc, A)
        if W.shape[1] == 0:
            raise RankDeficient("X carries no covariance with y; no PLS component could be built")
        self.x_weights_, self.x_loadings_, self.y_loadings_ = W, P, q
        self.x_scores_ = T
        self.ssy_per_component_ = ssy
        self.ssy_cum_ = float(ssy.sum())
        self.n_components_ = W.shape[1]
        self.coef_ = W @ np.linalg.solve(P.T @ W, q)
        self.n_features_in_ = p
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = np.asarray(X, dtype=np.float64)
        single = X.ndim == 1
        X2 = np.atleast_2d(X)
        if X2.shape[1] != self.n_features_in_:
            raise DimensionMismatch(f"expected {self.n_features_in_} features, got {X2.shape[1]}")
        yhat = (X2 - self.x_mean_) @ self.coef_ + self.y_mean_
        return yhat[0] if single else yhat

    def vip(self):
        """Variable influence on projection for every column.

        sqrt(p * sum_a(w_ja^2 * SSY_a) / SSY_cum) with unit-norm weights, so
        the mean of VIP^2 over columns is exactly 1.
        """
        check_is_fitted(self, "coef_")
        W = self.x_weights_ / np.linalg.norm(self.x_weights_, axis=0)
        p = W.shape[0]
        return np.sqrt(p * (W ** 2 @ self.ssy_per_component_) / self.ssy_cum_)


def fit_pls1(X, y, A) -> PLS1Regression:
    return PLS1Regression(n_components=A).fit(X, y)


def pls_predict(model: PLS1Regression, X):
    return model.predict(X)


def loo_coefficients(X, y, A):
    """Row i holds the coefficient vector fitted with sample i left out."""
    X = check_array(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    n = X.shape[0]
    if n < 3:
        raise ValueError("leave-one-out coefficients need at least three samples")
    out = np.empty((n, X.shape[1]))
    keep = np.ones(n, dtype=bool)
    for i in range(n):
        keep[i] = False
        out[i] = fit_pls1(X[keep], y[keep], A).coef_
        keep[i] = True
    return out


def kfold_assignments(n, folds, seed):
    """Fold index per sample from a seeded permutation; fold sizes differ by at most one."""
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    fold_of = np.empty(n, dtype=int)
    for f, idx in enumerate(np.array_split(perm, folds)):
        fold_of[idx] = f
    return fold_of


def cv_rmse(X, y, A, folds=5, seed=0, fold_of=None):
    """Root mean squared error of out-of-fold PLS1 predictions."""
    X = check_array(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    n = X.shape[0]
    if folds < 2 or n < folds:
        raise ValueError(f"need 2 <= folds <= n, got folds={folds}, n={n}")
    if fold_of is None:
        fold_of = kfold_assignments(n, folds, seed)
    resid = np.empty(n)
    for f in range(folds):
        test = fold_of == f
        model = fit_pls1(X[~test], y[~test], A)
        resid[test] = y[test] - model.predict(X[test])
    return float(np.sqrt(np.mean(resid ** 2)))
