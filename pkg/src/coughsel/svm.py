"""Linear soft-margin SVM solved in the dual by SMO.

Minimizes 0.5*||w||^2 + C * sum_i max(0, 1 - y_i (w.x_i + b)) with an
unregularized bias. The dual

    min_a 0.5 a'Qa - sum(a)   s.t. 0 <= a_i <= C, y'a = 0,   Q_ij = y_i y_j x_i.x_j

is solved by two-variable updates with second-order working-set selection,
stopping when the maximal KKT violation drops below ``tol``.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .errors import DimensionMismatch, NoConvergence, SingleClass

_TAU = 1e-12


def _smo(K, y, C, tol, max_iter):
    n = y.shape[0]
    alpha = np.zeros(n)
    G = -np.ones(n)  # gradient Q a - 1
    Q = K * np.outer(y, y)
    diag = np.diag(K).copy()
    history = [0.0]
    pos, neg = y > 0, y < 0
    for it in range(1, max_iter + 1):
        below = alpha < C
        above = alpha > 0
        up = (below & pos) | (above & neg)
        low = (below & neg) | (above & pos)
        score = -y * G
        s_up = np.where(up, score, -np.inf)
        i = int(np.argmax(s_up))
        m_val = s_up[i]
        M_val = np.where(low, score, np.inf).min()
        gap = m_val - M_val
        if gap <= tol:
            return alpha, G, history, it - 1, gap

        # second-order choice of j among violating low candidates
        cand = low & (score < m_val)
        b_it = m_val - score
        a_it = K[i, i] + diag - 2.0 * K[i]
        a_it = np.where(a_it > 0, a_it, _TAU)
        gain = np.where(cand, -(b_it ** 2) / a_it, np.inf)
        j = int(np.argmin(gain))

        yi, yj = y[i], y[j]
        a = max(K[i, i] + K[j, j] - 2.0 * K[i, j], _TAU)
        old_i, old_j = alpha[i], alpha[j]
        if yi != yj:
            delta = (-G[i] - G[j]) / a
            diff = old_i - old_j
            ai, aj = old_i + delta, old_j + delta
            if diff > 0:
                if aj < 0:
                    aj, ai = 0.0, diff
            elif ai < 0:
                ai, aj = 0.0, -diff
            if diff > 0:
                if ai > C:
                    ai, aj = C, C - diff
            elif aj > C:
                aj, ai = C, C + diff
        else:
            delta = (G[i] - G[j]) / a
            total = old_i + old_j
            ai, aj = old_i - delta, old_j + delta
            if total > C:
                if ai > C:
                    ai, aj = C, total - C
            elif aj < 0:
                aj, ai = 0.0, total
            if total > C:
                if aj > C:
                    aj, ai = C, total - C
            elif ai < 0:
                ai, aj = 0.0, total
        di, dj = ai - old_i, aj - old_j
        alpha[i], alpha[j] = ai, aj
        G += Q[:, i] * di + Q[:, j] * dj
        history.append(0.5 * float(alpha @ (G - 1.0)))
    raise NoConvergence(f"SMO hit {max_iter} iterations with KKT gap {gap:.3e} > tol {tol:g}",
                        gap=gap, n_iter=max_iter)


def _bias(alpha, G, y, C):
    yG = y * G
    free = (alpha > 0) & (alpha < C)
    if np.any(free):
        return float(-yG[free].mean())
    # no free vectors: midpoint of the feasible interval for -b
    upper_side = ((alpha >= C) & (y < 0)) | ((alpha <= 0) & (y > 0))
    ub = yG[upper_side].min() if np.any(upper_side) else yG.max()
    lb = yG[~upper_side].max() if np.any(~upper_side) else yG.min()
    return float(-0.5 * (ub + lb))


def primal_objective(w, b, X, y, C):
    margins = y * (X @ w + b)
    return float(0.5 * w @ w + C * np.maximum(0.0, 1.0 - margins).sum())


class LinearSVM(ClassifierMixin, BaseEstimator):
    """Two-class linear SVM; labels must be -1 / +1.

    ``decision_function`` is w.x + b and ``predict`` returns +1 when it is
    >= 0, so ties go to the positive class.

    Attributes
    ----------
    coef_ : (d,) weight vector w
    intercept_ : float bias b
    dual_coef_ : (n,) dual variables alpha
    support_ : indices with alpha > 0
    objective_ : primal objective at the solution
    dual_objective_history_ : dual objective (minimization form) after each update
    """

    def __init__(self, C=1.0, tol=1e-4, max_iter=100_000):
        self.C = C
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, X, y):
        X = check_array(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64).ravel()
        if y.shape[0] != X.shape[0]:
            raise DimensionMismatch(f"X has {X.shape[0]} rows but y has {y.shape[0]}")
        if not np.all(np.isin(y, (-1.0, 1.0))):
            raise ValueError("labels must be -1 or +1")
        if not (np.any(y > 0) and np.any(y < 0)):
            raise SingleClass("training labels contain a single class")
        if not self.C > 0:
            raise ValueError("C must be positive")
        K = X @ X.T
        alpha, G, history, n_iter, gap = _smo(K, y, float(self.C), float(self.tol),
                                              int(self.max_iter))
        self.dual_coef_ = alpha
        self.coef_ = X.T @ (alpha * y)
        self.intercept_ = _bias(alpha, G, y, self.C)
        self.support_ = np.flatnonzero(alpha > 0)
        self.n_iter_ = n_iter
        self.kkt_gap_ = float(gap)
        self.dual_objective_history_ = np.asarray(history)
        self.objective_ = primal_objective(self.coef_, self.intercept_, X, y, self.C)
        self.classes_ = np.array([-1, 1])
        self.n_features_in_ = X.shape[1]
        return self

    def decision_function(self, X):
        check_is_fitted(self, "coef_")
        X = np.asarray(X, dtype=np.float64)
        single = X.ndim == 1
        X2 = np.atleast_2d(X)
        if X2.shape[1] != self.coef_.shape[0]:
            raise DimensionMismatch(f"expected {self.coef_.shape[0]} features, got {X2.shape[1]}")
        s = X2 @ self.coef_ + self.intercept_
        return float(s[0]) if single else s

    def predict(self, X):
        s = np.atleast_1d(self.decision_function(X))
        return np.where(s >= 0, 1, -1)


def fit_svm(X, y, C=1.0, tol=1e-4, max_iter=100_000) -> LinearSVM:
    return LinearSVM(C=C, tol=tol, max_iter=max_iter).fit(X, y)


def svm_decision(model: LinearSVM, x):
    return model.decision_function(x)


def svm_predict(model: LinearSVM, x):
    """'cough' when the decision value is >= 0, else 'non-cough'."""
    s = model.decision_function(x)
    if np.ndim(s) == 0:
        return "cough" if s >= 0 else "non-cough"
    return ["cough" if v >= 0 else "non-cough" for v in s]
