"""PCA retaining a target fraction of variance."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .errors import DegenerateData, DimensionMismatch


def _fix_signs(vectors):
    # rows: make the largest-magnitude entry of each positive
    idx = np.argmax(np.abs(vectors), axis=1)
    signs = np.sign(vectors[np.arange(vectors.shape[0]), idx])
    signs[signs == 0] = 1.0
    return vectors * signs[:, None]


class VariancePCA(BaseEstimator, TransformerMixin):
    """Principal components covering at least ``variance_target`` of the variance.

    The covariance uses the 1/m normalization. When there are more features
    than samples the m x m Gram matrix is decomposed instead, which has the
    same non-zero spectrum.

    Attributes
    ----------
    mean_ : ndarray (n_features,)
    components_ : ndarray (k, n_features), orthonormal rows
    eigenvalues_ : ndarray, all covariance eigenvalues (descending, clamped at 0)
    n_components_ : int
    """

    def __init__(self, variance_target=0.95):
        self.variance_target = variance_target

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64)
        m, dim = X.shape
        if m < 2:
            raise DegenerateData("PCA needs at least two samples")
        if not 0.0 < self.variance_target <= 1.0:
            raise ValueError(f"variance_target must be in (0, 1], got {self.variance_target}")
        self.mean_ = X.mean(axis=0)
        Xc = X - self.mean_

        if dim > m:
            gram = Xc @ Xc.T / m
            evals, U = np.linalg.eigh(gram)
        else:
            cov = Xc.T @ Xc / m
            evals, V = np.linalg.eigh(cov)
        order = np.argsort(evals)[::-1]
        evals = evals[order]
        scale = max(evals[0], 0.0)
        # eigenvalues at rounding level are structural zeros (rank <= m - 1)
        evals[evals < scale * max(m, dim) * np.finfo(float).eps] = 0.0
        if scale == 0.0 or evals.sum() == 0.0:
            raise DegenerateData("all samples are identical; covariance is zero")

        ratio = np.cumsum(evals) / evals.sum()
        k = int(np.searchsorted(ratio, self.variance_target - 1e-12) + 1)
        k = min(k, int(np.count_nonzero(evals)))

        if dim > m:
            U = U[:, order[:k]]
            comps = (Xc.T @ U / np.sqrt(m * evals[:k])).T
            # one re-orthonormalization pass removes Gram-route rounding
            q, r = np.linalg.qr(comps.T)
            comps = (q * np.sign(np.diag(r))).T
        else:
            comps = V[:, order[:k]].T
        self.components_ = _fix_signs(comps)
        self.eigenvalues_ = evals
        self.n_components_ = k
        self.n_features_in_ = dim
        self.explained_variance_ratio_ = evals[:k] / evals.sum()
        return self

    def transform(self, X):
        check_is_fitted(self, "components_")
        X = np.asarray(X, dtype=np.float64)
        single = X.ndim == 1
        X2 = np.atleast_2d(X)
        if X2.shape[1] != self.n_features_in_:
            raise DimensionMismatch(f"expected {self.n_features_in_} features, got {X2.shape[1]}")
        Y = (X2 - self.mean_) @ self.components_.T
        return Y[0] if single else Y

    def inverse_transform(self, Y):
        check_is_fitted(self, "components_")
        return np.atleast_2d(Y) @ self.components_ + self.mean_


def fit_pca(X, variance_target=0.95) -> VariancePCA:
    return VariancePCA(variance_target).fit(X)


def pca_transform(model: VariancePCA, x):
    return model.transform(x)
