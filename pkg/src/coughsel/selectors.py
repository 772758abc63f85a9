"""Feature selectors built on PLS regression.

Each selector ranks every column by an importance score and keeps the top
``k``. They follow the scikit-learn ``SelectorMixin`` protocol, so a fitted
selector can sit inside a ``Pipeline``.
"""

from __future__ import annotations

import copy
import csv
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.feature_selection import SelectorMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .errors import ConfigInvalid, KExceedsRelevant, KOutOfRange
from .pls import fit_pls1, kfold_assignments, cv_rmse, loo_coefficients

METHODS = ("random_frog", "uve", "vip")


@dataclass
class SelectionResult:
    method: str
    importance: np.ndarray
    selected: list
    config_echo: dict = field(default_factory=dict)
    seed: int | None = None
    notes: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "method": self.method,
            "importance": [float(v) for v in self.importance],
            "selected": [int(i) for i in self.selected],
            "config_echo": self.config_echo,
            "seed": self.seed,
            "notes": self.notes,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(d["method"], np.asarray(d["importance"], dtype=np.float64),
                   [int(i) for i in d["selected"]], dict(d.get("config_echo", {})),
                   d.get("seed"), dict(d.get("notes", {})))


def take_top_k(result, k):
    """Indices of the ``k`` largest importances (ties go to the lower index), ascending."""
    imp = np.asarray(result.importance if isinstance(result, SelectionResult) else result,
                     dtype=np.float64)
    p = imp.shape[0]
    if not 1 <= k <= p:
        raise KOutOfRange(f"k={k} outside [1, {p}]")
    key = np.where(np.isnan(imp), -np.inf, imp)
    order = np.lexsort((np.arange(p), -key))
    return sorted(int(i) for i in order[:k])


def write_importance_csv(path, result: SelectionResult):
    chosen = set(result.selected)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["feature_index", "importance", "selected"])
        for j, v in enumerate(result.importance):
            w.writerow([j, repr(float(v)), int(j in chosen)])


def _check_xy(X, y):
    X = check_array(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    if y.shape[0] != X.shape[0]:
        raise ValueError(f"X has {X.shape[0]} rows but y has {y.shape[0]}")
    return X, y


class _TopKSelector(SelectorMixin, BaseEstimator):
    method = None

    def _finish(self, X, importance, echo, seed=None, notes=None):
        self.n_features_in_ = X.shape[1]
        self.importance_ = importance
        selected = take_top_k(importance, self.k)
        self.result_ = SelectionResult(self.method, importance, selected, echo, seed, notes or {})
        return self

    def _get_support_mask(self):
        check_is_fitted(self, "result_")
        mask = np.zeros(self.n_features_in_, dtype=bool)
        mask[self.result_.selected] = True
        return mask

    def with_k(self, k):
        """A fitted copy keeping ``k`` features, reusing the importance scores."""
        check_is_fitted(self, "result_")
        other = copy.deepcopy(self)
        other.k = k
        other.result_.selected = take_top_k(other.importance_, k)
        other.result_.config_echo["k"] = k
        other._refresh_notes()
        return other

    def _refresh_notes(self):
        pass


class UVESelector(_TopKSelector):
    """Uninformative variable elimination.

    Appends ``n_noise`` columns of uniform noise scaled by 1e-10 (defaults to
    one per original column), computes leave-one-out PLS coefficients and
    scores each column by ``|mean(b_j) / std(b_j)|``. The tiny scale keeps the
    noise from disturbing the model while its reliability ratio stays
    comparable. ``result_.notes["above_noise_cutoff"]`` lists the original
    columns that beat the best noise column.
    """

    method = "uve"

    def __init__(self, k=20, n_components=10, n_noise=None, noise_scale=1e-10, random_state=0):
        self.k = k
        self.n_components = n_components
        self.n_noise = n_noise
        self.noise_scale = noise_scale
        self.random_state = random_state

    def fit(self, X, y):
        X, y = _check_xy(X, y)
        n, p = X.shape
        if not 1 <= self.k <= p:
            raise KOutOfRange(f"k={self.k} outside [1, {p}]")
        if n < 3:
            raise ValueError("UVE needs at least three samples")
        n_noise = p if self.n_noise is None else int(self.n_noise)
        rng = np.random.default_rng(self.random_state)
        noise = rng.uniform(size=(n, n_noise)) * self.noise_scale
        B = loo_coefficients(np.hstack([X, noise]), y, self.n_components)
        mean = B.mean(axis=0)
        std = B.std(axis=0, ddof=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            c = np.where(std > 0, mean / std, np.where(mean == 0, 0.0, np.sign(mean) * np.inf))
        reliability = np.abs(c)
        self.reliability_ = c
        self.noise_cutoff_ = float(reliability[p:].max()) if n_noise else 0.0
        echo = {"k": self.k, "n_components": self.n_components, "n_noise": n_noise,
                "noise_scale": self.noise_scale}
        self._finish(X, reliability[:p], echo, self.random_state)
        self._refresh_notes()
        return self

    def _refresh_notes(self):
        above = np.flatnonzero(self.importance_ > self.noise_cutoff_)
        self.result_.notes = {"noise_cutoff": self.noise_cutoff_,
                              "above_noise_cutoff": [int(i) for i in above]}


class VIPSelector(_TopKSelector):
    """Variable influence on projection from a single PLS fit.

    Columns with VIP > 1 are conventionally relevant. With ``strict=True``
    asking for more than that many raises :class:`KExceedsRelevant`;
    otherwise ``result_.notes["below_one_selected"]`` flags the case.
    """

    method = "vip"

    def __init__(self, k=10, n_components=10, strict=False):
        self.k = k
        self.n_components = n_components
        self.strict = strict

    def fit(self, X, y):
        X, y = _check_xy(X, y)
        p = X.shape[1]
        if not 1 <= self.k <= p:
            raise KOutOfRange(f"k={self.k} outside [1, {p}]")
        self.pls_ = fit_pls1(X, y, self.n_components)
        vip = self.pls_.vip()
        n_relevant = int(np.count_nonzero(vip > 1.0))
        if self.strict and self.k > n_relevant:
            raise KExceedsRelevant(f"k={self.k} but only {n_relevant} features have VIP > 1")
        echo = {"k": self.k, "n_components": self.n_components, "strict": self.strict}
        self._finish(X, vip, echo)
        self._refresh_notes()
        return self

    def _refresh_notes(self):
        sel = self.importance_[self.result_.selected]
        self.result_.notes = {"n_above_one": int(np.count_nonzero(self.importance_ > 1.0)),
                              "below_one_selected": bool(np.any(sel < 1.0))}


class RandomFrogSelector(_TopKSelector):
    """Random Frog: a reversible-jump style walk over variable subsets.

    Each of ``n_iter`` steps draws a candidate size Q* ~ round(|N(Q, theta*Q)|).
    Shrinking drops the columns with the smallest |b| of a PLS fit on the
    current subset. Growing draws ``omega * (Q* - Q)`` outside columns, fits
    PLS on the union and keeps the Q* largest |b|. The candidate replaces the
    current subset when its cross-validated RMSE is no worse, otherwise with
    probability ``eta * rmse_current / rmse_candidate``. Importance is the
    fraction of steps in which a column belongs to the current subset.
    """

    method = "random_frog"

    def __init__(self, k=10, n_iter=1000, q0=10, theta=0.3, eta=0.1, omega=3,
                 n_components=10, folds=5, random_state=0):
        self.k = k
        self.n_iter = n_iter
        self.q0 = q0
        self.theta = theta
        self.eta = eta
        self.omega = omega
        self.n_components = n_components
        self.folds = folds
        self.random_state = random_state

    def _check_config(self, p):
        if not 1 <= self.k <= p:
            raise KOutOfRange(f"k={self.k} outside [1, {p}]")
        if not 1 <= self.q0 <= p:
            raise ConfigInvalid(f"q0={self.q0} outside [1, {p}]")
        if self.n_iter < 1:
            raise ConfigInvalid("n_iter must be >= 1")
        if not self.theta > 0:
            raise ConfigInvalid("theta must be positive")
        if not 0 < self.eta <= 1:
            raise ConfigInvalid("eta must be in (0, 1]")
        if self.omega < 1:
            raise ConfigInvalid("omega must be >= 1")

    def _rank_by_coef(self, X, y, cols, keep):
        b = fit_pls1(X[:, cols], y, self.n_components).coef_
        order = np.lexsort((cols, -np.abs(b)))
        return np.sort(cols[order[:keep]])

    def fit(self, X, y):
        X, y = _check_xy(X, y)
        n, p = X.shape
        self._check_config(p)
        rng = np.random.default_rng(self.random_state)
        fold_of = kfold_assignments(n, self.folds, rng.integers(2 ** 32))

        def rmse(cols):
            return cv_rmse(X[:, cols], y, self.n_components, self.folds, fold_of=fold_of)

        current = np.sort(rng.choice(p, size=self.q0, replace=False))
        current_rmse = rmse(current)
        counts = np.zeros(p)
        accepted = 0
        for _ in range(self.n_iter):
            q = current.size
            q_star = int(np.clip(round(abs(rng.normal(q, self.theta * q))), 1, p))
            if q_star < q:
                candidate = self._rank_by_coef(X, y, current, q_star)
            elif q_star > q:
                outside = np.setdiff1d(np.arange(p), current)
                n_add = min(self.omega * (q_star - q), outside.size)
                pool = np.sort(np.concatenate([current, rng.choice(outside, n_add, replace=False)]))
                candidate = self._rank_by_coef(X, y, pool, min(q_star, pool.size))
            else:
                candidate = current
            u = rng.random()
            if candidate is not current:
                cand_rmse = rmse(candidate)
                if cand_rmse <= current_rmse or u < self.eta * current_rmse / cand_rmse:
                    current, current_rmse = candidate, cand_rmse
                    accepted += 1
            counts[current] += 1
        self.acceptance_rate_ = accepted / self.n_iter
        echo = {"k": self.k, "n_iter": self.n_iter, "q0": self.q0, "theta": self.theta,
                "eta": self.eta, "omega": self.omega, "n_components": self.n_components,
                "folds": self.folds}
        return self._finish(X, counts / self.n_iter, echo, self.random_state)


def _select(selector, X, y):
    return selector.fit(X, y).result_


def select_uve(X, y, k, random_state=0, **config) -> SelectionResult:
    return _select(UVESelector(k=k, random_state=random_state, **config), X, y)


def select_vip(X, y, k, **config) -> SelectionResult:
    return _select(VIPSelector(k=k, **config), X, y)


def select_random_frog(X, y, k, random_state=0, **config) -> SelectionResult:
    return _select(RandomFrogSelector(k=k, random_state=random_state, **config), X, y)


def make_selector(method, k, random_state=0, **config):
    if method == "uve":
        return UVESelector(k=k, random_state=random_state, **config)
    if method == "vip":
        return VIPSelector(k=k, **config)
    if method in ("random_frog", "frog"):
        return RandomFrogSelector(k=k, random_state=random_state, **config)
    raise ConfigInvalid(f"unknown selector {method!r}")
