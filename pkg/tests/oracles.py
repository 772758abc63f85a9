"""Brute-force reference implementations used only by the tests.

Nothing here imports from coughsel. Each routine is the slow, literal
version of the computation so it can be checked by eye.
"""

import math

import numpy as np


def mel(f):
    return 2595.0 * math.log10(1.0 + f / 700.0)


def inv_mel(m):
    return 700.0 * (10.0 ** (m / 2595.0) - 1.0)


def triangle_bank(n_filters, n_fft, sr, fmin, fmax):
    lo, hi = mel(fmin), mel(fmax)
    points = [lo + (hi - lo) * i / (n_filters + 1) for i in range(n_filters + 2)]
    bins = [int(np.floor(inv_mel(p) * n_fft / sr + 0.5)) for p in points]
    bank = [[0.0] * (n_fft // 2 + 1) for _ in range(n_filters)]
    for m in range(n_filters):
        left, centre, right = bins[m], bins[m + 1], bins[m + 2]
        for k in range(left, centre + 1):
            bank[m][k] = (k - left) / (centre - left)
        for k in range(centre, right + 1):
            bank[m][k] = (right - k) / (right - centre)
    return np.array(bank)


def dft_power(frame, n_fft):
    """|X_k|^2 / n_fft for k = 0..n_fft/2 by the defining sum."""
    n = np.arange(len(frame))
    out = np.empty(n_fft // 2 + 1)
    for k in range(n_fft // 2 + 1):
        angle = 2.0 * math.pi * k * n / n_fft
        re = float(np.dot(frame, np.cos(angle)))
        im = float(np.dot(frame, np.sin(angle)))
        out[k] = (re * re + im * im) / n_fft
    return out


def dct2_ortho(v):
    n = len(v)
    out = np.empty(n)
    for k in range(n):
        s = sum(v[i] * math.cos(math.pi * k * (2 * i + 1) / (2 * n)) for i in range(n))
        out[k] = s * math.sqrt((1.0 if k == 0 else 2.0) / n)
    return out


def delta(rows, window=2):
    n = len(rows)
    denom = 2.0 * sum(j * j for j in range(1, window + 1))
    out = np.zeros_like(rows)
    for t in range(n):
        acc = 0.0
        for j in range(1, window + 1):
            acc = acc + j * (rows[min(t + j, n - 1)] - rows[max(t - j, 0)])
        out[t] = acc / denom
    return out


def mfcc_reference(x, sr=16000, pre=0.97, frame_s=0.025, hop_s=0.010, n_fft=512,
                   n_filters=26, n_ceps=12, fmin=0.0, fmax=8000.0, deltas=True):
    frame_len = int(round(frame_s * sr))
    hop = int(round(hop_s * sr))
    y = [x[0]] + [x[i] - pre * x[i - 1] for i in range(1, len(x))]
    y = np.array(y)
    window = np.array([0.54 - 0.46 * math.cos(2 * math.pi * i / (frame_len - 1)) for i in range(frame_len)])
    bank = triangle_bank(n_filters, n_fft, sr, fmin, fmax)
    rows = []
    start = 0
    while start + frame_len <= len(y):
        power = dft_power(y[start:start + frame_len] * window, n_fft)
        energies = [max(float(np.dot(bank[m], power)), 1e-10) for m in range(n_filters)]
        rows.append(dct2_ortho([math.log(e) for e in energies])[1:n_ceps + 1])
        start += hop
    c = np.array(rows)
    if not deltas:
        return c
    d1 = delta(c)
    return np.hstack([c, d1, delta(d1)])


def hinge_objective(w, b, X, y, C):
    total = 0.5 * sum(wi * wi for wi in w)
    for xi, yi in zip(X, y):
        total += C * max(0.0, 1.0 - yi * (sum(a * c for a, c in zip(w, xi)) + b))
    return total


def _best_bias(w1, w2, X, y, C):
    """Exact minimizing bias for each (w1, w2) node.

    For fixed w the hinge sum is piecewise linear in b with breakpoints at
    b = y_i - w.x_i, so the minimum is attained at one of them.
    """
    proj = X[:, 0, None, None] * w1 + X[:, 1, None, None] * w2
    candidates = y[:, None, None] - proj
    best = np.full(w1.shape, math.inf)
    best_b = np.zeros(w1.shape)
    for b in candidates:
        loss = C * np.maximum(0.0, 1.0 - y[:, None, None] * (proj + b)).sum(axis=0)
        better = loss < best
        best = np.where(better, loss, best)
        best_b = np.where(better, b, best_b)
    return best + 0.5 * (w1 ** 2 + w2 ** 2), best_b


def grid_minimize_svm(X, y, C, span=4.0, points=41, rounds=80):
    """Zooming grid over (w1, w2) with the bias solved exactly at every node.

    The profiled objective is convex in w, so shrinking the grid around the
    best node converges to the global minimum.
    """
    X = np.asarray(X, float)
    y = np.asarray(y, float)
    centre = np.zeros(2)
    half = span
    best = (math.inf, np.zeros(3))
    for _ in range(rounds):
        axis1 = np.linspace(centre[0] - half, centre[0] + half, points)
        axis2 = np.linspace(centre[1] - half, centre[1] + half, points)
        w1, w2 = np.meshgrid(axis1, axis2, indexing="ij")
        obj, bias = _best_bias(w1, w2, X, y, C)
        i = np.unravel_index(np.argmin(obj), obj.shape)
        if obj[i] < best[0]:
            best = (float(obj[i]), np.array([w1[i], w2[i], bias[i]]))
        centre = best[1][:2]
        half *= 0.7
    value = hinge_objective(best[1][:2], best[1][2], X, y, C)
    return value, best[1]


def svm_toy_set(seed=7, n=20):
    """Two overlapping Gaussian blobs in 2-D, labels +-1."""
    rng = np.random.default_rng(seed)
    y = np.where(np.arange(n) % 2 == 0, 1.0, -1.0)
    X = rng.standard_normal((n, 2)) * 0.8 + np.outer(y, [1.0, 0.5])
    return X, y
