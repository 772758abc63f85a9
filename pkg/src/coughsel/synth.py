"""Seeded synthetic cough / non-cough corpus.

Cough-like clips hold two to seven broadband bursts with a sharp attack, an
exponential decay and often a short voiced tail, over faint background
noise. Non-cough clips are steady sounds: pitched tones and hums, or noise
that is stationary or slowly swelling. Everything is derived from a
single seed so the corpus is reproducible byte for byte.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from scipy.signal import butter, sosfilt

from .audio import AudioClip, ManifestEntry, write_manifest, write_wav


def _background(rng, n):
    # leaky integration with a random pole tilts the spectrum from white to pinkish
    x = sosfilt(np.array([[1.0, 0.0, 0.0, 1.0, -rng.uniform(0.0, 0.95), 0.0]]), rng.standard_normal(n))
    x /= x.std()
    return 10 ** rng.uniform(-3.2, -2.2) * x


def _bandpassed_noise(rng, n, sr, lo, hi):
    sos = butter(4, [lo, hi], btype="bandpass", fs=sr, output="sos")
    x = sosfilt(sos, rng.standard_normal(n))
    return x / (np.abs(x).max() + 1e-12)


def _place(x, event, start):
    end = min(len(x), start + len(event))
    x[start:end] += event[:end - start]


def cough_like(rng, sr=16000, duration=5.0):
    n = int(round(sr * duration))
    x = _background(rng, n)
    for _ in range(rng.integers(2, 8)):
        length = min(int(sr * rng.uniform(0.25, 0.6)), n)
        start = int(rng.integers(0, max(n - length, 1)))
        t = np.arange(length) / sr
        attack = 1.0 - np.exp(-t / rng.uniform(0.002, 0.008))
        decay = np.exp(-t / rng.uniform(0.04, 0.15))
        burst = _bandpassed_noise(rng, length, sr, rng.uniform(150, 400), rng.uniform(2500, 6500))
        burst = burst * attack * decay
        if rng.random() < 0.6:
            # voiced tail: a short glottal buzz after the explosive phase
            f0 = rng.uniform(180, 450)
            tail = sum(np.sin(2 * np.pi * h * f0 * t) / h for h in range(1, 6))
            tail *= np.exp(-t / rng.uniform(0.05, 0.12)) * (t > rng.uniform(0.03, 0.08))
            burst = burst + rng.uniform(0.1, 0.4) * tail / 2.3
        _place(x, rng.uniform(0.3, 0.8) * burst, start)
    return np.clip(x, -1.0, 1.0)


def _tone(rng, n, sr):
    t = np.arange(n) / sr
    f0 = rng.uniform(150, 1500)
    vib = 1.0 + rng.uniform(0, 0.01) * np.sin(2 * np.pi * rng.uniform(0.2, 3) * t)
    phase = 2 * np.pi * f0 * np.cumsum(vib) / sr
    return sum(rng.uniform(0.2, 1.0) / h * np.sin(h * phase) for h in range(1, rng.integers(2, 5)))


def _hum(rng, n, sr):
    t = np.arange(n) / sr
    mains = rng.choice([50.0, 60.0])
    return sum(rng.uniform(0.3, 1.0) / h * np.sin(2 * np.pi * mains * h * t + rng.uniform(0, 6.28))
               for h in range(1, 8))


def _stationary_noise(rng, n, sr):
    a = rng.uniform(0.9, 0.995)
    return sosfilt(np.array([[1.0, 0.0, 0.0, 1.0, -a, 0.0]]), rng.standard_normal(n))


def _swelling_noise(rng, n, sr):
    # wind/rain-like lowpassed noise with slow level swells
    t = np.arange(n) / sr
    sos = butter(2, rng.uniform(300, 2000), btype="lowpass", fs=sr, output="sos")
    x = sosfilt(sos, rng.standard_normal(n))
    return x * (1.2 + np.sin(2 * np.pi * rng.uniform(0.1, 1.0) * t + rng.uniform(0, 6.28)))


_NON_COUGH = (_tone, _hum, _stationary_noise, _swelling_noise)


def non_cough_like(rng, sr=16000, duration=5.0):
    n = int(round(sr * duration))
    x = _NON_COUGH[rng.integers(len(_NON_COUGH))](rng, n, sr)
    x = np.asarray(x, dtype=np.float64)
    x = x / (np.abs(x).max() + 1e-12) * rng.uniform(0.25, 0.6)
    return np.clip(x + _background(rng, n), -1.0, 1.0)


def make_corpus(out_dir, n_train=200, n_test=60, sample_rate=16000, duration=5.0, seed=0):
    """Write WAVs plus ``manifest.csv`` under ``out_dir``; returns the manifest path.

    ``n_train`` and ``n_test`` are per class.
    """
    out_dir = Path(out_dir)
    (out_dir / "clips").mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    entries = []
    for split, count in (("train", n_train), ("test", n_test)):
        for i in range(count):
            for label, gen in (("cough", cough_like), ("non-cough", non_cough_like)):
                rel = f"clips/{split}_{label}_{i:04d}.wav"
                samples = gen(rng, sample_rate, duration)
                write_wav(out_dir / rel, AudioClip(samples, sample_rate, rel))
                entries.append(ManifestEntry(rel, label, split))
    manifest = out_dir / "manifest.csv"
    write_manifest(manifest, entries)
    return manifest
