"""Mel-frequency cepstral coefficients.

Chain: pre-emphasis, framing, Hamming window, power spectrum, triangular
mel filterbank, log, orthonormal DCT-II, drop c0, then optional regression
deltas. Defaults give 12 cepstra + deltas + delta-deltas = 36 columns.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy.fft import dct
from sklearn.base import BaseEstimator, TransformerMixin

from .audio import AudioClip
from .errors import ClipTooShort, ConfigInvalid, DegenerateBand, NegativeFrequency, TooFewFrames

LOG_FLOOR = 1e-10
DELTA_WINDOW = 2


def hz_to_mel(f):
    f = np.asarray(f, dtype=np.float64)
    if np.any(f < 0):
        raise NegativeFrequency("frequency must be non-negative")
    out = 2595.0 * np.log10(1.0 + f / 700.0)
    return float(out) if out.ndim == 0 else out


def mel_to_hz(m):
    m = np.asarray(m, dtype=np.float64)
    if np.any(m < 0):
        raise NegativeFrequency("mel value must be non-negative")
    out = 700.0 * (10.0 ** (m / 2595.0) - 1.0)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class MfccConfig:
    pre_emphasis: float = 0.97
    frame_len_s: float = 0.025
    hop_s: float = 0.010
    fft_size: int = 512
    n_mel_filters: int = 26
    n_cepstra: int = 12
    include_deltas: bool = True
    fmin: float = 0.0
    fmax: float = 8000.0

    def frame_len(self, sample_rate):
        return int(round(self.frame_len_s * sample_rate))

    def hop(self, sample_rate):
        return int(round(self.hop_s * sample_rate))

    @property
    def n_coeffs(self):
        return self.n_cepstra * (3 if self.include_deltas else 1)

    def validate(self, sample_rate):
        if not 0.0 <= self.pre_emphasis < 1.0:
            raise ConfigInvalid(f"pre_emphasis must be in [0, 1), got {self.pre_emphasis}")
        n = int(self.fft_size)
        if n < 2 or n & (n - 1):
            raise ConfigInvalid(f"fft_size must be a power of two, got {self.fft_size}")
        frame_len = self.frame_len(sample_rate)
        if frame_len < 1 or frame_len > n:
            raise ConfigInvalid(f"frame of {frame_len} samples does not fit fft_size {n}")
        hop = self.hop(sample_rate)
        if not 0 < hop <= frame_len:
            raise ConfigInvalid(f"hop of {hop} samples must be in (0, frame length]")
        if not 0 <= self.fmin < self.fmax <= sample_rate / 2:
            raise ConfigInvalid(
                f"need 0 <= fmin < fmax <= {sample_rate / 2}, got ({self.fmin}, {self.fmax})")
        if not 1 <= self.n_cepstra <= self.n_mel_filters:
            raise ConfigInvalid("need 1 <= n_cepstra <= n_mel_filters")
        return self

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


@dataclass(frozen=True)
class MfccMatrix:
    values: np.ndarray
    frame_hop_s: float
    source_id: str = ""

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def shape(self):
        return self.values.shape


def mel_center_frequencies(config: MfccConfig):
    """Filter peak frequencies in Hz, equally spaced on the mel axis."""
    mels = np.linspace(hz_to_mel(config.fmin), hz_to_mel(config.fmax), config.n_mel_filters + 2)
    return mel_to_hz(mels[1:-1])


def mel_filterbank(config: MfccConfig, sample_rate: int) -> np.ndarray:
    """Triangular filters, shape (n_mel_filters, fft_size // 2 + 1).

    Edges and peaks are quantized to FFT bins so every row peaks at exactly
    1.0 on its center bin.
    """
    config.validate(sample_rate)
    n_fft = config.fft_size
    mels = np.linspace(hz_to_mel(config.fmin), hz_to_mel(config.fmax), config.n_mel_filters + 2)
    bins = np.round(mel_to_hz(mels) * n_fft / sample_rate).astype(int)
    if np.any(np.diff(bins) <= 0):
        i = int(np.argmin(np.diff(bins)))
        raise DegenerateBand(
            f"mel points {i} and {i + 1} both land on FFT bin {bins[i]}; "
            "use fewer filters or a larger fft_size")
    fb = np.zeros((config.n_mel_filters, n_fft // 2 + 1))
    k = np.arange(n_fft // 2 + 1)
    for m in range(config.n_mel_filters):
        lo, c, hi = bins[m], bins[m + 1], bins[m + 2]
        rise = (k - lo) / (c - lo)
        fall = (hi - k) / (hi - c)
        fb[m] = np.clip(np.minimum(rise, fall), 0.0, None)
    return fb


def frame_signal(x, frame_len, hop):
    n_frames = (len(x) - frame_len) // hop + 1
    idx = np.arange(frame_len)[None, :] + hop * np.arange(n_frames)[:, None]
    return x[idx]


def log_mel_energies(clip: AudioClip, config: MfccConfig, filterbank=None) -> np.ndarray:
    sr = clip.sample_rate
    config.validate(sr)
    x = clip.samples
    if x.ndim != 1:
        raise ConfigInvalid("MFCC extraction needs a mono clip")
    frame_len, hop = config.frame_len(sr), config.hop(sr)
    if len(x) < frame_len:
        raise ClipTooShort(f"{len(x)} samples is shorter than one {frame_len}-sample frame")
    emphasized = np.append(x[0], x[1:] - config.pre_emphasis * x[:-1])
    frames = frame_signal(emphasized, frame_len, hop) * np.hamming(frame_len)
    spectrum = np.fft.rfft(frames, n=config.fft_size, axis=1)
    power = (spectrum.real ** 2 + spectrum.imag ** 2) / config.fft_size
    if filterbank is None:
        filterbank = mel_filterbank(config, sr)
    energies = power @ filterbank.T
    return np.log(np.maximum(energies, LOG_FLOOR))


def compute_mfcc(clip: AudioClip, config: MfccConfig = MfccConfig(), filterbank=None) -> MfccMatrix:
    """MFCC matrix of shape (frames, n_coeffs) for a mono clip."""
    logmel = log_mel_energies(clip, config, filterbank)
    ceps = dct(logmel, type=2, norm="ortho", axis=1)[:, 1:config.n_cepstra + 1]
    m = MfccMatrix(ceps, config.hop_s, clip.source_id)
    return append_deltas(m) if config.include_deltas else m


def _regression_delta(c, window=DELTA_WINDOW):
    n = c.shape[0]
    padded = np.concatenate([np.repeat(c[:1], window, axis=0), c, np.repeat(c[-1:], window, axis=0)])
    denom = 2.0 * sum(k * k for k in range(1, window + 1))
    d = np.zeros_like(c)
    for k in range(1, window + 1):
        d += k * (padded[window + k:window + k + n] - padded[window - k:window - k + n])
    return d / denom


def append_deltas(m: MfccMatrix) -> MfccMatrix:
    """Append first- and second-order regression deltas (window +-2)."""
    c = m.values
    if c.shape[0] < 2 * DELTA_WINDOW + 1:
        raise TooFewFrames(f"need at least {2 * DELTA_WINDOW + 1} frames, got {c.shape[0]}")
    d1 = _regression_delta(c)
    d2 = _regression_delta(d1)
    return MfccMatrix(np.hstack([c, d1, d2]), m.frame_hop_s, m.source_id)


class MfccFlattener(BaseEstimator, TransformerMixin):
    """Stateless transformer: list of mono clips -> one flattened MFCC row per clip.

    Rows are the (frames, coeffs) matrix flattened in row-major order, so all
    clips must share rate and length.
    """

    def __init__(self, config=None):
        self.config = config

    def fit(self, X, y=None):
        return self

    def transform(self, X):
        config = self.config or MfccConfig()
        fb = None
        rows = []
        for clip in X:
            if fb is None:
                fb = mel_filterbank(config, clip.sample_rate)
            rows.append(compute_mfcc(clip, config, fb).values.ravel())
        if len({r.size for r in rows}) > 1:
            raise ConfigInvalid("clips yield different MFCC sizes; fit durations first")
        return np.vstack(rows)
