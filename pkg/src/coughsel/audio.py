"""WAV input and dataset manifests."""

from __future__ import annotations

import csv
import struct
import wave
from dataclasses import dataclass, field
from math import gcd
from pathlib import Path

import numpy as np
from scipy.signal import resample_poly

from .errors import (
    DuplicatePath,
    EmptyAudio,
    MalformedWav,
    MissingColumn,
    UnknownLabel,
    UnknownSplit,
    UnsupportedEncoding,
)

LABELS = ("cough", "non-cough")
SPLITS = ("train", "test")

_FORMAT_PCM = 0x0001
_FORMAT_FLOAT = 0x0003
_FORMAT_EXTENSIBLE = 0xFFFE


@dataclass(frozen=True)
class AudioClip:
    """Immutable audio signal.

    ``samples`` is 1-D for mono and (frames, channels) otherwise; values
    lie in [-1, 1].
    """

    samples: np.ndarray
    sample_rate: int
    source_id: str = ""

    def __post_init__(self):
        samples = np.array(self.samples, dtype=np.float64)
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        if int(self.sample_rate) <= 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")

    @property
    def n_frames(self):
        return self.samples.shape[0]

    @property
    def n_channels(self):
        return 1 if self.samples.ndim == 1 else self.samples.shape[1]

    @property
    def duration(self):
        return self.n_frames / self.sample_rate


def _parse_fmt(chunk):
    if len(chunk) < 16:
        raise MalformedWav("fmt chunk shorter than 16 bytes")
    tag, channels, rate, _, block_align, bits = struct.unpack("<HHIIHH", chunk[:16])
    if tag == _FORMAT_EXTENSIBLE:
        if len(chunk) < 40:
            raise MalformedWav("extensible fmt chunk shorter than 40 bytes")
        # first two bytes of the subformat GUID carry the real format tag
        tag = struct.unpack("<H", chunk[24:26])[0]
    if tag == _FORMAT_PCM and bits == 16:
        dtype = np.dtype("<i2")
    elif tag == _FORMAT_FLOAT and bits == 32:
        dtype = np.dtype("<f4")
    else:
        raise UnsupportedEncoding(f"format tag {tag:#06x} with {bits} bits per sample")
    if channels not in (1, 2):
        raise UnsupportedEncoding(f"{channels} channels (only mono or stereo)")
    if rate == 0:
        raise MalformedWav("sample rate is zero")
    if block_align != channels * dtype.itemsize:
        raise MalformedWav(f"block_align {block_align} inconsistent with {channels}x{bits} bit")
    return dtype, channels, rate


def read_wav_bytes(data: bytes, source_id: str = "") -> AudioClip:
    """Decode a RIFF/WAVE byte string (PCM16 or float32, mono or stereo)."""
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise MalformedWav("missing RIFF/WAVE header")
    riff_size = struct.unpack("<I", data[4:8])[0]
    if riff_size + 8 > len(data):
        raise MalformedWav(f"RIFF size {riff_size} exceeds file length {len(data)}")
    end = riff_size + 8

    fmt = None
    payload = None
    pos = 12
    while pos + 8 <= end:
        cid = data[pos:pos + 4]
        size = struct.unpack("<I", data[pos + 4:pos + 8])[0]
        body_start = pos + 8
        if body_start + size > end:
            raise MalformedWav(f"chunk {cid!r} of {size} bytes overruns the RIFF body")
        body = data[body_start:body_start + size]
        if cid == b"fmt ":
            fmt = _parse_fmt(body)
        elif cid == b"data":
            payload = body
        pos = body_start + size + (size & 1)
    if fmt is None:
        raise MalformedWav("no fmt chunk")
    if payload is None:
        raise MalformedWav("no data chunk")

    dtype, channels, rate = fmt
    if len(payload) % (dtype.itemsize * channels):
        raise MalformedWav("data chunk length is not a whole number of frames")
    raw = np.frombuffer(payload, dtype=dtype)
    if raw.size == 0:
        raise EmptyAudio(f"{source_id or 'wav'} has zero frames")
    if dtype.kind == "i":
        samples = raw.astype(np.float64) / 32768.0
    else:
        samples = raw.astype(np.float64)
        if not np.all(np.isfinite(samples)):
            raise MalformedWav("non-finite float samples")
        samples = np.clip(samples, -1.0, 1.0)
    if channels == 2:
        samples = samples.reshape(-1, 2)
    return AudioClip(samples, rate, source_id)


def load_wav(path) -> AudioClip:
    """Read a WAV file; stereo is kept as two columns."""
    path = Path(path)
    return read_wav_bytes(path.read_bytes(), source_id=str(path))


def write_wav(path, clip: AudioClip):
    """Write ``clip`` as 16-bit PCM."""
    samples = np.clip(clip.samples, -1.0, 1.0)
    pcm = np.round(samples * 32767.0).astype("<i2")
    with wave.open(str(path), "wb") as fh:
        fh.setnchannels(clip.n_channels)
        fh.setsampwidth(2)
        fh.setframerate(int(clip.sample_rate))
        fh.writeframes(pcm.tobytes())


def to_mono_resample(clip: AudioClip, target_rate: int) -> AudioClip:
    """Average channels, then resample with a polyphase windowed-sinc filter."""
    if clip.n_frames == 0:
        raise EmptyAudio(f"{clip.source_id or 'clip'} is empty")
    if target_rate <= 0:
        raise ValueError(f"target_rate must be positive, got {target_rate}")
    x = clip.samples if clip.samples.ndim == 1 else clip.samples.mean(axis=1)
    if clip.sample_rate == target_rate:
        if clip.samples.ndim == 1:
            return clip
        return AudioClip(x, target_rate, clip.source_id)

    g = gcd(int(clip.sample_rate), int(target_rate))
    up, down = int(target_rate) // g, int(clip.sample_rate) // g
    y = resample_poly(x, up, down)
    n_out = int(round(len(x) * target_rate / clip.sample_rate))
    if len(y) >= n_out:
        y = y[:n_out]
    else:
        y = np.pad(y, (0, n_out - len(y)))
    return AudioClip(np.clip(y, -1.0, 1.0), target_rate, clip.source_id)


def fit_duration(clip: AudioClip, duration_s: float) -> AudioClip:
    """Center-crop or symmetrically zero-pad to exactly ``duration_s`` seconds.

    Odd padding puts the extra zero at the end; odd crops drop the extra
    sample from the end as well.
    """
    if duration_s <= 0:
        raise ValueError(f"duration_s must be positive, got {duration_s}")
    target = int(round(duration_s * clip.sample_rate))
    x = clip.samples
    n = x.shape[0]
    if n == target:
        return clip
    if n > target:
        start = (n - target) // 2
        out = x[start:start + target]
    else:
        before = (target - n) // 2
        pad = [(before, target - n - before)] + [(0, 0)] * (x.ndim - 1)
        out = np.pad(x, pad)
    return AudioClip(out, clip.sample_rate, clip.source_id)


def prepare_clip(clip: AudioClip, sample_rate: int, duration_s: float) -> AudioClip:
    """Canonical working form: mono, ``sample_rate`` Hz, ``duration_s`` long."""
    return fit_duration(to_mono_resample(clip, sample_rate), duration_s)


@dataclass(frozen=True)
class ManifestEntry:
    path: str
    label: str
    split: str


@dataclass(frozen=True)
class DatasetManifest:
    entries: tuple = ()
    root: Path = field(default=Path("."), compare=False)

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def split(self, name):
        return [e for e in self.entries if e.split == name]

    def resolve(self, entry):
        p = Path(entry.path)
        return p if p.is_absolute() else self.root / p

    def summary(self):
        """Entry counts per split, e.g. ``{"train": 532, "test": 138}``."""
        counts = {s: 0 for s in SPLITS}
        for e in self.entries:
            counts[e.split] += 1
        return counts

    def label_counts(self, split=None):
        counts = {lab: 0 for lab in LABELS}
        for e in self.entries:
            if split is None or e.split == split:
                counts[e.label] += 1
        return counts


def parse_manifest(lines, root=Path(".")) -> DatasetManifest:
    reader = csv.DictReader(lines)
    missing = [c for c in ("path", "label", "split") if c not in (reader.fieldnames or [])]
    if missing:
        raise MissingColumn(f"manifest lacks column(s): {', '.join(missing)}")
    entries = []
    seen = set()
    for lineno, row in enumerate(reader, start=2):
        path = (row["path"] or "").strip()
        label = (row["label"] or "").strip()
        split = (row["split"] or "").strip()
        if label not in LABELS:
            raise UnknownLabel(f"line {lineno}: unknown label {label!r}")
        if split not in SPLITS:
            raise UnknownSplit(f"line {lineno}: unknown split {split!r}")
        if path in seen:
            raise DuplicatePath(f"line {lineno}: duplicate path {path!r}")
        seen.add(path)
        entries.append(ManifestEntry(path, label, split))
    return DatasetManifest(tuple(entries), Path(root))


def load_manifest(path) -> DatasetManifest:
    """Parse a ``path,label,split`` CSV; relative paths resolve against its folder."""
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        return parse_manifest(fh, root=path.parent)


def write_manifest(path, entries):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["path", "label", "split"])
        for e in entries:
            w.writerow([e.path, e.label, e.split])
