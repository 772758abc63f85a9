"""Clip-to-MFCC extraction with an on-disk cache and a binary record format.

Record layout (little endian)::

    b"MFCC" | u16 version | u16 id_len | id (utf-8) | u32 frames | u32 coeffs
    | f64 frame_hop_s | frames*coeffs f64, row-major
"""

from __future__ import annotations

import csv
import hashlib
import json
import struct
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .audio import load_wav, prepare_clip, read_wav_bytes
from .errors import CorruptModel, MissingFile
from .mfcc import MfccConfig, MfccMatrix, compute_mfcc

RECORD_MAGIC = b"MFCC"
RECORD_VERSION = 1
_HEAD = struct.Struct("<4sHH")
_DIMS = struct.Struct("<IId")


@dataclass(frozen=True)
class AudioConfig:
    sample_rate: int = 16000
    duration_s: float = 5.0


def write_record(fh, m: MfccMatrix):
    sid = m.source_id.encode("utf-8")
    frames, coeffs = m.values.shape
    fh.write(_HEAD.pack(RECORD_MAGIC, RECORD_VERSION, len(sid)))
    fh.write(sid)
    fh.write(_DIMS.pack(frames, coeffs, m.frame_hop_s))
    fh.write(np.ascontiguousarray(m.values, dtype="<f8").tobytes())


def read_record(fh):
    """Next record from ``fh``, or None at end of stream."""
    head = fh.read(_HEAD.size)
    if not head:
        return None
    if len(head) < _HEAD.size:
        raise CorruptModel("truncated MFCC record header")
    magic, version, id_len = _HEAD.unpack(head)
    if magic != RECORD_MAGIC or version != RECORD_VERSION:
        raise CorruptModel("not an MFCC record")
    sid = fh.read(id_len).decode("utf-8")
    frames, coeffs, hop = _DIMS.unpack(fh.read(_DIMS.size))
    nbytes = frames * coeffs * 8
    data = fh.read(nbytes)
    if len(data) != nbytes:
        raise CorruptModel(f"record {sid!r} truncated")
    values = np.frombuffer(data, dtype="<f8").reshape(frames, coeffs)
    return MfccMatrix(values, hop, sid)


def write_records(path, matrices):
    with open(path, "wb") as fh:
        for m in matrices:
            write_record(fh, m)


def read_records(path):
    out = []
    with open(path, "rb") as fh:
        while (m := read_record(fh)) is not None:
            out.append(m)
    return out


def write_summary_csv(path, matrices, labels=None, splits=None):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["source_id", "label", "split", "frames", "coeffs", "mean_abs"])
        for i, m in enumerate(matrices):
            w.writerow([m.source_id, labels[i] if labels else "", splits[i] if splits else "",
                        m.shape[0], m.shape[1], repr(float(np.abs(m.values).mean()))])


def config_key(audio: AudioConfig, mfcc: MfccConfig):
    return json.dumps({"audio": asdict(audio), "mfcc": asdict(mfcc)}, sort_keys=True)


def clip_mfcc_from_bytes(data, source_id, audio: AudioConfig, mfcc: MfccConfig) -> MfccMatrix:
    clip = prepare_clip(read_wav_bytes(data, source_id), audio.sample_rate, audio.duration_s)
    return compute_mfcc(clip, mfcc)


def clip_mfcc(path, audio: AudioConfig, mfcc: MfccConfig, source_id=None) -> MfccMatrix:
    clip = load_wav(path)
    if source_id is not None:
        clip = type(clip)(clip.samples, clip.sample_rate, source_id)
    clip = prepare_clip(clip, audio.sample_rate, audio.duration_s)
    return compute_mfcc(clip, mfcc)


class FeatureExtractor:
    """Compute (or fetch from cache) the MFCC matrix of each file.

    Cache entries are keyed by the SHA-256 of the file bytes together with
    the audio and MFCC configuration, so edited files are never served stale.
    """

    def __init__(self, audio=AudioConfig(), mfcc=MfccConfig(), cache_dir=None, jobs=1):
        self.audio = audio
        self.mfcc = mfcc
        self.cache_dir = Path(cache_dir) if cache_dir else None
        self.jobs = jobs

    def _one(self, path, source_id):
        path = Path(path)
        if not path.is_file():
            raise MissingFile(f"audio file not found: {path}")
        data = path.read_bytes()
        cache_file = None
        if self.cache_dir is not None:
            h = hashlib.sha256(data)
            h.update(config_key(self.audio, self.mfcc).encode())
            cache_file = self.cache_dir / f"{h.hexdigest()}.mfcc"
            if cache_file.is_file():
                with open(cache_file, "rb") as fh:
                    m = read_record(fh)
                return MfccMatrix(m.values, m.frame_hop_s, source_id)
        m = clip_mfcc_from_bytes(data, source_id, self.audio, self.mfcc)
        if cache_file is not None:
            self.cache_dir.mkdir(parents=True, exist_ok=True)
            tmp = cache_file.with_suffix(".tmp")
            with open(tmp, "wb") as fh:
                write_record(fh, m)
            tmp.replace(cache_file)
        return m

    def matrices(self, paths, source_ids=None):
        paths = [Path(p) for p in paths]
        ids = list(source_ids) if source_ids is not None else [str(p) for p in paths]
        missing = [str(p) for p in paths if not p.is_file()]
        if missing:
            raise MissingFile(f"{len(missing)} audio file(s) not found, first: {missing[0]}")
        if self.jobs and self.jobs > 1 and len(paths) > 1:
            with ProcessPoolExecutor(max_workers=self.jobs) as pool:
                return list(pool.map(self._one, paths, ids))
        return [self._one(p, s) for p, s in zip(paths, ids)]

    def features(self, paths, source_ids=None):
        """One flattened (row-major) MFCC row per file."""
        mats = self.matrices(paths, source_ids)
        return np.vstack([m.values.ravel() for m in mats])
