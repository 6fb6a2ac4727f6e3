"""16-bit PCM WAV I/O, RMS gain, and linear crossfade joining."""

from __future__ import annotations

import os
import tempfile
import wave
from typing import Mapping

import numpy as np

from .core import Manifest
from .errors import FormatError, ValidationError


def read_wav(path: str) -> tuple[np.ndarray, int]:
    """Read a mono 16-bit PCM WAV into float64 samples in [-1, 1)."""
    try:
        with wave.open(path, "rb") as w:
            if w.getnchannels() != 1:
                raise FormatError(f"{path}: expected mono, got {w.getnchannels()} channels")
            if w.getsampwidth() != 2:
                raise FormatError(f"{path}: expected 16-bit PCM, got {8 * w.getsampwidth()}-bit")
            sr = w.getframerate()
            raw = w.readframes(w.getnframes())
    except (OSError, wave.Error, EOFError) as e:
        raise FormatError(f"{path}: cannot read WAV: {e}") from e
    samples = np.frombuffer(raw, dtype="<i2").astype(np.float64) / 32768.0
    return samples, sr


def write_wav(path: str, samples: np.ndarray, sample_rate: int) -> None:
    """Write mono 16-bit PCM; samples clipped to [-1, 1]."""
    clipped = np.clip(np.asarray(samples, dtype=np.float64), -1.0, 1.0)
    pcm = (clipped * 32767.0).round().astype("<i2")
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".wav")
    os.close(fd)
    try:
        with wave.open(tmp, "wb") as w:
            w.setnchannels(1)
            w.setsampwidth(2)
            w.setframerate(sample_rate)
            w.writeframes(pcm.tobytes())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def rms_dbfs(samples: np.ndarray) -> float:
    rms = float(np.sqrt(np.mean(np.square(samples))))
    if rms == 0.0:
        return -np.inf
    return 20.0 * np.log10(rms)


def gain_to_rms(samples: np.ndarray, target_dbfs: float) -> float:
    """Linear gain that brings the signal to the target RMS level; 1.0 for silence."""
    rms = float(np.sqrt(np.mean(np.square(samples))))
    if rms == 0.0:
        return 1.0
    return (10.0 ** (target_dbfs / 20.0)) / rms


def crossfade_join(parts: list[np.ndarray], n_overlap: int) -> np.ndarray:
    """Join parts with a linear equal-sum crossfade of n_overlap samples.

    Output length is sum(len(part)) - (len(parts) - 1) * n_overlap exactly.
    """
    for k, part in enumerate(parts):
        if len(part) < n_overlap:
            raise ValidationError(
                f"part {k} has {len(part)} samples, shorter than the "
                f"{n_overlap}-sample crossfade"
            )
    out = np.array(parts[0], dtype=np.float64, copy=True)
    if n_overlap > 0:
        up = np.arange(1, n_overlap + 1, dtype=np.float64) / (n_overlap + 1)
        down = 1.0 - up
    for part in parts[1:]:
        if n_overlap == 0:
            out = np.concatenate([out, part])
            continue
        head = part[:n_overlap] * up
        tail = out[-n_overlap:] * down
        out = np.concatenate([out[:-n_overlap], tail + head, part[n_overlap:]])
    return out


class AudioStore:
    """Loads segment waveforms (the manifest slice of the source file)."""

    def __init__(self, manifest: Manifest, root: str = ""):
        self._segments = manifest.by_id()
        self._root = root
        self._cache: dict[str, tuple[np.ndarray, int]] = {}

    def load(self, segment_id: str) -> tuple[np.ndarray, int]:
        seg = self._segments.get(segment_id)
        if seg is None:
            raise ValidationError(f"unknown segment id {segment_id!r}")
        path = os.path.join(self._root, seg.audio_path) if self._root else seg.audio_path
        if path not in self._cache:
            self._cache[path] = read_wav(path)
        samples, sr = self._cache[path]
        start = int(round(seg.start_s * sr))
        stop = start + int(round(seg.duration_s * sr))
        if stop > len(samples):
            raise FormatError(
                f"{segment_id}: slice [{seg.start_s}, {seg.start_s + seg.duration_s}) s "
                f"runs past end of {path}"
            )
        return samples[start:stop], sr


class ArrayStore:
    """In-memory store mapping segment id -> (samples, sample_rate)."""

    def __init__(self, arrays: Mapping[str, tuple[np.ndarray, int]]):
        self._arrays = dict(arrays)

    def load(self, segment_id: str) -> tuple[np.ndarray, int]:
        if segment_id not in self._arrays:
            raise ValidationError(f"unknown segment id {segment_id!r}")
        return self._arrays[segment_id]
