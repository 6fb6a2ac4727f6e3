"""Minimal WAV input for the shim: mono 16-bit PCM."""

from __future__ import annotations

import os
import wave

import numpy as np

from .containers import ShimError


def read_wav(path: str) -> tuple[np.ndarray, int]:
    try:
        with wave.open(path, "rb") as w:
            if w.getnchannels() != 1:
                raise ShimError(f"{path}: expected mono audio")
            if w.getsampwidth() != 2:
                raise ShimError(f"{path}: expected 16-bit PCM")
            sr = w.getframerate()
            raw = w.readframes(w.getnframes())
    except (OSError, wave.Error, EOFError) as e:
        raise ShimError(f"{path}: cannot read WAV: {e}") from e
    samples = np.frombuffer(raw, dtype="<i2").astype(np.float32) / 32768.0
    return samples, sr


def utt_id_for(path: str) -> str:
    return os.path.splitext(os.path.basename(path))[0]
