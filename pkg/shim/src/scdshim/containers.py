"""Standalone writers for the SCDP/SCDE binary containers.

The byte layout is the shared contract with the main toolkit: magic ("SCDP"
posteriors / "SCDE" embeddings), little-endian u32 version (= 1), u32 header
byte length, UTF-8 JSON header, then the frame-major little-endian float32
payload. Implemented here independently so exported files are validated
against the toolkit's reader rather than produced by it.
"""

from __future__ import annotations

import json
import os
import struct
import tempfile
from typing import Sequence

import numpy as np

VERSION = 1


class ShimError(Exception):
    pass


def _atomic_write(path: str, blob: bytes) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(blob)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _container(magic: bytes, header: dict, rows: np.ndarray) -> bytes:
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    payload = np.ascontiguousarray(rows, dtype="<f4").tobytes()
    return magic + struct.pack("<II", VERSION, len(header_bytes)) + header_bytes + payload


def write_posteriors(
    path: str,
    utt_id: str,
    frame_rate_hz: float,
    class_names: Sequence[str],
    rows: np.ndarray,
) -> None:
    rows = np.asarray(rows)
    if rows.ndim != 2 or rows.shape[1] != len(class_names):
        raise ShimError(
            f"{utt_id}: posterior shape {rows.shape} does not match "
            f"{len(class_names)} class names"
        )
    header = {
        "utt_id": utt_id,
        "frame_rate_hz": float(frame_rate_hz),
        "n_frames": int(rows.shape[0]),
        "n_classes": int(rows.shape[1]),
        "class_names": list(class_names),
        "dtype": "f32",
    }
    _atomic_write(path, _container(b"SCDP", header, rows))


def write_embeddings(path: str, utt_id: str, frame_rate_hz: float, rows: np.ndarray) -> None:
    rows = np.asarray(rows)
    if rows.ndim != 2 or rows.shape[1] < 1:
        raise ShimError(f"{utt_id}: embedding rows must be 2-D with dim >= 1")
    header = {
        "utt_id": utt_id,
        "frame_rate_hz": float(frame_rate_hz),
        "n_frames": int(rows.shape[0]),
        "dim": int(rows.shape[1]),
        "dtype": "f32",
    }
    _atomic_write(path, _container(b"SCDE", header, rows))
