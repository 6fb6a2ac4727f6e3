"""Run an encoder-decoder ASR model over WAVs and export tagged-text hypotheses.

Output is one line per successfully decoded WAV: `utt_id<TAB>text`, the
generated text verbatim (change tags stay uppercase; no post-processing).
Per-file failures are reported and the run continues.
"""

from __future__ import annotations

import os
import sys
import tempfile
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .audio_in import read_wav, utt_id_for

Transcriber = Callable[[np.ndarray, int], str]


def load_transcriber(model_ref: str, device: str = "cpu") -> Transcriber:
    """Default transcriber: a transformers seq2seq ASR pipeline."""
    from transformers import pipeline

    asr = pipeline("automatic-speech-recognition", model=model_ref, device=device)

    def transcribe(samples: np.ndarray, sr: int) -> str:
        result = asr({"raw": samples, "sampling_rate": sr})
        return result["text"]

    return transcribe


@dataclass
class TextExportResult:
    n_ok: int
    n_failed: int
    failures: list[tuple[str, str]]


def export_text(
    model_ref: str,
    wav_list: Sequence[str],
    out_path: str,
    transcriber: Transcriber | None = None,
    device: str = "cpu",
) -> TextExportResult:
    if transcriber is None:
        transcriber = load_transcriber(model_ref, device=device)
    lines: list[str] = []
    failures: list[tuple[str, str]] = []
    for wav_path in wav_list:
        utt_id = utt_id_for(wav_path)
        try:
            samples, sr = read_wav(wav_path)
            text = transcriber(samples, sr)
            lines.append(f"{utt_id}\t{text}\n")
        except Exception as e:  # report and continue with the remaining files
            failures.append((wav_path, str(e)))
            print(f"scdkit-shim: decode failed for {wav_path}: {e}", file=sys.stderr)
    directory = os.path.dirname(os.path.abspath(out_path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as f:
            f.writelines(lines)
        os.replace(tmp, out_path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return TextExportResult(n_ok=len(lines), n_failed=len(failures), failures=failures)
