"""Run a CTC acoustic model over WAVs and export SCDP posteriors + SCDE embeddings.

The class map is the explicit contract between the model's output vocabulary
and the toolkit alphabet: {toolkit_class_name: model_output_index}, covering
every toolkit class. Posteriors are softmax-normalized over the mapped logit
columns so the exported rows always sum to one; embeddings are the hidden
states feeding the classification layer (configurable layer index).
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .audio_in import read_wav, utt_id_for
from .containers import ShimError, write_embeddings, write_posteriors


def load_class_map(path: str) -> dict[str, int]:
    with open(path, "r", encoding="utf-8") as f:
        raw = json.load(f)
    if not isinstance(raw, dict):
        raise ShimError(f"{path}: class map must be a JSON object")
    return {str(k): int(v) for k, v in raw.items()}


def resolve_column_order(class_names: Sequence[str], class_map: Mapping[str, int], vocab_size: int):
    """Model logit column per toolkit class, in toolkit class order."""
    missing = [name for name in class_names if name not in class_map]
    if missing:
        raise ShimError(f"class map missing the {missing[0]!r} class (of {missing})")
    columns = []
    for name in class_names:
        idx = class_map[name]
        if not 0 <= idx < vocab_size:
            raise ShimError(
                f"class {name!r} maps to column {idx}, outside the model vocab "
                f"(size {vocab_size})"
            )
        columns.append(idx)
    if len(set(columns)) != len(columns):
        raise ShimError("class map assigns one model column to multiple classes")
    return columns


@dataclass
class ExportedFiles:
    posterior_paths: list[str]
    embedding_paths: list[str]


def export_ctc(
    model_ref: str,
    wav_list: Sequence[str],
    class_names: Sequence[str],
    class_map: Mapping[str, int],
    out_dir: str,
    layer: int = -1,
    expected_sample_rate: int = 16000,
    device: str = "cpu",
) -> ExportedFiles:
    """One SCDP + one SCDE per WAV; frame rate derived from the model stride."""
    import torch
    from transformers import AutoModelForCTC

    model = AutoModelForCTC.from_pretrained(model_ref)
    model.to(device)
    model.eval()
    vocab_size = int(model.config.vocab_size)
    columns = resolve_column_order(class_names, class_map, vocab_size)

    os.makedirs(out_dir, exist_ok=True)
    exported = ExportedFiles([], [])
    for wav_path in wav_list:
        samples, sr = read_wav(wav_path)
        if sr != expected_sample_rate:
            raise ShimError(
                f"{wav_path}: sample rate {sr} != expected {expected_sample_rate}"
            )
        utt_id = utt_id_for(wav_path)
        with torch.no_grad():
            out = model(
                torch.from_numpy(samples).unsqueeze(0).to(device),
                output_hidden_states=True,
            )
        logits = out.logits[0].cpu().numpy()
        hidden = out.hidden_states[layer][0].cpu().numpy()
        if hidden.shape[0] != logits.shape[0]:
            raise ShimError(
                f"{wav_path}: hidden-state frames {hidden.shape[0]} != "
                f"logit frames {logits.shape[0]}"
            )
        # softmax over the mapped columns only: exported rows sum to 1
        picked = logits[:, columns].astype(np.float64)
        picked -= picked.max(axis=1, keepdims=True)
        probs = np.exp(picked)
        probs /= probs.sum(axis=1, keepdims=True)

        n_frames = probs.shape[0]
        frame_rate_hz = n_frames * sr / len(samples)
        scdp = os.path.join(out_dir, f"{utt_id}.scdp")
        scde = os.path.join(out_dir, f"{utt_id}.scde")
        write_posteriors(scdp, utt_id, frame_rate_hz, class_names, probs)
        write_embeddings(scde, utt_id, frame_rate_hz, hidden)
        exported.posterior_paths.append(scdp)
        exported.embedding_paths.append(scde)
    return exported
