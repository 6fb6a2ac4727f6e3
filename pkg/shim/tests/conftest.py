from __future__ import annotations

import numpy as np
import pytest

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def tiny_ctc_model_dir(tmp_path_factory):
    """A tiny randomly initialized CTC checkpoint saved to disk (no network)."""
    import torch
    from transformers import Wav2Vec2Config, Wav2Vec2ForCTC

    torch.manual_seed(0)
    config = Wav2Vec2Config(
        vocab_size=32,
        hidden_size=32,
        num_hidden_layers=2,
        num_attention_heads=2,
        intermediate_size=64,
        conv_dim=(16, 16, 16),
        conv_stride=(5, 4, 4),
        conv_kernel=(10, 3, 3),
        num_conv_pos_embeddings=16,
        num_conv_pos_embedding_groups=2,
    )
    model = Wav2Vec2ForCTC(config)
    out = tmp_path_factory.mktemp("tiny-ctc")
    model.save_pretrained(str(out))
    return str(out)


@pytest.fixture
def wav_files(tmp_path):
    """Three short mono 16 kHz WAVs."""
    import wave

    rng = np.random.default_rng(7)
    paths = []
    for k, n_samples in enumerate((16000, 24000, 8000)):
        samples = (rng.normal(0, 0.05, n_samples) * 32767).astype("<i2")
        path = str(tmp_path / f"utt{k}.wav")
        with wave.open(path, "wb") as w:
            w.setnchannels(1)
            w.setsampwidth(2)
            w.setframerate(16000)
            w.writeframes(samples.tobytes())
        paths.append(path)
    return paths
