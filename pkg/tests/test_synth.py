from __future__ import annotations

import numpy as np
import pytest

from scdkit.core import EN28_LETTERS, TagScheme, TaggedTranscript, Token, build_alphabet
from scdkit.decoder import decode_transcript, greedy_path
from scdkit.errors import ValidationError
from scdkit.synth import SynthConfig, plant_embeddings, speaker_centroids, synthesize_posteriors
from scdkit.trials import cosine_score

NOISELESS = SynthConfig(peak_prob=1.0, noise_floor=0.0)


def _tt(*tokens):
    return TaggedTranscript(tuple(tokens))


def _strip_spans(t: TaggedTranscript) -> list[tuple[str, str]]:
    return [(tok.kind, tok.value) for tok in t.tokens]


ANN = build_alphabet(EN28_LETTERS, TagScheme.ANNOUNCE)


def test_noiseless_round_trip_simple():
    ref = _tt(Token("tag", "SC"), Token("word", "hi"))
    p = synthesize_posteriors(ref, ANN, NOISELESS)
    decoded = decode_transcript(p, ANN)
    assert _strip_spans(decoded) == [("tag", "SC"), ("word", "hi")]


def test_double_letter_survives_collapse():
    ref = _tt(Token("word", "llama"))
    p = synthesize_posteriors(ref, ANN, SynthConfig(peak_prob=1.0, noise_floor=0.0, blank_pad=0))
    decoded = decode_transcript(p, ANN)
    assert decoded.words() == ["llama"]


def test_sc_repeat_peaks_consecutive_argmax():
    config = SynthConfig(peak_prob=1.0, noise_floor=0.0, sc_repeat_peaks=3)
    ref = _tt(Token("tag", "SC"), Token("word", "a"))
    p = synthesize_posteriors(ref, ANN, config)
    path = greedy_path(p)
    sc_id = ANN.id_of("SC")
    runs = [i for i, c in enumerate(path.class_ids) if c == sc_id]
    assert len(runs) == 3
    assert runs == list(range(runs[0], runs[0] + 3))
    # still a single decoded tag
    assert len(decode_transcript(p, ANN).tags()) == 1


def test_rows_sum_to_one_and_nonnegative():
    config = SynthConfig(peak_prob=0.8, noise_floor=0.2)
    ref = _tt(Token("word", "hello"), Token("tag", "SC"), Token("word", "yo"))
    p = synthesize_posteriors(ref, ANN, config)
    assert np.abs(p.rows.sum(axis=1) - 1.0).max() < 1e-6
    assert p.rows.min() >= 0.0


def test_unknown_token_rejected():
    ref = _tt(Token("tag", "NL", tag_language="nl"))
    with pytest.raises(ValidationError):
        synthesize_posteriors(ref, ANN, NOISELESS)


def test_noiseless_round_trip_random_transcripts(rng):
    from conftest import random_text

    for _ in range(100):
        tokens = [Token("tag", "SC")]
        for w in random_text(rng, 5).split():
            tokens.append(Token("word", w))
            if rng.random() < 0.3:
                tokens.append(Token("tag", "SC"))
        ref = _tt(*tokens)
        config = SynthConfig(
            peak_prob=1.0,
            noise_floor=0.0,
            frames_per_token=rng.randint(1, 3),
            blank_pad=rng.randint(0, 2),
            sc_repeat_peaks=rng.randint(1, 3),
        )
        p = synthesize_posteriors(ref, ANN, config)
        assert _strip_spans(decode_transcript(p, ANN)) == _strip_spans(ref)


def test_plant_embeddings_exact_centroids_when_sigma_zero():
    config = SynthConfig(
        peak_prob=1.0, noise_floor=0.0, embedding_noise_sigma=0.0, centroid_separation=2.0
    )
    parts = [
        ("A", (Token("tag", "SC"), Token("word", "hi"))),
        ("B", (Token("tag", "SC"), Token("word", "yo"))),
    ]
    emb = plant_embeddings(parts, config)
    p = synthesize_posteriors(parts, ANN, config)
    assert emb.n_frames == p.n_frames
    centroids = speaker_centroids(["A", "B"], config)
    # frames of the same speaker coincide with the centroid; cross-speaker < 1
    assert cosine_score(emb.rows[0], centroids["A"]) == pytest.approx(1.0)
    assert cosine_score(emb.rows[0], centroids["B"]) < 1.0
    assert np.linalg.norm(centroids["A"] - centroids["B"]) == pytest.approx(2.0)


def test_plant_embeddings_deterministic_per_seed():
    config = SynthConfig(embedding_noise_sigma=0.3, seed=11)
    parts = [("A", (Token("word", "hi"),))]
    e1 = plant_embeddings(parts, config)
    e2 = plant_embeddings(parts, config)
    assert np.array_equal(e1.rows, e2.rows)


def test_plant_embeddings_requires_enough_dims():
    config = SynthConfig(embedding_dim=1)
    parts = [("A", (Token("word", "a"),)), ("B", (Token("word", "b"),))]
    with pytest.raises(ValidationError):
        plant_embeddings(parts, config)


def test_synth_config_validation():
    with pytest.raises(ValidationError):
        SynthConfig(peak_prob=0.9, noise_floor=0.2)
    with pytest.raises(ValidationError):
        SynthConfig(frames_per_token=0)
    with pytest.raises(ValidationError):
        SynthConfig(sc_repeat_peaks=0)
