from __future__ import annotations

import numpy as np
import pytest

from scdkit.core import EN28_LETTERS, TagScheme, TaggedTranscript, Token, build_alphabet
from scdkit.decoder import decode_transcript, single_sc_alphabet, sum_tag_posteriors, virtual_sc_column
from scdkit.embeddings import EmbeddingMatrix, ScWindow, extract_embeddings, sc_windows, select_embedding
from scdkit.errors import ValidationError
from scdkit.synth import SynthConfig, plant_embeddings, speaker_centroids, synthesize_posteriors
from scdkit.trials import cosine_score


def _tt(*tokens):
    return TaggedTranscript(tuple(tokens))


def test_window_between_space_and_next_letter():
    # word span extended through its trailing space ends at 2; next word starts at 6
    decoded = _tt(
        Token("word", "go", frame_span=(0, 2)),
        Token("tag", "SC", frame_span=(2, 5)),
        Token("word", "hi", frame_span=(6, 9)),
    )
    windows = sc_windows(decoded, n_frames=12)
    assert len(windows) == 1
    assert (windows[0].start_frame, windows[0].end_frame) == (2, 6)


def test_window_utterance_initial_starts_at_zero():
    decoded = _tt(
        Token("tag", "SC", frame_span=(0, 3)),
        Token("word", "hi", frame_span=(4, 8)),
    )
    windows = sc_windows(decoded, n_frames=10)
    assert (windows[0].start_frame, windows[0].end_frame) == (0, 4)


def test_two_runs_give_two_disjoint_windows():
    decoded = _tt(
        Token("tag", "SC", frame_span=(0, 2)),
        Token("word", "aa", frame_span=(3, 6)),
        Token("tag", "SC", frame_span=(7, 8)),
        Token("tag", "SC", frame_span=(9, 10)),
        Token("word", "bb", frame_span=(11, 14)),
    )
    windows = sc_windows(decoded, n_frames=16)
    assert len(windows) == 2
    (w1, w2) = windows
    assert (w1.start_frame, w1.end_frame) == (0, 3)
    assert (w2.start_frame, w2.end_frame) == (6, 11)
    assert w1.end_frame <= w2.start_frame
    assert (w1.sc_index, w2.sc_index) == (0, 1)


def test_trailing_run_window_closes_at_n_frames():
    decoded = _tt(
        Token("word", "hi", frame_span=(0, 4)),
        Token("tag", "SC", frame_span=(5, 7)),
    )
    windows = sc_windows(decoded, n_frames=9)
    assert (windows[0].start_frame, windows[0].end_frame) == (4, 9)


def test_sc_windows_rejects_missing_spans():
    with pytest.raises(ValidationError):
        sc_windows(_tt(Token("tag", "SC")), 5)


def test_sc_windows_rejects_overlapping_spans():
    decoded = _tt(
        Token("word", "hi", frame_span=(0, 5)),
        Token("tag", "SC", frame_span=(3, 6)),
    )
    with pytest.raises(ValidationError):
        sc_windows(decoded, 10)


def test_select_embedding_argmax_and_tie():
    emb = EmbeddingMatrix(utt_id="u", frame_rate_hz=50.0, rows=np.eye(6))
    column = np.array([0.0, 0.0, 0.6, 0.9, 0.8, 0.3])
    w = select_embedding(ScWindow(0, 2, 6), column, emb)
    assert w.selected_frame == 3
    assert np.array_equal(w.embedding, np.eye(6)[3])
    # all-equal posteriors: earliest frame wins
    w = select_embedding(ScWindow(0, 2, 6), np.full(6, 0.5), emb)
    assert w.selected_frame == 2


def test_select_embedding_empty_window_errors():
    emb = EmbeddingMatrix(utt_id="u", frame_rate_hz=50.0, rows=np.eye(4))
    with pytest.raises(ValidationError):
        select_embedding(ScWindow(0, 3, 3), np.ones(4), emb)


def test_selected_frame_carries_window_max():
    emb = EmbeddingMatrix(utt_id="u", frame_rate_hz=50.0, rows=np.zeros((8, 2)) + 1.0)
    column = np.array([0.1, 0.9, 0.3, 0.8, 0.2, 0.1, 0.0, 0.0])
    w = select_embedding(ScWindow(0, 1, 5), column, emb)
    assert column[w.selected_frame] == column[1:5].max()


def _oracle_pipeline(parts, alphabet, config):
    posteriors = synthesize_posteriors(parts, alphabet, config)
    emb = plant_embeddings(parts, config)
    decoded = decode_transcript(posteriors, alphabet)
    summed = sum_tag_posteriors(posteriors, alphabet)
    view = single_sc_alphabet(alphabet)
    column = virtual_sc_column(summed, view)
    return decoded, extract_embeddings(decoded, column, emb)


def test_oracle_selected_embedding_matches_following_speaker():
    alphabet = build_alphabet(EN28_LETTERS, TagScheme.ANNOUNCE)
    config = SynthConfig(
        peak_prob=1.0, noise_floor=0.0, embedding_noise_sigma=0.0, centroid_separation=3.0
    )
    parts = [
        ("A", (Token("tag", "SC"), Token("word", "hello"))),
        ("B", (Token("tag", "SC"), Token("word", "there"))),
        ("A", (Token("tag", "SC"), Token("word", "again"))),
    ]
    decoded, windows = _oracle_pipeline(parts, alphabet, config)
    assert len(windows) == len(decoded.tags()) == 3
    centroids = speaker_centroids(["A", "B"], config)
    followers = ["A", "B", "A"]
    for w, follower in zip(windows, followers):
        own = cosine_score(w.embedding, centroids[follower])
        other = max(
            cosine_score(w.embedding, centroids[s]) for s in centroids if s != follower
        )
        assert own > other


def test_one_embedding_per_tag_run():
    alphabet = build_alphabet(EN28_LETTERS, TagScheme.ANNOUNCE)
    config = SynthConfig(peak_prob=1.0, noise_floor=0.0, sc_repeat_peaks=4)
    parts = [
        ("A", (Token("tag", "SC"), Token("word", "one"))),
        ("B", (Token("tag", "SC"), Token("word", "two"))),
    ]
    decoded, windows = _oracle_pipeline(parts, alphabet, config)
    runs = 0
    prev_tag = False
    for tok in decoded.tokens:
        if tok.is_tag and not prev_tag:
            runs += 1
        prev_tag = tok.is_tag
    assert len(windows) == runs == 2
