"""Select, per detected change, the frame embedding representing the next speaker.

The window for a run of consecutive change tags opens at the end of the
previous word's span (which the decoder extends through the trailing space
run) or at frame 0 for an utterance-initial run, and closes at the start of
the next word's span or at n_frames. Within the window, the frame with the
maximum virtual-SC posterior is selected; its embedding row is taken as-is.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .core import TaggedTranscript
from .errors import ValidationError
from .synth import EmbeddingMatrix

__all__ = ["EmbeddingMatrix", "ScWindow", "sc_windows", "select_embedding", "extract_embeddings"]


@dataclass(frozen=True, eq=False)
class ScWindow:
    sc_index: int
    start_frame: int
    end_frame: int  # exclusive
    selected_frame: int | None = None
    embedding: np.ndarray | None = None


def sc_windows(decoded: TaggedTranscript, n_frames: int) -> list[ScWindow]:
    """One window per maximal run of consecutive tag tokens."""
    decoded.validate_spans()
    tokens = decoded.tokens
    for t in tokens:
        if t.frame_span is None:
            raise ValidationError("sc_windows: decoded transcript lacks frame spans")

    windows: list[ScWindow] = []
    i = 0
    while i < len(tokens):
        if not tokens[i].is_tag:
            i += 1
            continue
        j = i
        while j < len(tokens) and tokens[j].is_tag:
            j += 1
        start = tokens[i - 1].frame_span[1] if i > 0 else 0
        end = tokens[j].frame_span[0] if j < len(tokens) else n_frames
        if not 0 <= start < end <= n_frames:
            raise ValidationError(
                f"sc_windows: degenerate window [{start}, {end}) for tag run at token {i}"
            )
        windows.append(ScWindow(sc_index=len(windows), start_frame=start, end_frame=end))
        i = j
    return windows


def select_embedding(
    window: ScWindow,
    virtual_sc_column: np.ndarray,
    emb: EmbeddingMatrix,
) -> ScWindow:
    """Pick the window frame with maximum virtual-SC posterior (ties: earliest)."""
    if window.start_frame >= window.end_frame:
        raise ValidationError("select_embedding: empty window")
    if window.end_frame > emb.n_frames or window.end_frame > len(virtual_sc_column):
        raise ValidationError("select_embedding: window beyond frame grid")
    segment = np.asarray(virtual_sc_column)[window.start_frame:window.end_frame]
    selected = window.start_frame + int(segment.argmax())
    return replace(window, selected_frame=selected, embedding=emb.rows[selected].copy())


def extract_embeddings(
    decoded: TaggedTranscript,
    virtual_sc_column: np.ndarray,
    emb: EmbeddingMatrix,
) -> list[ScWindow]:
    """sc_windows + select_embedding for every detected change run."""
    n_frames = emb.n_frames
    return [
        select_embedding(w, virtual_sc_column, emb)
        for w in sc_windows(decoded, n_frames)
    ]
