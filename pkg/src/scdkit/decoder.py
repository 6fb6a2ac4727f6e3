"""Greedy CTC decoding with virtual-SC posterior summation.

Pipeline: sum tag-class posteriors into one virtual SC column, take the
per-frame arg max, apply the CTC trick (merge repeats, drop blanks), then
group letters into words at word-boundary tokens. Token frame spans are the
collapsed run extents, half-open [start, end); a word's span is extended
through its trailing word-boundary run so the embedding window rule can start
at the end of the space.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Alphabet, TagKind, TaggedTranscript, Token
from .errors import ValidationError

ROW_SUM_TOL = 1e-3


@dataclass(frozen=True, eq=False)
class PosteriorMatrix:
    """Frame-major class posteriors on the decoder frame grid.

    After sum_tag_posteriors, `tag_rows`/`tag_names` carry the original
    per-tag columns for LER/diagnostic attribution; the main rows then hold a
    single virtual SC column in place of the tag block.
    """

    utt_id: str
    frame_rate_hz: float
    rows: np.ndarray
    tag_rows: np.ndarray | None = None
    tag_names: tuple[str, ...] = ()

    @property
    def n_frames(self) -> int:
        return int(self.rows.shape[0])

    @property
    def n_classes(self) -> int:
        return int(self.rows.shape[1])

    def validate(self) -> None:
        if self.rows.ndim != 2:
            raise ValidationError(f"{self.utt_id}: rows must be 2-D")
        if self.rows.size:
            lo = float(self.rows.min())
            hi = float(self.rows.max())
            if lo < -1e-6 or hi > 1 + 1e-6:
                raise ValidationError(f"{self.utt_id}: entries outside [0,1] ({lo}, {hi})")
            sums = self.rows.sum(axis=1)
            worst = float(np.abs(sums - 1.0).max())
            if worst > ROW_SUM_TOL:
                raise ValidationError(
                    f"{self.utt_id}: posterior rows must sum to 1 +- {ROW_SUM_TOL} "
                    f"(worst deviation {worst:.3g})"
                )


@dataclass(frozen=True, eq=False)
class GreedyPath:
    class_ids: np.ndarray
    max_probs: np.ndarray

    def __len__(self) -> int:
        return int(self.class_ids.shape[0])


def single_sc_alphabet(alphabet: Alphabet) -> Alphabet:
    """The class inventory after tag summation: same letters, one SC class."""
    if alphabet.tag_kind is TagKind.NONE:
        raise ValidationError("tagless alphabet has no virtual SC view")
    if alphabet.tag_kind is TagKind.SINGLE_SC:
        return alphabet
    n_keep = 2 + len(alphabet.letter_ids)
    classes = alphabet.classes[:n_keep] + ("SC",)
    return Alphabet(
        classes=classes,
        blank_id=alphabet.blank_id,
        word_boundary_id=alphabet.word_boundary_id,
        letter_ids=alphabet.letter_ids,
        tag_ids=(n_keep,),
        tag_kind=TagKind.SINGLE_SC,
    )


def sum_tag_posteriors(p: PosteriorMatrix, alphabet: Alphabet) -> PosteriorMatrix:
    """Replace the tag columns with their row-wise sum (the virtual SC class).

    Identity for single_sc alphabets. For speaker/language label alphabets the
    original tag columns ride along in tag_rows for attribution; row sums are
    conserved because the block is replaced, not duplicated.
    """
    if alphabet.tag_kind is TagKind.NONE:
        raise ValidationError("sum_tag_posteriors: alphabet has no tag classes")
    if p.n_classes != alphabet.n_classes:
        raise ValidationError(
            f"{p.utt_id}: matrix has {p.n_classes} classes, alphabet {alphabet.n_classes}"
        )
    if alphabet.tag_kind is TagKind.SINGLE_SC:
        return p
    first_tag = min(alphabet.tag_ids)
    tag_block = p.rows[:, first_tag:]
    virtual = tag_block.sum(axis=1, keepdims=True)
    rows = np.hstack([p.rows[:, :first_tag], virtual])
    return PosteriorMatrix(
        utt_id=p.utt_id,
        frame_rate_hz=p.frame_rate_hz,
        rows=rows,
        tag_rows=tag_block.copy(),
        tag_names=alphabet.tag_names,
    )


def virtual_sc_column(summed: PosteriorMatrix, view: Alphabet) -> np.ndarray:
    """The per-frame virtual SC posterior of a summed matrix."""
    if view.tag_kind is not TagKind.SINGLE_SC:
        raise ValidationError("virtual_sc_column needs a single-SC class view")
    return summed.rows[:, view.tag_ids[0]]


def greedy_path(p: PosteriorMatrix) -> GreedyPath:
    """Per-frame arg max; exact ties break toward the lowest class id."""
    if p.n_frames == 0:
        raise ValidationError(f"{p.utt_id}: empty posterior matrix")
    ids = p.rows.argmax(axis=1)
    probs = p.rows[np.arange(p.n_frames), ids]
    return GreedyPath(class_ids=ids, max_probs=probs)


@dataclass(frozen=True)
class CollapsedToken:
    class_id: int
    start_frame: int
    end_frame: int  # exclusive


def ctc_collapse(path: GreedyPath, alphabet: Alphabet) -> list[CollapsedToken]:
    """Merge repeated ids into run tokens, then drop blanks (the CTC trick)."""
    ids = path.class_ids
    out: list[CollapsedToken] = []
    i = 0
    n = len(ids)
    while i < n:
        j = i + 1
        while j < n and ids[j] == ids[i]:
            j += 1
        if ids[i] != alphabet.blank_id:
            out.append(CollapsedToken(int(ids[i]), i, j))
        i = j
    return out


def _dominant_tag(p: PosteriorMatrix, start: int, end: int) -> tuple[str | None, int | None]:
    if p.tag_rows is None or not p.tag_names:
        return None, None
    mass = p.tag_rows[start:end].sum(axis=0)
    idx = int(mass.argmax())
    return p.tag_names[idx], idx


def decode_transcript(p: PosteriorMatrix, alphabet: Alphabet) -> TaggedTranscript:
    """Full greedy decode of one utterance into a word/tag transcript."""
    p.validate()
    if alphabet.tag_kind is TagKind.NONE:
        summed, view = p, alphabet
    else:
        summed = sum_tag_posteriors(p, alphabet)
        view = single_sc_alphabet(alphabet)
    collapsed = ctc_collapse(greedy_path(summed), view)

    tokens: list[Token] = []
    letters: list[str] = []
    word_start = word_end = 0

    def flush_word(end_override: int | None = None) -> None:
        nonlocal letters
        if letters:
            end = end_override if end_override is not None else word_end
            tokens.append(Token("word", "".join(letters), frame_span=(word_start, end)))
            letters = []

    for tok in collapsed:
        if view.is_letter(tok.class_id):
            if not letters:
                word_start = tok.start_frame
            letters.append(view.classes[tok.class_id])
            word_end = tok.end_frame
        elif tok.class_id == view.word_boundary_id:
            # The word's span runs through its trailing space.
            flush_word(end_override=tok.end_frame)
        else:  # virtual SC (or the plain tag class)
            flush_word()
            source, idx = _dominant_tag(summed, tok.start_frame, tok.end_frame)
            if alphabet.tag_kind is TagKind.LANGUAGE_LABELS and idx is not None:
                orig_tag_id = alphabet.tag_ids[idx]
                tokens.append(
                    Token(
                        "tag",
                        source,
                        tag_language=alphabet.language_of_tag[orig_tag_id],
                        frame_span=(tok.start_frame, tok.end_frame),
                        source=source,
                    )
                )
            else:
                tokens.append(
                    Token(
                        "tag",
                        "SC",
                        frame_span=(tok.start_frame, tok.end_frame),
                        source=source,
                    )
                )
    flush_word()
    return TaggedTranscript(tuple(tokens))
