"""Word alignment and the transcript metrics: WER, SC detection rates, LER."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Sequence

from .core import TaggedTranscript, Token
from .errors import ValidationError


@dataclass(frozen=True)
class AlignOp:
    kind: str  # "match" | "substitute" | "delete" | "insert"
    ref_index: int | None = None
    hyp_index: int | None = None


@dataclass(frozen=True)
class Alignment:
    ops: tuple[AlignOp, ...]

    def cost(self) -> int:
        return sum(1 for op in self.ops if op.kind != "match")

    def counts(self) -> tuple[int, int, int]:
        """(substitutions, deletions, insertions)."""
        s = sum(1 for op in self.ops if op.kind == "substitute")
        d = sum(1 for op in self.ops if op.kind == "delete")
        i = sum(1 for op in self.ops if op.kind == "insert")
        return s, d, i


def align_words(ref_tokens: Sequence[Hashable], hyp_tokens: Sequence[Hashable]) -> Alignment:
    """Minimum-edit-distance alignment with unit costs.

    Backtrace is deterministic: match/substitute preferred over delete over
    insert whenever costs tie. Tokens are opaque; equality decides matches.
    """
    n, m = len(ref_tokens), len(hyp_tokens)
    # dist[i][j] = cost of aligning ref[:i] with hyp[:j]
    dist = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(1, n + 1):
        dist[i][0] = i
    for j in range(1, m + 1):
        dist[0][j] = j
    for i in range(1, n + 1):
        ri = ref_tokens[i - 1]
        row = dist[i]
        prev = dist[i - 1]
        for j in range(1, m + 1):
            sub = prev[j - 1] + (0 if ri == hyp_tokens[j - 1] else 1)
            dele = prev[j] + 1
            ins = row[j - 1] + 1
            row[j] = min(sub, dele, ins)

    ops: list[AlignOp] = []
    i, j = n, m
    while i > 0 or j > 0:
        if i > 0 and j > 0:
            step = 0 if ref_tokens[i - 1] == hyp_tokens[j - 1] else 1
            if dist[i][j] == dist[i - 1][j - 1] + step:
                kind = "match" if step == 0 else "substitute"
                ops.append(AlignOp(kind, ref_index=i - 1, hyp_index=j - 1))
                i -= 1
                j -= 1
                continue
        if i > 0 and dist[i][j] == dist[i - 1][j] + 1:
            ops.append(AlignOp("delete", ref_index=i - 1))
            i -= 1
            continue
        ops.append(AlignOp("insert", hyp_index=j - 1))
        j -= 1
    ops.reverse()
    return Alignment(tuple(ops))


def word_edit_counts(ref: TaggedTranscript, hyp: TaggedTranscript) -> tuple[int, int, int, int]:
    """(S, D, I, N_ref_words) with all tag tokens stripped before alignment."""
    ref_words = ref.words()
    hyp_words = hyp.words()
    s, d, i = align_words(ref_words, hyp_words).counts()
    return s, d, i, len(ref_words)


def wer(ref: TaggedTranscript, hyp: TaggedTranscript) -> float | None:
    """Word error rate in percent after removing change/language tags.

    Returns None when the stripped reference is empty (reported, not divided).
    """
    s, d, i, n = word_edit_counts(ref, hyp)
    if n == 0:
        return None
    return 100.0 * (s + d + i) / n


@dataclass(frozen=True)
class ScdCounts:
    n_ref_sc_noninitial: int
    n_nosc_transitions: int
    n_fn: int
    n_fp: int

    @property
    def p_fn(self) -> float | None:
        if self.n_ref_sc_noninitial == 0:
            return None
        return 100.0 * self.n_fn / self.n_ref_sc_noninitial

    @property
    def p_fp(self) -> float | None:
        if self.n_nosc_transitions == 0:
            return None
        return 100.0 * self.n_fp / self.n_nosc_transitions


def merge_tag_runs(tokens: Sequence[Token]) -> tuple[Token, ...]:
    """Collapse each run of consecutive change tags into its first tag."""
    out: list[Token] = []
    for t in tokens:
        if t.is_tag and out and out[-1].is_tag:
            continue
        out.append(t)
    return tuple(out)


def _tag_blind_key(t: Token):
    # Every change tag (SC, S1..SN, NL/DE/FR) plays the same SC role for
    # alignment; words keep their identity.
    return ("t", "SC") if t.is_tag else ("w", t.value)


def align_tagged(ref: TaggedTranscript, hyp_merged: Sequence[Token]) -> Alignment:
    """Alignment with tags included, all change tags treated as one symbol."""
    return align_words(
        [_tag_blind_key(t) for t in ref.tokens],
        [_tag_blind_key(t) for t in hyp_merged],
    )


def scd_counts(ref: TaggedTranscript, hyp: TaggedTranscript) -> ScdCounts:
    """Speaker-change detection counts for one utterance pair.

    Consecutive hypothesis change tags merge into one detection first. A
    reference tag is a hit iff it aligns to a hypothesis tag. The utterance-
    initial reference tag is excluded from the p_fn denominator but a missed
    initial tag still counts as a false negative. False-positive opportunities
    are the reference word-word adjacencies with no intervening tag.
    """
    hyp_merged = merge_tag_runs(hyp.tokens)
    alignment = align_tagged(ref, hyp_merged)

    n_ref_tags = sum(1 for t in ref.tokens if t.is_tag)
    initial_tag = 1 if (ref.tokens and ref.tokens[0].is_tag) else 0
    n_ref_sc_noninitial = n_ref_tags - initial_tag

    n_nosc_transitions = sum(
        1
        for a, b in zip(ref.tokens, ref.tokens[1:])
        if a.is_word and b.is_word
    )

    n_fn = 0
    n_fp = 0
    for op in alignment.ops:
        ref_is_tag = op.ref_index is not None and ref.tokens[op.ref_index].is_tag
        hyp_is_tag = op.hyp_index is not None and hyp_merged[op.hyp_index].is_tag
        if ref_is_tag and not hyp_is_tag:
            n_fn += 1
        if hyp_is_tag and not ref_is_tag:
            n_fp += 1
    return ScdCounts(
        n_ref_sc_noninitial=n_ref_sc_noninitial,
        n_nosc_transitions=n_nosc_transitions,
        n_fn=n_fn,
        n_fp=n_fp,
    )


@dataclass(frozen=True)
class LanguageReport:
    n_segments: int
    n_language_errors: int

    @property
    def ler(self) -> float | None:
        if self.n_segments == 0:
            return None
        return 100.0 * self.n_language_errors / self.n_segments


def _hyp_language(t: Token) -> str | None:
    if t.tag_language is not None:
        return t.tag_language
    if t.value and t.value != "SC":
        return t.value.lower()
    return None


def ler(
    ref: TaggedTranscript,
    hyp: TaggedTranscript,
    alignment: Alignment | None = None,
) -> LanguageReport:
    """Language error rate bookkeeping for one utterance pair.

    Reference segments are the word runs opened by each reference language
    tag. A segment's hypothesis language is the language of the hypothesis tag
    aligned to its opening tag; a missing opening tag makes the initial
    segment an error outright, while a non-initial segment inherits the
    running hypothesis language and errs only if that differs from the
    reference. An inserted hypothesis tag errs only when its language differs
    from the enclosing reference segment's language (it always updates the
    running language). If `alignment` is given it must have been computed
    against merge_tag_runs(hyp); by default it is recomputed here.
    """
    if not any(t.is_tag for t in ref.tokens):
        raise ValidationError("ler: reference has no language tags")
    hyp_merged = merge_tag_runs(hyp.tokens)
    if alignment is None:
        alignment = align_tagged(ref, hyp_merged)

    n_segments = 0
    n_errors = 0
    seg_ref_lang: str | None = None
    seg_error = False
    current_hyp_lang: str | None = None
    opened = False

    def close_segment():
        nonlocal n_segments, n_errors
        if opened:
            n_segments += 1
            if seg_error:
                n_errors += 1

    for op in alignment.ops:
        ref_tok = ref.tokens[op.ref_index] if op.ref_index is not None else None
        hyp_tok = hyp_merged[op.hyp_index] if op.hyp_index is not None else None
        if ref_tok is not None and ref_tok.is_tag:
            close_segment()
            seg_ref_lang = ref_tok.tag_language or ref_tok.value.lower()
            seg_error = False
            is_initial = not opened
            opened = True
            if hyp_tok is not None and hyp_tok.is_tag:
                current_hyp_lang = _hyp_language(hyp_tok)
            elif is_initial:
                # Missed label at the start of the hypothesis: always an error.
                seg_error = True
                current_hyp_lang = None
            # else: inherit current_hyp_lang from the previous segment.
            if current_hyp_lang != seg_ref_lang:
                seg_error = True
        elif hyp_tok is not None and hyp_tok.is_tag:
            # False-positive tag inside (or before) a reference segment.
            lang = _hyp_language(hyp_tok)
            if opened and lang != seg_ref_lang:
                seg_error = True
            current_hyp_lang = lang
    close_segment()
    return LanguageReport(n_segments=n_segments, n_language_errors=n_errors)
