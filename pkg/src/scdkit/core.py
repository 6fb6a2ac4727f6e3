"""Shared domain types: segments, manifests, tag schemes, alphabets, transcripts."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .errors import ManifestError, ValidationError

BLANK_NAME = "<blank>"
WORD_BOUNDARY_NAME = "|"


class TagScheme(str, enum.Enum):
    """How change tags are placed in reference transcripts."""

    NOSC = "nosc"
    SEPARATOR = "separator"
    ANNOUNCE = "announce"
    SPEAKER_LABEL = "speaker-label"
    LANGUAGE_LABEL = "language-label"

    @classmethod
    def parse(cls, name: str) -> "TagScheme":
        try:
            return cls(name)
        except ValueError:
            raise ValidationError(
                f"unknown tag scheme {name!r}; expected one of "
                + ", ".join(s.value for s in cls)
            ) from None


class TagKind(str, enum.Enum):
    NONE = "none"
    SINGLE_SC = "single_sc"
    SPEAKER_LABELS = "speaker_labels"
    LANGUAGE_LABELS = "language_labels"


class Mode(str, enum.Enum):
    MAX_DURATION = "max-duration"
    MIN_DURATION = "min-duration"
    PAIRWISE = "pairwise"


class NeighborConstraint(str, enum.Enum):
    DIFFERENT_SPEAKER = "different-speaker"
    SAME_SPEAKER = "same-speaker"


@dataclass(frozen=True)
class Segment:
    """One source speech excerpt with speaker, session, language, timing and text."""

    id: str
    speaker_id: str
    session_id: str
    language: str
    variant: str
    audio_path: str
    start_s: float
    duration_s: float
    text: str


@dataclass(frozen=True)
class Manifest:
    segments: tuple[Segment, ...]
    split: str = "train"

    def __post_init__(self):
        if self.split not in ("train", "dev", "eval"):
            raise ValidationError(f"unknown split {self.split!r}")

    def speakers(self) -> list[str]:
        return sorted({s.speaker_id for s in self.segments})

    def languages(self) -> list[str]:
        return sorted({s.language for s in self.segments})

    def by_id(self) -> dict[str, Segment]:
        return {s.id: s for s in self.segments}


def speaker_label_map(manifest: Manifest) -> dict[str, str]:
    """Speaker id -> S-class name, in sorted speaker-id order (reproducible)."""
    return {spk: f"S{i + 1}" for i, spk in enumerate(manifest.speakers())}


@dataclass(frozen=True)
class Token:
    """One transcript token: a word or a change tag.

    frame_span is half-open [start, end) on the decoder frame grid; None for
    reference/parsed transcripts that carry no timing. source records the
    dominant original tag column for tags decoded through a summed virtual-SC
    posterior (diagnostics only).
    """

    kind: str  # "word" | "tag"
    value: str
    tag_language: str | None = None
    frame_span: tuple[int, int] | None = None
    source: str | None = None

    def __post_init__(self):
        if self.kind not in ("word", "tag"):
            raise ValidationError(f"bad token kind {self.kind!r}")

    @property
    def is_tag(self) -> bool:
        return self.kind == "tag"

    @property
    def is_word(self) -> bool:
        return self.kind == "word"


def word(value: str, frame_span: tuple[int, int] | None = None) -> Token:
    return Token("word", value, frame_span=frame_span)


def tag(
    value: str,
    tag_language: str | None = None,
    frame_span: tuple[int, int] | None = None,
    source: str | None = None,
) -> Token:
    return Token("tag", value, tag_language=tag_language, frame_span=frame_span, source=source)


@dataclass(frozen=True)
class TaggedTranscript:
    tokens: tuple[Token, ...]

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))

    def words(self) -> list[str]:
        return [t.value for t in self.tokens if t.is_word]

    def tags(self) -> list[Token]:
        return [t for t in self.tokens if t.is_tag]

    def n_noninitial_tags(self) -> int:
        return sum(1 for i, t in enumerate(self.tokens) if t.is_tag and i > 0)

    def validate_spans(self) -> None:
        """Spans, when present, must be well-formed, non-overlapping, increasing."""
        prev_end = None
        prev_start = None
        for t in self.tokens:
            if t.frame_span is None:
                continue
            start, end = t.frame_span
            if not (0 <= start < end):
                raise ValidationError(f"malformed frame span {t.frame_span} on {t.value!r}")
            if prev_start is not None and not (start >= prev_end and start > prev_start):
                raise ValidationError(
                    f"overlapping or non-increasing spans at {t.value!r}: "
                    f"({start},{end}) after ({prev_start},{prev_end})"
                )
            prev_start, prev_end = start, end


@dataclass(frozen=True)
class Alphabet:
    """CTC class inventory: blank, word boundary, letters, then tag classes.

    Blank is class 0 and the word boundary class 1 by construction; ids are
    dense from 0 so class order fully determines the id assignment.
    """

    classes: tuple[str, ...]
    blank_id: int
    word_boundary_id: int
    letter_ids: tuple[int, ...]
    tag_ids: tuple[int, ...]
    tag_kind: TagKind
    language_of_tag: Mapping[int, str] = field(default_factory=dict)

    @property
    def n_classes(self) -> int:
        return len(self.classes)

    @property
    def letters(self) -> tuple[str, ...]:
        return tuple(self.classes[i] for i in self.letter_ids)

    @property
    def tag_names(self) -> tuple[str, ...]:
        return tuple(self.classes[i] for i in self.tag_ids)

    def id_of(self, name: str) -> int:
        try:
            return self.classes.index(name)
        except ValueError:
            raise ValidationError(f"class {name!r} not in alphabet") from None

    def is_letter(self, class_id: int) -> bool:
        return class_id in self._letter_set

    def is_tag(self, class_id: int) -> bool:
        return class_id in self._tag_set

    def __post_init__(self):
        object.__setattr__(self, "_letter_set", frozenset(self.letter_ids))
        object.__setattr__(self, "_tag_set", frozenset(self.tag_ids))

    def to_dict(self) -> dict:
        return {
            "classes": list(self.classes),
            "tag_kind": self.tag_kind.value,
            "language_of_tag": {str(k): v for k, v in self.language_of_tag.items()},
        }


def build_alphabet(
    letters: Sequence[str],
    tag_scheme: TagScheme,
    n_speakers: int = 0,
    languages: Sequence[str] = (),
) -> Alphabet:
    """Construct the class inventory for a tag scheme.

    Class order is [blank, word-boundary, letters..., apostrophe, tags...];
    the word-boundary symbol is implicit and stripped from `letters` if the
    caller includes it. Deterministic: identical inputs give identical ids.
    """
    cleaned = [c for c in letters if c not in (" ", WORD_BOUNDARY_NAME)]
    if not cleaned:
        raise ValidationError("letters must be non-empty")
    if len(set(cleaned)) != len(cleaned):
        dupes = sorted({c for c in cleaned if cleaned.count(c) > 1})
        raise ValidationError(f"duplicate letters: {dupes}")
    ordered = [c for c in cleaned if c != "'"] + (["'"] if "'" in cleaned else [])

    tags: list[str] = []
    language_of_tag: dict[int, str] = {}
    if tag_scheme is TagScheme.NOSC:
        tag_kind = TagKind.NONE
    elif tag_scheme in (TagScheme.SEPARATOR, TagScheme.ANNOUNCE):
        tag_kind = TagKind.SINGLE_SC
        tags = ["SC"]
    elif tag_scheme is TagScheme.SPEAKER_LABEL:
        if n_speakers < 1:
            raise ValidationError("speaker-label scheme requires n_speakers >= 1")
        tag_kind = TagKind.SPEAKER_LABELS
        tags = [f"S{i + 1}" for i in range(n_speakers)]
    else:  # LANGUAGE_LABEL
        if len(languages) < 2:
            raise ValidationError("language-label scheme requires >= 2 languages")
        if len(set(languages)) != len(languages):
            raise ValidationError("duplicate languages")
        tag_kind = TagKind.LANGUAGE_LABELS
        tags = [lang.upper() for lang in languages]

    classes = [BLANK_NAME, WORD_BOUNDARY_NAME] + ordered + tags
    letter_ids = tuple(range(2, 2 + len(ordered)))
    tag_ids = tuple(range(2 + len(ordered), len(classes)))
    if tag_kind is TagKind.LANGUAGE_LABELS:
        language_of_tag = {tid: languages[k] for k, tid in enumerate(tag_ids)}
    return Alphabet(
        classes=tuple(classes),
        blank_id=0,
        word_boundary_id=1,
        letter_ids=letter_ids,
        tag_ids=tag_ids,
        tag_kind=tag_kind,
        language_of_tag=language_of_tag,
    )


@dataclass(frozen=True)
class BuilderConfig:
    """Knobs for the concatenation recipes.

    max_duration_s defaults to the broadcast-style 18.75 s cap; pairwise
    multilingual building uses 30 s; min_duration_s defaults to 17.5 s.
    """

    mode: Mode
    max_duration_s: float = 18.75
    min_duration_s: float = 17.5
    p_language_change: float = 0.5
    p_same_speaker_given_same_language: float = 0.5
    neighbor_constraint: NeighborConstraint = NeighborConstraint.DIFFERENT_SPEAKER
    crossfade_ms: float = 20.0
    target_rms_dbfs: float = -26.0
    tag_scheme: TagScheme = TagScheme.ANNOUNCE
    seed: int = 0

    def __post_init__(self):
        for name in ("p_language_change", "p_same_speaker_given_same_language"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValidationError(f"{name} must be in [0,1], got {p}")
        for name in ("max_duration_s", "min_duration_s"):
            d = getattr(self, name)
            if d <= 0:
                raise ValidationError(f"{name} must be > 0, got {d}")
        if self.crossfade_ms < 0:
            raise ValidationError(f"crossfade_ms must be >= 0, got {self.crossfade_ms}")


EN28_LETTERS = tuple("abcdefghijklmnopqrstuvwxyz") + ("'",)


def alphabet_from_spec(
    spec: str,
    n_speakers: int = 0,
    languages: Sequence[str] = (),
) -> Alphabet:
    """Parse a CLI alphabet spec like "en28+sc", "en28+s4", "en28+lang:nl,de,fr".

    Base part: "en28" (a-z + apostrophe + word end) or "letters:<chars>".
    Tag part: absent (no tags), "sc", "s<N>", or "lang:<codes>"; an explicit
    tag part overrides the n_speakers/languages arguments.
    """
    base, _, tagpart = spec.partition("+")
    if base == "en28":
        letters: Sequence[str] = EN28_LETTERS
    elif base.startswith("letters:"):
        letters = list(base[len("letters:"):])
    else:
        raise ValidationError(f"unknown alphabet base {base!r}")

    if not tagpart:
        scheme = TagScheme.NOSC
    elif tagpart == "sc":
        scheme = TagScheme.ANNOUNCE
    elif tagpart.startswith("s") and tagpart[1:].isdigit():
        scheme = TagScheme.SPEAKER_LABEL
        n_speakers = int(tagpart[1:])
    elif tagpart.startswith("lang:"):
        scheme = TagScheme.LANGUAGE_LABEL
        languages = [c for c in tagpart[len("lang:"):].split(",") if c]
    else:
        raise ValidationError(f"unknown alphabet tag part {tagpart!r}")
    return build_alphabet(letters, scheme, n_speakers=n_speakers, languages=languages)


_REQUIRED_FIELDS = (
    "id",
    "speaker_id",
    "session_id",
    "language",
    "variant",
    "audio_path",
    "start_s",
    "duration_s",
    "text",
)


def validate_manifest(
    raw_records: Iterable[Mapping],
    split: str = "train",
    alphabet: Alphabet | None = None,
) -> Manifest:
    """Validate parsed manifest records into a Manifest.

    Collects every violation and raises ManifestError if any exist; never
    partially accepts. Text characters are checked against the letter portion
    of `alphabet` (plus space) when one is given.
    """
    violations: list[str] = []
    segments: list[Segment] = []
    seen_ids: set[str] = set()
    letters = set(alphabet.letters) | {" "} if alphabet is not None else None

    for lineno, rec in enumerate(raw_records, start=1):
        rid = rec.get("id", f"<record {lineno}>")
        missing = [f for f in _REQUIRED_FIELDS if f not in rec]
        if missing:
            violations.append(f"record {rid}: missing fields {missing}")
            continue
        ok = True
        try:
            start_s = float(rec["start_s"])
            duration_s = float(rec["duration_s"])
        except (TypeError, ValueError):
            violations.append(f"record {rid}: non-numeric start_s/duration_s")
            continue
        if duration_s <= 0:
            violations.append(f"record {rid}: duration_s must be > 0 (got {duration_s})")
            ok = False
        if start_s < 0:
            violations.append(f"record {rid}: start_s must be >= 0 (got {start_s})")
            ok = False
        if rec["id"] in seen_ids:
            violations.append(f"record {rid}: duplicate id")
            ok = False
        seen_ids.add(rec["id"])
        text = str(rec["text"])
        if text != " ".join(text.split()):
            violations.append(f"record {rid}: text not single-space separated words")
            ok = False
        if letters is not None:
            for pos, ch in enumerate(text):
                if ch not in letters:
                    violations.append(
                        f"record {rid}: out-of-alphabet character {ch!r} at position {pos}"
                    )
                    ok = False
                    break
        if ok:
            segments.append(
                Segment(
                    id=str(rec["id"]),
                    speaker_id=str(rec["speaker_id"]),
                    session_id=str(rec["session_id"]),
                    language=str(rec["language"]),
                    variant=str(rec["variant"]),
                    audio_path=str(rec["audio_path"]),
                    start_s=start_s,
                    duration_s=duration_s,
                    text=text,
                )
            )

    if violations:
        raise ManifestError(violations)
    return Manifest(segments=tuple(segments), split=split)
