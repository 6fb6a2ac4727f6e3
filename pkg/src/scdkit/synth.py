"""Testing oracle: CTC-consistent posterior matrices and planted embeddings.

Generates, from a reference transcript, a frame grid on which the greedy
decoder provably recovers the reference at noiseless settings, plus a paired
embedding matrix whose frames carry planted speaker centroids. The whole
pipeline is verifiable against these without any neural model.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import Alphabet, TagKind, TaggedTranscript, Token
from .decoder import PosteriorMatrix
from .errors import ValidationError


@dataclass(frozen=True)
class SynthConfig:
    frame_rate_hz: float = 50.0
    frames_per_token: int = 2
    blank_pad: int = 1
    peak_prob: float = 0.9
    noise_floor: float = 0.1
    sc_repeat_peaks: int = 1
    embedding_dim: int = 16
    centroid_separation: float = 1.0
    embedding_noise_sigma: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if abs(self.peak_prob + self.noise_floor - 1.0) > 1e-9:
            raise ValidationError(
                f"peak_prob + noise_floor must equal 1 "
                f"(got {self.peak_prob} + {self.noise_floor})"
            )
        if self.frames_per_token < 1:
            raise ValidationError("frames_per_token must be >= 1")
        if self.sc_repeat_peaks < 1:
            raise ValidationError("sc_repeat_peaks must be >= 1")
        if self.blank_pad < 0:
            raise ValidationError("blank_pad must be >= 0")
        if self.centroid_separation < 0 or self.embedding_noise_sigma < 0:
            raise ValidationError("separation and sigma must be >= 0")


# One planned frame: emission kind + payload + the speaker it belongs to.
# kind is "blank" | "letter" | "wb" | "tag"; payload is the letter character
# or the tag token.
@dataclass(frozen=True)
class _PlanFrame:
    kind: str
    payload: object
    speaker: str | None


SpeakerParts = Sequence[tuple[str, Sequence[Token]]]


def _frame_plan(parts: SpeakerParts, config: SynthConfig) -> list[_PlanFrame]:
    """The deterministic frame layout shared by posteriors and embeddings.

    Blanks between tokens belong to the *following* token's speaker, so the
    leading silence of a new speaker's stretch is attributed to that speaker.
    A word-boundary follows every word except the utterance-final token, and
    a single blank separates repeated identical letters so the CTC collapse
    keeps both.
    """
    flat: list[tuple[Token, str, bool]] = []  # (token, speaker, is_last_of_all)
    for speaker, tokens in parts:
        for t in tokens:
            flat.append((t, speaker, False))
    if not flat:
        return []
    flat[-1] = (flat[-1][0], flat[-1][1], True)

    plan: list[_PlanFrame] = []
    last_class: tuple[str, object] | None = None  # last non-blank (kind, key)

    def pad(n: int, speaker: str | None) -> None:
        nonlocal last_class
        if n > 0:
            plan.extend(_PlanFrame("blank", None, speaker) for _ in range(n))
            last_class = None

    def emit(kind: str, payload: object, key: object, speaker: str, n: int) -> None:
        # A blank must separate identical consecutive classes or the CTC
        # collapse would merge them.
        nonlocal last_class
        if last_class == (kind, key):
            pad(1, speaker)
        plan.extend(_PlanFrame(kind, payload, speaker) for _ in range(n))
        last_class = (kind, key)

    for token, speaker, is_last in flat:
        pad(config.blank_pad, speaker)
        if token.is_word:
            for ch in token.value:
                emit("letter", ch, ch, speaker, config.frames_per_token)
            if not is_last:
                emit("wb", None, None, speaker, config.frames_per_token)
        else:
            emit("tag", token, token.value, speaker, config.sc_repeat_peaks)
    pad(config.blank_pad, flat[-1][1])
    return plan


def _as_parts(reference: TaggedTranscript | SpeakerParts) -> SpeakerParts:
    if isinstance(reference, TaggedTranscript):
        return [(None, reference.tokens)]  # type: ignore[list-item]
    return reference


def _tag_class_id(token: Token, alphabet: Alphabet) -> int:
    if alphabet.tag_kind is TagKind.NONE:
        raise ValidationError(f"tag token {token.value!r} not representable: tagless alphabet")
    return alphabet.id_of(token.value)


def synthesize_posteriors(
    reference: TaggedTranscript | SpeakerParts,
    alphabet: Alphabet,
    config: SynthConfig,
    utt_id: str = "utt",
) -> PosteriorMatrix:
    """Posterior matrix whose noiseless greedy decode is exactly `reference`.

    Each frame puts peak_prob on its planned class and spreads noise_floor
    uniformly over all classes; rows sum to 1 within 1e-6.
    """
    plan = _frame_plan(_as_parts(reference), config)
    n_classes = alphabet.n_classes
    ids = np.empty(len(plan), dtype=np.int64)
    for i, f in enumerate(plan):
        if f.kind == "blank":
            ids[i] = alphabet.blank_id
        elif f.kind == "wb":
            ids[i] = alphabet.word_boundary_id
        elif f.kind == "letter":
            ids[i] = alphabet.id_of(f.payload)
        else:
            ids[i] = _tag_class_id(f.payload, alphabet)
    rows = np.full((len(plan), n_classes), config.noise_floor / n_classes, dtype=np.float64)
    rows[np.arange(len(plan)), ids] += config.peak_prob
    return PosteriorMatrix(utt_id=utt_id, frame_rate_hz=config.frame_rate_hz, rows=rows)


@dataclass(frozen=True, eq=False)
class EmbeddingMatrix:
    utt_id: str
    frame_rate_hz: float
    rows: np.ndarray

    @property
    def n_frames(self) -> int:
        return int(self.rows.shape[0])

    @property
    def dim(self) -> int:
        return int(self.rows.shape[1])


def speaker_centroids(speakers: Sequence[str], config: SynthConfig) -> dict[str, np.ndarray]:
    """Pairwise-equidistant centroids: separation/sqrt(2) along orthogonal axes."""
    speakers = sorted(set(speakers))
    if len(speakers) > config.embedding_dim:
        raise ValidationError(
            f"embedding_dim {config.embedding_dim} < {len(speakers)} speakers"
        )
    scale = config.centroid_separation / np.sqrt(2.0)
    out = {}
    for k, spk in enumerate(speakers):
        c = np.zeros(config.embedding_dim)
        c[k] = scale
        out[spk] = c
    return out


def plant_embeddings(
    reference_with_speakers: SpeakerParts,
    config: SynthConfig,
    utt_id: str = "utt",
    centroids: dict[str, np.ndarray] | None = None,
) -> EmbeddingMatrix:
    """Frame embeddings = the frame's speaker centroid + gaussian noise.

    Shares the frame grid with synthesize_posteriors for the same reference,
    so the matrices pair up frame for frame. Deterministic per (inputs, seed).

    Pass `centroids` built over the whole corpus speaker set when utterances
    will be compared against each other (speaker-verification trials); the
    per-utterance default assigns axes by the utterance's own speaker set.
    """
    plan = _frame_plan(reference_with_speakers, config)
    speakers = [spk for spk, _ in reference_with_speakers]
    if any(s is None for s in speakers):
        raise ValidationError("plant_embeddings: every part needs a speaker id")
    if centroids is None:
        centroids = speaker_centroids(speakers, config)
    missing = sorted(set(speakers) - set(centroids))
    if missing:
        raise ValidationError(f"plant_embeddings: no centroid for speakers {missing}")
    for spk, c in centroids.items():
        if len(c) != config.embedding_dim:
            raise ValidationError(
                f"centroid for {spk!r} has dim {len(c)}, expected {config.embedding_dim}"
            )
    rng = np.random.default_rng(config.seed)
    rows = rng.normal(0.0, config.embedding_noise_sigma, size=(len(plan), config.embedding_dim))
    for i, f in enumerate(plan):
        rows[i] += centroids[f.speaker]
    return EmbeddingMatrix(utt_id=utt_id, frame_rate_hz=config.frame_rate_hz, rows=rows)
