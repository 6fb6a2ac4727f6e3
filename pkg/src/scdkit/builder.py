"""Concatenation recipes: multispeaker packing, speaker-homogeneous contrast
sets, multilingual pairing, transcript rendering, density reporting, and
waveform assembly.

Packing order within a variant group is the seeded Fisher-Yates shuffle
(random.Random(config.seed)) of the manifest order; this ordering is part of
the contract so packing results are reproducible and hand-checkable.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .audio import crossfade_join, gain_to_rms
from .core import (
    BuilderConfig,
    Manifest,
    Mode,
    NeighborConstraint,
    Segment,
    TagScheme,
    TaggedTranscript,
    Token,
    speaker_label_map,
)
from .errors import UnsatisfiableError, ValidationError


@dataclass(frozen=True)
class ConcatSpec:
    """A plan for one concatenated waveform.

    parts are (segment_id, gap_s) with gap_s relative to the previous part:
    negative for a crossfade overlap, positive for inserted silence, 0 for the
    first part.
    """

    utt_id: str
    parts: tuple[tuple[str, float], ...]
    tag_scheme: TagScheme
    reference: TaggedTranscript
    total_duration_s: float

    def segment_ids(self) -> list[str]:
        return [segment_id for segment_id, _ in self.parts]


# ---------------------------------------------------------------------------
# Transcript rendering
# ---------------------------------------------------------------------------


def _speaker_runs(parts: Sequence[Segment]) -> list[list[Segment]]:
    runs: list[list[Segment]] = []
    for seg in parts:
        if runs and runs[-1][-1].speaker_id == seg.speaker_id:
            runs[-1].append(seg)
        else:
            runs.append([seg])
    return runs


def render_attributed(
    parts: Sequence[Segment],
    tag_scheme: TagScheme,
    speaker_map: Mapping[str, str] | None = None,
) -> list[tuple[str, tuple[Token, ...]]]:
    """Per speaker-run token groups: (speaker_id, [optional tag, words...]).

    Tags attach to the run they announce; a separator tag therefore belongs to
    the run it precedes.
    """
    if tag_scheme is TagScheme.SPEAKER_LABEL and speaker_map is None:
        raise ValidationError("speaker-label rendering requires a speaker_map")
    groups: list[tuple[str, tuple[Token, ...]]] = []
    for k, run in enumerate(_speaker_runs(parts)):
        speaker = run[0].speaker_id
        tokens: list[Token] = []
        if tag_scheme is TagScheme.SEPARATOR:
            if k > 0:
                tokens.append(Token("tag", "SC"))
        elif tag_scheme is TagScheme.ANNOUNCE:
            tokens.append(Token("tag", "SC"))
        elif tag_scheme is TagScheme.SPEAKER_LABEL:
            if speaker not in speaker_map:
                raise ValidationError(f"speaker {speaker!r} missing from speaker_map")
            tokens.append(Token("tag", speaker_map[speaker]))
        elif tag_scheme is TagScheme.LANGUAGE_LABEL:
            languages = {seg.language for seg in run}
            if len(languages) > 1:
                raise ValidationError(
                    f"speaker run {speaker!r} mixes languages {sorted(languages)}"
                )
            lang = run[0].language
            tokens.append(Token("tag", lang.upper(), tag_language=lang))
        for seg in run:
            tokens.extend(Token("word", w) for w in seg.text.split())
        groups.append((speaker, tuple(tokens)))
    return groups


def render_transcript(
    parts: Sequence[Segment],
    tag_scheme: TagScheme,
    speaker_map: Mapping[str, str] | None = None,
) -> TaggedTranscript:
    groups = render_attributed(parts, tag_scheme, speaker_map)
    tokens: list[Token] = []
    for _, group_tokens in groups:
        tokens.extend(group_tokens)
    return TaggedTranscript(tuple(tokens))


def announced_segment_ids(parts: Sequence[Segment], tag_scheme: TagScheme) -> list[str]:
    """Reference segment per change tag, in tag order (for proxy trials)."""
    runs = _speaker_runs(parts)
    if tag_scheme is TagScheme.NOSC:
        return []
    if tag_scheme is TagScheme.SEPARATOR:
        return [run[0].id for run in runs[1:]]
    return [run[0].id for run in runs]


# ---------------------------------------------------------------------------
# Packing
# ---------------------------------------------------------------------------


def _crossfade_s(config: BuilderConfig) -> float:
    return config.crossfade_ms / 1000.0


def _make_spec(
    utt_id: str,
    parts: Sequence[Segment],
    config: BuilderConfig,
    speaker_map: Mapping[str, str] | None,
) -> ConcatSpec:
    gap = -_crossfade_s(config)
    entries = [(parts[0].id, 0.0)] + [(p.id, gap) for p in parts[1:]]
    total = sum(p.duration_s for p in parts) + gap * (len(parts) - 1)
    return ConcatSpec(
        utt_id=utt_id,
        parts=tuple(entries),
        tag_scheme=config.tag_scheme,
        reference=render_transcript(parts, config.tag_scheme, speaker_map),
        total_duration_s=total,
    )


def _pack_group(
    segments: list[Segment],
    config: BuilderConfig,
    rng: random.Random,
) -> list[list[Segment]]:
    """Greedy sequential packing over a seeded shuffle of the group."""
    pool = list(segments)
    rng.shuffle(pool)
    crossfade = _crossfade_s(config)
    different = config.neighbor_constraint is NeighborConstraint.DIFFERENT_SPEAKER
    specs: list[list[Segment]] = []
    while pool:
        parts = [pool.pop(0)]
        total = parts[0].duration_s
        while pool:
            if config.mode is Mode.MIN_DURATION and total >= config.min_duration_s:
                break
            pick = None
            for k, cand in enumerate(pool):
                same = cand.speaker_id == parts[-1].speaker_id
                if different and same:
                    continue
                if not different and not same:
                    continue
                if (
                    config.mode is Mode.MAX_DURATION
                    and total + cand.duration_s - crossfade > config.max_duration_s + 1e-9
                ):
                    continue
                pick = k
                break
            if pick is None:
                break
            seg = pool.pop(pick)
            parts.append(seg)
            total += seg.duration_s - crossfade
        specs.append(parts)
    return specs


def _variant_groups(manifest: Manifest) -> list[tuple[str, list[Segment]]]:
    groups: dict[str, list[Segment]] = {}
    for seg in manifest.segments:
        groups.setdefault(seg.variant, []).append(seg)
    return sorted(groups.items())


def build_multispeaker(
    manifest: Manifest,
    config: BuilderConfig,
    utt_prefix: str = "sc",
) -> list[ConcatSpec]:
    """Pack segments into concatenations under the duration and neighbor rules.

    max-duration mode appends while the running total (durations plus gaps)
    stays under the cap; min-duration mode appends until the total reaches the
    minimum, so the final appended segment may push past it. All parts of one
    spec share the manifest variant; each segment is used at most once.
    """
    if config.mode not in (Mode.MAX_DURATION, Mode.MIN_DURATION):
        raise ValidationError(f"build_multispeaker: unsupported mode {config.mode.value}")
    if config.mode is Mode.MAX_DURATION:
        oversize = [s.id for s in manifest.segments if s.duration_s > config.max_duration_s]
        if oversize:
            raise ValidationError(
                f"segments longer than the {config.max_duration_s} s cap: {oversize}"
            )
    speaker_map = (
        speaker_label_map(manifest)
        if config.tag_scheme is TagScheme.SPEAKER_LABEL
        else None
    )
    rng = random.Random(config.seed)
    specs: list[ConcatSpec] = []
    for variant, group in _variant_groups(manifest):
        if (
            config.neighbor_constraint is NeighborConstraint.DIFFERENT_SPEAKER
            and len({s.speaker_id for s in group}) < 2
        ):
            raise UnsatisfiableError(
                f"variant {variant!r} has a single speaker; cannot satisfy the "
                "different-speaker neighbor constraint"
            )
        for parts in _pack_group(group, config, rng):
            specs.append(_make_spec(f"{utt_prefix}-{len(specs):06d}", parts, config, speaker_map))
    return specs


def build_nosc(
    manifest: Manifest,
    config: BuilderConfig,
    utt_prefix: str = "nosc",
) -> list[ConcatSpec]:
    """Speaker-homogeneous concatenations (the contrast set without changes)."""
    config = replace(config, neighbor_constraint=NeighborConstraint.SAME_SPEAKER)
    if config.mode not in (Mode.MAX_DURATION, Mode.MIN_DURATION):
        raise ValidationError(f"build_nosc: unsupported mode {config.mode.value}")
    if config.mode is Mode.MAX_DURATION:
        oversize = [s.id for s in manifest.segments if s.duration_s > config.max_duration_s]
        if oversize:
            raise ValidationError(
                f"segments longer than the {config.max_duration_s} s cap: {oversize}"
            )
    speaker_map = (
        speaker_label_map(manifest)
        if config.tag_scheme is TagScheme.SPEAKER_LABEL
        else None
    )
    rng = random.Random(config.seed)
    specs: list[ConcatSpec] = []
    for _variant, group in _variant_groups(manifest):
        by_speaker: dict[str, list[Segment]] = {}
        for seg in group:
            by_speaker.setdefault(seg.speaker_id, []).append(seg)
        for _speaker, segs in sorted(by_speaker.items()):
            for parts in _pack_group(segs, config, rng):
                specs.append(
                    _make_spec(f"{utt_prefix}-{len(specs):06d}", parts, config, speaker_map)
                )
    return specs


def merge_no_sc(
    sc_specs: Sequence[ConcatSpec],
    nosc_specs: Sequence[ConcatSpec],
    seed: int = 0,
) -> list[ConcatSpec]:
    """Mix change and no-change sets into one deterministically shuffled list."""
    collisions = {s.utt_id for s in sc_specs} & {s.utt_id for s in nosc_specs}
    if collisions:
        raise ValidationError(f"utt_id collision between sets: {sorted(collisions)}")
    merged = list(sc_specs) + list(nosc_specs)
    random.Random(seed).shuffle(merged)
    return merged


def build_multilingual_pairs(
    manifests: Mapping[str, Manifest],
    config: BuilderConfig,
    n_pairs: int,
    utt_prefix: str = "ml",
    max_redraws: int = 1000,
) -> list[ConcatSpec]:
    """Trilingual-style pairing: uniform first language, change with p, and a
    same-speaker second segment with p when the language repeats.

    Pairs whose gap-adjusted total would exceed the duration cap are redrawn
    (bounded); segments are sampled with replacement across pairs.
    """
    if config.mode is not Mode.PAIRWISE:
        raise ValidationError("build_multilingual_pairs requires pairwise mode")
    if config.tag_scheme is not TagScheme.LANGUAGE_LABEL:
        raise ValidationError("build_multilingual_pairs requires the language-label scheme")
    languages = sorted(manifests)
    if len(languages) < 2:
        raise ValidationError("need at least two language manifests")
    for lang in languages:
        if not manifests[lang].segments:
            raise ValidationError(f"language manifest {lang!r} is empty")
    segs = {lang: list(manifests[lang].segments) for lang in languages}
    crossfade = _crossfade_s(config)

    rng = random.Random(config.seed)
    specs: list[ConcatSpec] = []
    for k in range(n_pairs):
        for _attempt in range(max_redraws):
            lang1 = rng.choice(languages)
            seg1 = rng.choice(segs[lang1])
            change = rng.random() < config.p_language_change
            if change:
                lang2 = rng.choice([lang for lang in languages if lang != lang1])
                seg2 = rng.choice(segs[lang2])
            else:
                same_speaker = rng.random() < config.p_same_speaker_given_same_language
                if same_speaker:
                    candidates = [
                        s
                        for s in segs[lang1]
                        if s.speaker_id == seg1.speaker_id and s.id != seg1.id
                    ]
                else:
                    candidates = [s for s in segs[lang1] if s.speaker_id != seg1.speaker_id]
                if not candidates:
                    continue
                seg2 = rng.choice(candidates)
            total = seg1.duration_s + seg2.duration_s - crossfade
            if total > config.max_duration_s + 1e-9:
                continue
            specs.append(_make_spec(f"{utt_prefix}-{k:06d}", [seg1, seg2], config, None))
            break
        else:
            raise ValidationError(
                f"pair {k}: no draw satisfied the {config.max_duration_s} s cap "
                f"within {max_redraws} attempts"
            )
    return specs


# ---------------------------------------------------------------------------
# Density and audio
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DensityReport:
    seconds_per_change: float | None
    changes_per_spec_mean: float
    total_audio_s: float
    n_changes: int


def density_report(specs: Sequence[ConcatSpec]) -> DensityReport:
    """Seconds of audio per non-initial change tag, in exact rational arithmetic."""
    if not specs:
        raise ValidationError("density_report: no specs")
    total = Fraction(0)
    changes = 0
    for spec in specs:
        total += Fraction(spec.total_duration_s)
        changes += spec.reference.n_noninitial_tags()
    seconds_per_change = float(total / changes) if changes > 0 else None
    return DensityReport(
        seconds_per_change=seconds_per_change,
        changes_per_spec_mean=changes / len(specs),
        total_audio_s=float(total),
        n_changes=changes,
    )


def concat_audio(
    spec: ConcatSpec,
    audio_store,
    config: BuilderConfig,
) -> tuple[np.ndarray, int]:
    """Assemble one waveform: per-part RMS gain, then crossfade/gap joining.

    Honors the per-part gap_s recorded in the spec: negative gaps overlap with
    a linear crossfade, positive gaps insert silence.
    """
    loaded = []
    sample_rate: int | None = None
    for segment_id, gap_s in spec.parts:
        samples, sr = audio_store.load(segment_id)
        if sample_rate is None:
            sample_rate = sr
        elif sr != sample_rate:
            raise ValidationError(
                f"{spec.utt_id}: sample-rate mismatch at {segment_id} ({sr} != {sample_rate})"
            )
        loaded.append((np.asarray(samples, dtype=np.float64), gap_s))

    out: np.ndarray | None = None
    for samples, gap_s in loaded:
        scaled = samples * gain_to_rms(samples, config.target_rms_dbfs)
        if out is None:
            out = scaled
            continue
        gap_samples = int(round(abs(gap_s) * sample_rate))
        if gap_s < 0:
            out = crossfade_join([out, scaled], gap_samples)
        elif gap_samples > 0:
            out = np.concatenate([out, np.zeros(gap_samples), scaled])
        else:
            out = np.concatenate([out, scaled])
    return out, sample_rate
