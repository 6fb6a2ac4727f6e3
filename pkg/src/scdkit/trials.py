"""Speaker-verification trials: full list, proxy selection, cosine scoring, EER."""

from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .core import Manifest
from .errors import ValidationError


@dataclass(frozen=True)
class Trial:
    enroll: str
    test: str
    label: str  # "target" | "nontarget"


@dataclass(frozen=True)
class TrialList:
    trials: tuple[Trial, ...]
    n_full: int


def build_full_trials(manifest: Manifest) -> TrialList:
    """All different-speaker pairs plus same-speaker pairs across sessions.

    Pairs are unordered; segments are keyed by id in manifest order.
    """
    segs = manifest.segments
    trials = []
    for i in range(len(segs)):
        a = segs[i]
        for j in range(i + 1, len(segs)):
            b = segs[j]
            if a.speaker_id != b.speaker_id:
                trials.append(Trial(a.id, b.id, "nontarget"))
            elif a.session_id != b.session_id:
                trials.append(Trial(a.id, b.id, "target"))
    return TrialList(trials=tuple(trials), n_full=len(trials))


def trial_count_formula(manifest: Manifest) -> int:
    """Closed form: sum_{i<j} n_i*n_j over speakers + cross-session same-speaker pairs."""
    by_speaker: dict[str, dict[str, int]] = {}
    for s in manifest.segments:
        by_speaker.setdefault(s.speaker_id, {}).setdefault(s.session_id, 0)
        by_speaker[s.speaker_id][s.session_id] += 1
    sizes = [sum(sessions.values()) for sessions in by_speaker.values()]
    total = sum(sizes)
    diff_speaker = (total * total - sum(n * n for n in sizes)) // 2
    same_speaker = 0
    for sessions in by_speaker.values():
        counts = list(sessions.values())
        n = sum(counts)
        same_speaker += (n * n - sum(c * c for c in counts)) // 2
    return diff_speaker + same_speaker


@dataclass(frozen=True)
class UttDecode:
    """Per-utterance decode summary feeding proxy-trial selection.

    segment_ids are the reference segments announced by each reference change
    tag, in tag order; embeddings are the extracted vectors for each detected
    change, in detection order.
    """

    utt_id: str
    n_sc_hyp: int
    n_sc_ref: int
    segment_ids: tuple[str, ...]
    embeddings: tuple[np.ndarray, ...]


def proxy_embedding_map(decodes: Sequence[UttDecode]) -> dict[str, np.ndarray]:
    """segment id -> embedding, over utterances whose SC counts match.

    The k-th detected change maps to the k-th reference segment. A considered
    utterance with fewer embeddings than detections is a decoder-contract
    violation and raises.
    """
    out: dict[str, np.ndarray] = {}
    for d in decodes:
        if d.n_sc_hyp != d.n_sc_ref:
            continue
        if len(d.segment_ids) != d.n_sc_ref:
            raise ValidationError(
                f"{d.utt_id}: {len(d.segment_ids)} announced segments for "
                f"{d.n_sc_ref} reference tags"
            )
        if len(d.embeddings) != d.n_sc_hyp:
            raise ValidationError(
                f"{d.utt_id}: embedding missing (have {len(d.embeddings)}, "
                f"need {d.n_sc_hyp})"
            )
        for seg_id, emb in zip(d.segment_ids, d.embeddings):
            out[seg_id] = emb
    return out


def select_proxy_trials(
    full: TrialList,
    decodes: Sequence[UttDecode],
) -> tuple[TrialList, float]:
    """Restrict the full list to trials whose both sides have embeddings.

    Only utterances with matching hypothesis/reference SC counts contribute.
    Returns the kept sublist and the kept fraction of the full list in percent.
    """
    have = proxy_embedding_map(decodes)
    kept = tuple(t for t in full.trials if t.enroll in have and t.test in have)
    fraction = 100.0 * len(kept) / full.n_full if full.n_full else 0.0
    return TrialList(trials=kept, n_full=full.n_full), fraction


def cosine_score(e1: np.ndarray, e2: np.ndarray) -> float:
    e1 = np.asarray(e1, dtype=np.float64)
    e2 = np.asarray(e2, dtype=np.float64)
    if e1.shape != e2.shape:
        raise ValidationError(f"dim mismatch: {e1.shape} vs {e2.shape}")
    n1 = float(np.linalg.norm(e1))
    n2 = float(np.linalg.norm(e2))
    if n1 == 0.0 or n2 == 0.0:
        raise ValidationError("cosine_score: zero-norm vector")
    return float(np.dot(e1, e2) / (n1 * n2))


def score_trials(
    trials: TrialList | Sequence[Trial],
    embeddings: Mapping[str, np.ndarray],
) -> list[tuple[float, bool]]:
    items = trials.trials if isinstance(trials, TrialList) else trials
    return [
        (cosine_score(embeddings[t.enroll], embeddings[t.test]), t.label == "target")
        for t in items
    ]


def _operating_points(scores: Sequence[tuple[float, bool]]):
    targets = sorted(s for s, is_target in scores if is_target)
    nontargets = sorted(s for s, is_target in scores if not is_target)
    if not targets or not nontargets:
        raise ValidationError("eer: need at least one target and one nontarget score")
    thresholds = sorted(set(targets) | set(nontargets))
    p, n = len(targets), len(nontargets)
    # At threshold t: FNR = fraction of targets < t, FPR = fraction of nontargets >= t.
    points = [(0.0, 1.0)]
    for t in thresholds:
        fnr = bisect_left(targets, t) / p
        fpr = (n - bisect_left(nontargets, t)) / n
        points.append((fnr, fpr))
    points.append((1.0, 0.0))
    return points


def eer(scores: Sequence[tuple[float, bool]]) -> float:
    """Equal error rate in percent, linearly interpolated at the ROC crossing.

    The sweep is over the score set itself, so the result depends only on the
    ordering of scores (invariant under strictly increasing transforms).
    """
    points = _operating_points(scores)
    for k in range(len(points)):
        fnr, fpr = points[k]
        diff = fnr - fpr
        if diff == 0.0:
            return 100.0 * fnr
        if diff > 0.0:
            f1, p1 = points[k - 1]
            f2, p2 = points[k]
            denom = (f2 - f1) - (p2 - p1)
            alpha = (p1 - f1) / denom
            return 100.0 * (f1 + alpha * (f2 - f1))
    raise AssertionError("unreachable: FNR-FPR must cross")


def eer_threshold(scores: Sequence[tuple[float, bool]]) -> float:
    """A threshold near the EER operating point (for plots only)."""
    values = sorted({s for s, _ in scores})
    best_t, best_gap = values[0], math.inf
    targets = [s for s, it in scores if it]
    nontargets = [s for s, it in scores if not it]
    for t in values:
        fnr = sum(1 for s in targets if s < t) / len(targets)
        fpr = sum(1 for s in nontargets if s >= t) / len(nontargets)
        gap = abs(fnr - fpr)
        if gap < best_gap:
            best_t, best_gap = t, gap
    return best_t
