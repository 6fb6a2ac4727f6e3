"""Corpus-level aggregation of per-utterance metric rows into one report."""

from __future__ import annotations

import os

from .errors import ValidationError
from .formats import write_report
from .metrics import LanguageReport, ScdCounts

ASR_COLUMNS = ("utt_id", "n_ref_words", "n_substitutions", "n_deletions", "n_insertions")
SCD_COLUMNS = ("utt_id", "n_ref_sc_noninitial", "n_nosc_transitions", "n_fn", "n_fp")
LANGUAGE_COLUMNS = ("utt_id", "n_segments", "n_language_errors")


def aggregate_asr(rows) -> dict:
    n = s = d = i = 0
    for row in rows:
        n += int(row[1])
        s += int(row[2])
        d += int(row[3])
        i += int(row[4])
    wer = 100.0 * (s + d + i) / n if n else None
    return {
        "asr.n_ref_words": n,
        "asr.n_substitutions": s,
        "asr.n_deletions": d,
        "asr.n_insertions": i,
        "wer": wer,
    }


def aggregate_scd(rows) -> ScdCounts:
    totals = [0, 0, 0, 0]
    for row in rows:
        for k in range(4):
            totals[k] += int(row[k + 1])
    return ScdCounts(*totals)


def aggregate_language(rows) -> LanguageReport:
    segments = errors = 0
    for row in rows:
        segments += int(row[1])
        errors += int(row[2])
    return LanguageReport(n_segments=segments, n_language_errors=errors)


def corpus_report(
    asr_rows=None,
    scd_rows=None,
    language_rows=None,
    scores=None,
    density=None,
    trial_fraction: float | None = None,
) -> dict:
    """Merge whatever stage outputs are available into one flat report dict."""
    from .trials import eer as compute_eer

    report: dict = {}
    if asr_rows is not None:
        report.update(aggregate_asr(asr_rows))
    if scd_rows is not None:
        counts = aggregate_scd(scd_rows)
        report.update(
            {
                "scd.n_ref_sc_noninitial": counts.n_ref_sc_noninitial,
                "scd.n_nosc_transitions": counts.n_nosc_transitions,
                "scd.n_fn": counts.n_fn,
                "scd.n_fp": counts.n_fp,
                "p_fn": counts.p_fn,
                "p_fp": counts.p_fp,
            }
        )
    if language_rows is not None:
        lang = aggregate_language(language_rows)
        report.update(
            {
                "language.n_segments": lang.n_segments,
                "language.n_errors": lang.n_language_errors,
                "ler": lang.ler,
            }
        )
    if scores is not None:
        report["eer"] = compute_eer(scores)
        report["trials.n_scored"] = len(scores)
    if trial_fraction is not None:
        report["trial_fraction"] = trial_fraction
    if density is not None:
        report.update(
            {
                "density.seconds_per_change": density.seconds_per_change,
                "density.changes_per_spec_mean": density.changes_per_spec_mean,
                "density.total_audio_s": density.total_audio_s,
                "density.n_changes": density.n_changes,
            }
        )
        # One false positive every N seconds, the report-side companion of p_fp.
        if scd_rows is not None:
            counts = aggregate_scd(scd_rows)
            report["seconds_per_false_positive"] = (
                density.total_audio_s / counts.n_fp if counts.n_fp else None
            )
    if not report:
        raise ValidationError("report: no inputs")
    return report


def write_report_with_figures(
    out_dir: str,
    report: dict,
    scores=None,
    specs=None,
    figures: bool = True,
) -> list[str]:
    """Write report.tsv plus figures; returns the written paths."""
    os.makedirs(out_dir, exist_ok=True)
    report_path = os.path.join(out_dir, "report.tsv")
    write_report(report_path, report)
    written = [report_path]
    if not figures:
        return written
    from . import figures as figs

    if scores:
        written.append(
            figs.plot_score_distributions(scores, os.path.join(out_dir, "scores.png"))
        )
        written.append(figs.plot_det_curve(scores, os.path.join(out_dir, "det.png")))
    if specs:
        written.append(
            figs.plot_change_density(specs, os.path.join(out_dir, "density.png"))
        )
    rates = {
        label: report[key]
        for label, key in (("WER", "wer"), ("p_fp", "p_fp"), ("p_fn", "p_fn"),
                           ("LER", "ler"), ("EER", "eer"))
        if report.get(key) is not None
    }
    if rates:
        written.append(figs.plot_error_rates(rates, os.path.join(out_dir, "rates.png")))
    return written
