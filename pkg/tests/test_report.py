from __future__ import annotations

import os

import pytest

from scdkit.builder import ConcatSpec
from scdkit.core import TagScheme, TaggedTranscript, Token
from scdkit.errors import ValidationError
from scdkit.formats import read_report
from scdkit.report import aggregate_asr, aggregate_scd, corpus_report, write_report_with_figures


def test_aggregate_asr_micro_average():
    rows = [("u1", 10, 1, 0, 0), ("u2", 10, 0, 1, 1)]
    agg = aggregate_asr(rows)
    assert agg["asr.n_ref_words"] == 20
    assert agg["wer"] == pytest.approx(15.0)


def test_aggregate_scd_rates_computed_once():
    rows = [("u1", 2, 5, 1, 0), ("u2", 0, 5, 0, 1)]
    counts = aggregate_scd(rows)
    assert counts.p_fn == pytest.approx(50.0)
    assert counts.p_fp == pytest.approx(10.0)


def test_corpus_report_requires_inputs():
    with pytest.raises(ValidationError):
        corpus_report()


def test_corpus_report_seconds_per_false_positive():
    from scdkit.builder import DensityReport

    scd_rows = [("u1", 2, 5, 0, 2)]
    density = DensityReport(
        seconds_per_change=2.0, changes_per_spec_mean=2.0, total_audio_s=100.0, n_changes=50
    )
    rep = corpus_report(scd_rows=scd_rows, density=density)
    assert rep["seconds_per_false_positive"] == pytest.approx(50.0)


def test_write_report_with_figures(tmp_path):
    scores = [(0.9, True), (0.8, True), (0.3, False), (0.2, False), (0.85, False)]
    specs = [
        ConcatSpec(
            utt_id=f"u{i}",
            parts=(("s1", 0.0), ("s2", -0.02)),
            tag_scheme=TagScheme.ANNOUNCE,
            reference=TaggedTranscript(
                (Token("tag", "SC"), Token("word", "a"), Token("tag", "SC"), Token("word", "b"))
            ),
            total_duration_s=10.0,
        )
        for i in range(4)
    ]
    rep = corpus_report(
        asr_rows=[("u1", 4, 0, 0, 0)],
        scd_rows=[("u1", 1, 2, 0, 0)],
        scores=scores,
        trial_fraction=75.0,
    )
    out = str(tmp_path / "report")
    written = write_report_with_figures(out, rep, scores=scores, specs=specs)
    report_path = os.path.join(out, "report.tsv")
    assert report_path in written
    back = read_report(report_path)
    assert back["wer"] == 0.0
    assert back["trial_fraction"] == 75.0
    assert back["eer"] is not None
    pngs = [p for p in written if p.endswith(".png")]
    assert len(pngs) == 4
    for p in pngs:
        assert os.path.getsize(p) > 1000
