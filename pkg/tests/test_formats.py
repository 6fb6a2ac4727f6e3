from __future__ import annotations

import json
import os
import random
import struct

import numpy as np
import pytest

from scdkit.builder import ConcatSpec
from scdkit.core import TagScheme, TaggedTranscript, Token
from scdkit.errors import FormatError, ValidationError
from scdkit.formats import (
    format_sig6,
    read_manifest,
    read_report,
    read_scde,
    read_scdp,
    read_scores,
    read_specs,
    read_text_hyps,
    read_transcripts,
    read_trials,
    write_manifest,
    write_report,
    write_scde,
    write_scdp,
    write_scores,
    write_specs,
    write_text_hyps,
    write_transcripts,
    write_trials,
)
from scdkit.trials import Trial

from conftest import make_manifest, make_segment


def test_scdp_round_trip_bit_exact(tmp_path):
    rows = np.array([[0.1, 0.2, 0.7], [0.5, 0.25, 0.25]], dtype=np.float32)
    path = str(tmp_path / "m.scdp")
    write_scdp(path, "utt1", 50.0, ["<blank>", "|", "a"], rows)
    header, back = read_scdp(path)
    assert header["utt_id"] == "utt1"
    assert header["n_frames"] == 2 and header["n_classes"] == 3
    assert back.dtype == np.float32
    assert np.array_equal(back, rows)
    # writing the read-back data reproduces the file byte for byte
    path2 = str(tmp_path / "m2.scdp")
    write_scdp(path2, header["utt_id"], header["frame_rate_hz"], header["class_names"], back)
    assert open(path, "rb").read() == open(path2, "rb").read()


def test_scdp_bad_magic(tmp_path):
    path = str(tmp_path / "m.scdp")
    write_scdp(path, "u", 50.0, ["a", "b"], np.zeros((1, 2), dtype=np.float32))
    blob = bytearray(open(path, "rb").read())
    blob[:4] = b"SCDQ"
    open(path, "wb").write(bytes(blob))
    with pytest.raises(FormatError, match="magic"):
        read_scdp(path)


def test_scdp_truncated_payload_reports_counts(tmp_path):
    path = str(tmp_path / "m.scdp")
    write_scdp(path, "u", 50.0, ["a", "b"], np.zeros((10, 2), dtype=np.float32))
    blob = open(path, "rb").read()
    open(path, "wb").write(blob[: len(blob) - 8])  # drop one row
    with pytest.raises(FormatError) as exc:
        read_scdp(path)
    assert "80" in str(exc.value) and "72" in str(exc.value)


def test_scde_round_trip_and_cross_magic(tmp_path):
    rows = np.arange(32, dtype=np.float32).reshape(4, 8)
    path = str(tmp_path / "e.scde")
    write_scde(path, "utt9", 50.0, rows)
    header, back = read_scde(path)
    assert header["dim"] == 8
    assert np.array_equal(back, rows)
    with pytest.raises(FormatError, match="magic"):
        read_scdp(path)


def test_scde_zero_dim_rejected_at_write(tmp_path):
    with pytest.raises(ValidationError):
        write_scde(str(tmp_path / "e.scde"), "u", 50.0, np.zeros((3, 0), dtype=np.float32))


def test_scdp_version_mismatch(tmp_path):
    path = str(tmp_path / "m.scdp")
    write_scdp(path, "u", 50.0, ["a"], np.zeros((1, 1), dtype=np.float32))
    blob = bytearray(open(path, "rb").read())
    blob[4:8] = struct.pack("<I", 7)
    open(path, "wb").write(bytes(blob))
    with pytest.raises(FormatError, match="version"):
        read_scdp(path)


def test_container_unknown_header_fields_ignored(tmp_path):
    path = str(tmp_path / "m.scdp")
    write_scdp(path, "u", 50.0, ["a"], np.zeros((1, 1), dtype=np.float32))
    blob = open(path, "rb").read()
    header_len = struct.unpack("<I", blob[8:12])[0]
    header = json.loads(blob[12:12 + header_len])
    header["future_extension"] = {"nested": True}
    new_header = json.dumps(header, sort_keys=True).encode()
    patched = blob[:8] + struct.pack("<I", len(new_header)) + new_header + blob[12 + header_len:]
    open(path, "wb").write(patched)
    _, rows = read_scdp(path)
    assert rows.shape == (1, 1)


def test_manifest_round_trip(tmp_path):
    manifest = make_manifest(
        [make_segment("s1", "A", text="hello"), make_segment("s2", "B", text="good day")]
    )
    path = str(tmp_path / "m.jsonl")
    write_manifest(path, manifest)
    back = read_manifest(path, split="train")
    assert back.segments == manifest.segments


def test_transcripts_round_trip(tmp_path):
    t = TaggedTranscript(
        (
            Token("tag", "SC", frame_span=(0, 2)),
            Token("word", "hi", frame_span=(3, 8)),
            Token("tag", "NL", tag_language="nl", source="NL"),
        )
    )
    path = str(tmp_path / "t.jsonl")
    write_transcripts(path, [("utt1", t)])
    back = read_transcripts(path)
    assert back["utt1"] == t


def test_specs_round_trip(tmp_path):
    spec = ConcatSpec(
        utt_id="sc-000000",
        parts=(("s1", 0.0), ("s2", -0.02)),
        tag_scheme=TagScheme.ANNOUNCE,
        reference=TaggedTranscript((Token("tag", "SC"), Token("word", "hi"))),
        total_duration_s=9.98,
    )
    path = str(tmp_path / "specs.jsonl")
    write_specs(path, [spec])
    back = read_specs(path)
    assert back == [spec]


def test_spec_writer_is_deterministic(tmp_path):
    spec = ConcatSpec(
        utt_id="x",
        parts=(("s1", 0.0),),
        tag_scheme=TagScheme.SEPARATOR,
        reference=TaggedTranscript((Token("word", "hi"),)),
        total_duration_s=1.25,
    )
    p1, p2 = str(tmp_path / "a.jsonl"), str(tmp_path / "b.jsonl")
    write_specs(p1, [spec])
    write_specs(p2, [spec])
    assert open(p1, "rb").read() == open(p2, "rb").read()


def test_malformed_jsonl_names_line(tmp_path):
    path = str(tmp_path / "t.jsonl")
    with open(path, "w") as f:
        f.write('{"utt_id": "u1", "tokens": []}\n')
        f.write("not json\n")
    with pytest.raises(FormatError, match=":2"):
        read_transcripts(path)


def test_trials_and_scores_round_trip(tmp_path):
    trials = [Trial("a", "b", "nontarget"), Trial("a", "c", "target")]
    tpath = str(tmp_path / "trials.tsv")
    write_trials(tpath, trials)
    assert read_trials(tpath) == [("a", "b", "nontarget"), ("a", "c", "target")]

    spath = str(tmp_path / "scores.tsv")
    write_scores(spath, [("a", "b", "nontarget", 0.123456789)])
    assert read_scores(spath) == [("a", "b", "nontarget", 0.123456789)]


def test_trials_unknown_label_names_line(tmp_path):
    path = str(tmp_path / "trials.tsv")
    with open(path, "w") as f:
        f.write("a\tb\ttarget\n")
        f.write("a\tc\tmaybe\n")
    with pytest.raises(FormatError, match=":2"):
        read_trials(path)


def test_text_hyps_round_trip(tmp_path):
    path = str(tmp_path / "hyp.txt")
    write_text_hyps(path, [("u1", "DE guten tag SC hallo"), ("u2", "")])
    # empty-text lines survive as empty strings
    assert read_text_hyps(path) == [("u1", "DE guten tag SC hallo"), ("u2", "")]


def test_report_formatting_rule(tmp_path):
    path = str(tmp_path / "report.tsv")
    write_report(path, {"p_fp": 1.76, "n": 42, "ler": None})
    text = open(path).read()
    assert "p_fp\t1.76000" in text
    assert "n\t42" in text
    assert "ler\tabsent" in text
    # stable sorted key order
    assert text.splitlines() == sorted(text.splitlines())
    back = read_report(path)
    assert back == {"p_fp": 1.76, "n": 42, "ler": None}


def test_format_sig6_keeps_trailing_zeros():
    assert format_sig6(1.76) == "1.76000"
    assert format_sig6(12.3456789) == "12.3457"
    assert format_sig6(0.0) == "0.00000"


def test_fuzz_truncations_always_structured_errors(tmp_path):
    rng = random.Random(7)
    path = str(tmp_path / "m.scdp")
    write_scdp(path, "utt", 50.0, ["a", "b", "c"], np.random.rand(5, 3).astype(np.float32))
    blob = open(path, "rb").read()
    target = str(tmp_path / "cut.scdp")
    for _ in range(200):
        cut = rng.randrange(0, len(blob))
        open(target, "wb").write(blob[:cut])
        with pytest.raises(FormatError):
            read_scdp(target)


def test_fuzz_random_flips_never_crash(tmp_path):
    rng = random.Random(8)
    path = str(tmp_path / "e.scde")
    write_scde(path, "utt", 50.0, np.random.rand(4, 6).astype(np.float32))
    blob = bytearray(open(path, "rb").read())
    target = str(tmp_path / "flip.scde")
    for _ in range(300):
        mutated = bytearray(blob)
        for _ in range(rng.randint(1, 4)):
            mutated[rng.randrange(len(mutated))] = rng.randrange(256)
        open(target, "wb").write(bytes(mutated))
        try:
            read_scde(target)
        except FormatError:
            pass
