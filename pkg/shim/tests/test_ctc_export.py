from __future__ import annotations

import os

import numpy as np
import pytest

from scdkit.core import EN28_LETTERS, TagScheme, build_alphabet
from scdkit.decoder import PosteriorMatrix, decode_transcript
from scdkit.formats import read_scde, read_scdp

from scdshim.containers import ShimError
from scdshim.ctc_export import export_ctc, resolve_column_order

ALPHABET = build_alphabet(EN28_LETTERS, TagScheme.ANNOUNCE)  # 30 classes
CLASS_MAP = {name: i for i, name in enumerate(ALPHABET.classes)}


def test_export_produces_valid_pairs(tiny_ctc_model_dir, wav_files, tmp_path):
    out = str(tmp_path / "export")
    exported = export_ctc(
        model_ref=tiny_ctc_model_dir,
        wav_list=wav_files,
        class_names=ALPHABET.classes,
        class_map=CLASS_MAP,
        out_dir=out,
    )
    assert len(exported.posterior_paths) == len(wav_files)
    for scdp_path, scde_path, wav_path in zip(
        exported.posterior_paths, exported.embedding_paths, wav_files
    ):
        header, rows = read_scdp(scdp_path)
        eheader, erows = read_scde(scde_path)
        # posterior rows sum to 1 within the toolkit tolerance
        assert np.abs(rows.sum(axis=1) - 1.0).max() < 1e-3
        assert header["n_classes"] == ALPHABET.n_classes
        assert header["class_names"] == list(ALPHABET.classes)
        assert eheader["n_frames"] == header["n_frames"]
        assert eheader["frame_rate_hz"] == header["frame_rate_hz"]
        # stride arithmetic: frames ~ samples / 80 for this checkpoint
        assert header["frame_rate_hz"] == pytest.approx(200.0, rel=0.15)
        # the toolkit's decoder accepts the export end to end
        matrix = PosteriorMatrix(
            utt_id=header["utt_id"],
            frame_rate_hz=header["frame_rate_hz"],
            rows=rows.astype(np.float64),
        )
        decode_transcript(matrix, ALPHABET)


def test_export_round_trip_bit_exact(tiny_ctc_model_dir, wav_files, tmp_path):
    out = str(tmp_path / "export")
    exported = export_ctc(
        model_ref=tiny_ctc_model_dir,
        wav_list=wav_files[:1],
        class_names=ALPHABET.classes,
        class_map=CLASS_MAP,
        out_dir=out,
    )
    from scdkit.formats import write_scdp

    path = exported.posterior_paths[0]
    header, rows = read_scdp(path)
    rewritten = str(tmp_path / "rewrite.scdp")
    write_scdp(rewritten, header["utt_id"], header["frame_rate_hz"],
               header["class_names"], rows)
    assert open(path, "rb").read() == open(rewritten, "rb").read()


def test_missing_class_in_map_is_explicit_error():
    broken = dict(CLASS_MAP)
    del broken["'"]
    with pytest.raises(ShimError, match="'"):
        resolve_column_order(ALPHABET.classes, broken, 32)


def test_map_column_outside_vocab_rejected():
    broken = dict(CLASS_MAP)
    broken["SC"] = 99
    with pytest.raises(ShimError, match="vocab"):
        resolve_column_order(ALPHABET.classes, broken, 32)


def test_duplicate_column_rejected():
    broken = dict(CLASS_MAP)
    broken["SC"] = broken["a"]
    with pytest.raises(ShimError, match="multiple"):
        resolve_column_order(ALPHABET.classes, broken, 32)


def test_sample_rate_mismatch_rejected(tiny_ctc_model_dir, wav_files, tmp_path):
    with pytest.raises(ShimError, match="sample rate"):
        export_ctc(
            model_ref=tiny_ctc_model_dir,
            wav_list=wav_files,
            class_names=ALPHABET.classes,
            class_map=CLASS_MAP,
            out_dir=str(tmp_path / "x"),
            expected_sample_rate=8000,
        )


def test_embedding_layer_flag(tiny_ctc_model_dir, wav_files, tmp_path):
    rows_by_layer = {}
    for layer in (-1, 0):
        out = str(tmp_path / f"layer{layer}")
        exported = export_ctc(
            model_ref=tiny_ctc_model_dir,
            wav_list=wav_files[:1],
            class_names=ALPHABET.classes,
            class_map=CLASS_MAP,
            out_dir=out,
            layer=layer,
        )
        _, rows_by_layer[layer] = read_scde(exported.embedding_paths[0])
    assert not np.array_equal(rows_by_layer[-1], rows_by_layer[0])
