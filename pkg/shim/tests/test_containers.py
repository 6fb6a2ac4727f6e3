"""Cross-implementation contract: shim writers vs the main toolkit's readers."""

from __future__ import annotations

import numpy as np
import pytest

from scdkit.formats import read_scde, read_scdp, write_scde, write_scdp

from scdshim.containers import ShimError, write_embeddings, write_posteriors


def test_posteriors_read_back_by_primary_reader(tmp_path):
    rows = np.random.default_rng(1).random((6, 4)).astype(np.float32)
    rows /= rows.sum(axis=1, keepdims=True)
    path = str(tmp_path / "u.scdp")
    write_posteriors(path, "u", 49.7, ["<blank>", "|", "a", "SC"], rows)
    header, back = read_scdp(path)
    assert header["utt_id"] == "u"
    assert header["class_names"] == ["<blank>", "|", "a", "SC"]
    assert np.array_equal(back, rows)


def test_embeddings_read_back_by_primary_reader(tmp_path):
    rows = np.random.default_rng(2).normal(size=(5, 8)).astype(np.float32)
    path = str(tmp_path / "u.scde")
    write_embeddings(path, "u", 49.7, rows)
    header, back = read_scde(path)
    assert header["dim"] == 8
    assert np.array_equal(back, rows)


def test_byte_identical_to_primary_writer(tmp_path):
    """Same logical content -> bit-identical files from both implementations."""
    rows = np.random.default_rng(3).random((4, 3)).astype(np.float32)
    shim_path = str(tmp_path / "shim.scdp")
    main_path = str(tmp_path / "main.scdp")
    write_posteriors(shim_path, "x", 50.0, ["a", "b", "c"], rows)
    write_scdp(main_path, "x", 50.0, ["a", "b", "c"], rows)
    assert open(shim_path, "rb").read() == open(main_path, "rb").read()

    emb = np.random.default_rng(4).normal(size=(4, 2)).astype(np.float32)
    shim_e = str(tmp_path / "shim.scde")
    main_e = str(tmp_path / "main.scde")
    write_embeddings(shim_e, "x", 50.0, emb)
    write_scde(main_e, "x", 50.0, emb)
    assert open(shim_e, "rb").read() == open(main_e, "rb").read()


def test_shim_writer_rejects_bad_shapes(tmp_path):
    with pytest.raises(ShimError):
        write_posteriors(str(tmp_path / "x.scdp"), "x", 50.0, ["a"], np.zeros((2, 3)))
    with pytest.raises(ShimError):
        write_embeddings(str(tmp_path / "x.scde"), "x", 50.0, np.zeros((2, 0)))
