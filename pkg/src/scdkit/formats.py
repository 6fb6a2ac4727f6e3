"""Readers and writers for every on-disk format the pipeline stages share.

Binary containers:
  SCDP (frame posteriors): magic "SCDP", u32 LE version (=1), u32 LE header
        byte length, UTF-8 JSON header, then n_frames*n_classes f32 LE values,
        frame-major.
  SCDE (frame embeddings): same layout, magic "SCDE", header carries `dim`
        instead of n_classes/class_names.

Line formats are UTF-8 JSONL (manifests, concat specs, transcripts) or TSV
(trials, scores, per-utterance counts, corpus report). Writers are
deterministic: sorted keys, fixed float formatting in reports. All writes go
through a temp file + rename.
"""

from __future__ import annotations

import json
import math
import os
import struct
import tempfile
from typing import Iterable, Iterator, Sequence

import numpy as np

from .core import Manifest, Segment, TagScheme, TaggedTranscript, Token, validate_manifest
from .errors import FormatError, ValidationError

SCDP_MAGIC = b"SCDP"
SCDE_MAGIC = b"SCDE"
CONTAINER_VERSION = 1


def atomic_write(path: str, data: bytes) -> None:
    """Write bytes to path via a temp file in the same directory + rename."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path: str, text: str) -> None:
    atomic_write(path, text.encode("utf-8"))


# ---------------------------------------------------------------------------
# SCDP / SCDE binary containers
# ---------------------------------------------------------------------------


def _write_container(path: str, magic: bytes, header: dict, rows: np.ndarray) -> None:
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    payload = np.ascontiguousarray(rows, dtype="<f4").tobytes()
    blob = magic + struct.pack("<II", CONTAINER_VERSION, len(header_bytes)) + header_bytes + payload
    atomic_write(path, blob)


def _read_container(path: str, magic: bytes) -> tuple[dict, bytes]:
    try:
        with open(path, "rb") as f:
            blob = f.read()
    except OSError as e:
        raise FormatError(f"{path}: cannot read: {e}") from e
    if len(blob) < 12:
        raise FormatError(f"{path}: truncated before header (got {len(blob)} bytes, need >= 12)")
    if blob[:4] != magic:
        raise FormatError(f"{path}: bad magic {blob[:4]!r}, expected {magic!r}")
    version, header_len = struct.unpack("<II", blob[4:12])
    if version != CONTAINER_VERSION:
        raise FormatError(f"{path}: unsupported version {version}, expected {CONTAINER_VERSION}")
    if len(blob) < 12 + header_len:
        raise FormatError(
            f"{path}: truncated header (declared {header_len} bytes, "
            f"only {len(blob) - 12} present)"
        )
    try:
        header = json.loads(blob[12:12 + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise FormatError(f"{path}: unreadable header: {e}") from e
    if not isinstance(header, dict):
        raise FormatError(f"{path}: header is not an object")
    return header, blob[12 + header_len:]


def _require_header_fields(path: str, header: dict, fields: Sequence[str]) -> None:
    missing = [f for f in fields if f not in header]
    if missing:
        raise FormatError(f"{path}: header missing fields {missing}")


def _header_count(path: str, header: dict, name: str) -> int:
    value = header[name]
    if not isinstance(value, int) or isinstance(value, bool) or value < 0:
        raise FormatError(f"{path}: header field {name} must be a non-negative integer")
    return value


def _decode_payload(path: str, payload: bytes, n_frames: int, n_cols: int) -> np.ndarray:
    expected = n_frames * n_cols * 4
    if len(payload) != expected:
        raise FormatError(
            f"{path}: payload size mismatch (expected {expected} bytes, found {len(payload)})"
        )
    return np.frombuffer(payload, dtype="<f4").reshape(n_frames, n_cols).copy()


def write_scdp(
    path: str,
    utt_id: str,
    frame_rate_hz: float,
    class_names: Sequence[str],
    rows: np.ndarray,
) -> None:
    rows = np.asarray(rows)
    if rows.ndim != 2:
        raise ValidationError("posterior rows must be 2-D (frames x classes)")
    if rows.shape[1] != len(class_names):
        raise ValidationError(
            f"rows have {rows.shape[1]} columns but {len(class_names)} class names given"
        )
    if len(set(class_names)) != len(class_names):
        raise ValidationError("class names must be unique")
    header = {
        "utt_id": utt_id,
        "frame_rate_hz": float(frame_rate_hz),
        "n_frames": int(rows.shape[0]),
        "n_classes": int(rows.shape[1]),
        "class_names": list(class_names),
        "dtype": "f32",
    }
    _write_container(path, SCDP_MAGIC, header, rows)


def read_scdp(path: str) -> tuple[dict, np.ndarray]:
    header, payload = _read_container(path, SCDP_MAGIC)
    _require_header_fields(
        path, header, ("utt_id", "frame_rate_hz", "n_frames", "n_classes", "class_names", "dtype")
    )
    if header["dtype"] != "f32":
        raise FormatError(f"{path}: unsupported dtype {header['dtype']!r}")
    n_frames = _header_count(path, header, "n_frames")
    n_classes = _header_count(path, header, "n_classes")
    names = header["class_names"]
    if not isinstance(names, list) or len(names) != n_classes:
        raise FormatError(f"{path}: class_names length does not match n_classes")
    if len(set(names)) != len(names):
        raise FormatError(f"{path}: class_names not unique")
    rows = _decode_payload(path, payload, n_frames, n_classes)
    return header, rows


def write_scde(
    path: str,
    utt_id: str,
    frame_rate_hz: float,
    rows: np.ndarray,
) -> None:
    rows = np.asarray(rows)
    if rows.ndim != 2:
        raise ValidationError("embedding rows must be 2-D (frames x dim)")
    if rows.shape[1] < 1:
        raise ValidationError("embedding dim must be >= 1")
    header = {
        "utt_id": utt_id,
        "frame_rate_hz": float(frame_rate_hz),
        "n_frames": int(rows.shape[0]),
        "dim": int(rows.shape[1]),
        "dtype": "f32",
    }
    _write_container(path, SCDE_MAGIC, header, rows)


def read_scde(path: str) -> tuple[dict, np.ndarray]:
    header, payload = _read_container(path, SCDE_MAGIC)
    _require_header_fields(path, header, ("utt_id", "frame_rate_hz", "n_frames", "dim", "dtype"))
    if header["dtype"] != "f32":
        raise FormatError(f"{path}: unsupported dtype {header['dtype']!r}")
    n_frames = _header_count(path, header, "n_frames")
    dim = _header_count(path, header, "dim")
    if dim < 1:
        raise FormatError(f"{path}: dim must be >= 1")
    rows = _decode_payload(path, payload, n_frames, dim)
    return header, rows


# ---------------------------------------------------------------------------
# JSONL: manifests, concat specs, transcripts
# ---------------------------------------------------------------------------


def _iter_jsonl(path: str) -> Iterator[tuple[int, dict]]:
    try:
        with open(path, "r", encoding="utf-8") as f:
            for lineno, line in enumerate(f, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    rec = json.loads(line)
                except json.JSONDecodeError as e:
                    raise FormatError(f"{path}:{lineno}: malformed JSON: {e}") from e
                if not isinstance(rec, dict):
                    raise FormatError(f"{path}:{lineno}: record is not an object")
                yield lineno, rec
    except OSError as e:
        raise FormatError(f"{path}: cannot read: {e}") from e


def _dump_jsonl(records: Iterable[dict]) -> str:
    return "".join(json.dumps(r, sort_keys=True, ensure_ascii=False) + "\n" for r in records)


def segment_to_dict(seg: Segment) -> dict:
    return {
        "id": seg.id,
        "speaker_id": seg.speaker_id,
        "session_id": seg.session_id,
        "language": seg.language,
        "variant": seg.variant,
        "audio_path": seg.audio_path,
        "start_s": seg.start_s,
        "duration_s": seg.duration_s,
        "text": seg.text,
    }


def write_manifest(path: str, manifest: Manifest) -> None:
    atomic_write_text(path, _dump_jsonl(segment_to_dict(s) for s in manifest.segments))


def read_manifest(path: str, split: str = "train", alphabet=None) -> Manifest:
    records = [rec for _, rec in _iter_jsonl(path)]
    return validate_manifest(records, split=split, alphabet=alphabet)


def token_to_dict(t: Token) -> dict:
    d: dict = {"kind": t.kind, "value": t.value}
    if t.tag_language is not None:
        d["tag_language"] = t.tag_language
    if t.frame_span is not None:
        d["frame_span"] = [t.frame_span[0], t.frame_span[1]]
    if t.source is not None:
        d["source"] = t.source
    return d


def token_from_dict(d: dict, where: str) -> Token:
    try:
        span = d.get("frame_span")
        return Token(
            kind=d["kind"],
            value=d["value"],
            tag_language=d.get("tag_language"),
            frame_span=(int(span[0]), int(span[1])) if span is not None else None,
            source=d.get("source"),
        )
    except (KeyError, TypeError, IndexError, ValidationError) as e:
        raise FormatError(f"{where}: bad token record {d!r}: {e}") from e


def write_transcripts(path: str, transcripts: Iterable[tuple[str, TaggedTranscript]]) -> None:
    records = (
        {"utt_id": utt_id, "tokens": [token_to_dict(t) for t in tr.tokens]}
        for utt_id, tr in transcripts
    )
    atomic_write_text(path, _dump_jsonl(records))


def read_transcripts(path: str) -> dict[str, TaggedTranscript]:
    out: dict[str, TaggedTranscript] = {}
    for lineno, rec in _iter_jsonl(path):
        where = f"{path}:{lineno}"
        if "utt_id" not in rec or "tokens" not in rec:
            raise FormatError(f"{where}: transcript record needs utt_id and tokens")
        if rec["utt_id"] in out:
            raise FormatError(f"{where}: duplicate utt_id {rec['utt_id']!r}")
        tokens = tuple(token_from_dict(t, where) for t in rec["tokens"])
        out[rec["utt_id"]] = TaggedTranscript(tokens)
    return out


def spec_to_dict(spec) -> dict:
    return {
        "utt_id": spec.utt_id,
        "parts": [[segment_id, gap_s] for segment_id, gap_s in spec.parts],
        "tag_scheme": spec.tag_scheme.value,
        "reference": [token_to_dict(t) for t in spec.reference.tokens],
        "total_duration_s": spec.total_duration_s,
    }


def write_specs(path: str, specs: Iterable) -> None:
    atomic_write_text(path, _dump_jsonl(spec_to_dict(s) for s in specs))


def read_specs(path: str) -> list:
    from .builder import ConcatSpec  # local import: builder depends on formats for audio

    specs = []
    seen: set[str] = set()
    for lineno, rec in _iter_jsonl(path):
        where = f"{path}:{lineno}"
        try:
            parts = tuple((str(p[0]), float(p[1])) for p in rec["parts"])
            spec = ConcatSpec(
                utt_id=str(rec["utt_id"]),
                parts=parts,
                tag_scheme=TagScheme(rec["tag_scheme"]),
                reference=TaggedTranscript(
                    tuple(token_from_dict(t, where) for t in rec["reference"])
                ),
                total_duration_s=float(rec["total_duration_s"]),
            )
        except (KeyError, TypeError, ValueError, IndexError) as e:
            raise FormatError(f"{where}: bad concat-spec record: {e}") from e
        if spec.utt_id in seen:
            raise FormatError(f"{where}: duplicate utt_id {spec.utt_id!r}")
        seen.add(spec.utt_id)
        specs.append(spec)
    return specs


# ---------------------------------------------------------------------------
# Plain-text hypothesis files (utt_id <TAB> text)
# ---------------------------------------------------------------------------


def write_text_hyps(path: str, lines: Iterable[tuple[str, str]]) -> None:
    atomic_write_text(path, "".join(f"{utt_id}\t{text}\n" for utt_id, text in lines))


def read_text_hyps(path: str) -> list[tuple[str, str]]:
    out: list[tuple[str, str]] = []
    try:
        with open(path, "r", encoding="utf-8") as f:
            for lineno, line in enumerate(f, start=1):
                line = line.rstrip("\n")
                if not line:
                    continue
                if "\t" not in line:
                    raise FormatError(f"{path}:{lineno}: expected 'utt_id<TAB>text'")
                utt_id, text = line.split("\t", 1)
                out.append((utt_id, text))
    except OSError as e:
        raise FormatError(f"{path}: cannot read: {e}") from e
    return out


# ---------------------------------------------------------------------------
# TSV: trials, scores, per-utterance counts, corpus report
# ---------------------------------------------------------------------------

_LABELS = ("target", "nontarget")


def write_trials(path: str, trials: Iterable) -> None:
    atomic_write_text(
        path, "".join(f"{t.enroll}\t{t.test}\t{t.label}\n" for t in trials)
    )


def read_trials(path: str) -> list[tuple[str, str, str]]:
    out = []
    for lineno, fields in _iter_tsv(path, 3):
        enroll, test, label = fields
        if label not in _LABELS:
            raise FormatError(f"{path}:{lineno}: unknown label token {label!r}")
        out.append((enroll, test, label))
    return out


def write_scores(path: str, rows: Iterable[tuple[str, str, str, float]]) -> None:
    atomic_write_text(
        path,
        "".join(f"{e}\t{t}\t{label}\t{score!r}\n" for e, t, label, score in rows),
    )


def read_scores(path: str) -> list[tuple[str, str, str, float]]:
    out = []
    for lineno, fields in _iter_tsv(path, 4):
        enroll, test, label, score = fields
        if label not in _LABELS:
            raise FormatError(f"{path}:{lineno}: unknown label token {label!r}")
        try:
            value = float(score)
        except ValueError:
            raise FormatError(f"{path}:{lineno}: bad score {score!r}") from None
        out.append((enroll, test, label, value))
    return out


def _iter_tsv(path: str, n_fields: int) -> Iterator[tuple[int, list[str]]]:
    try:
        with open(path, "r", encoding="utf-8") as f:
            for lineno, line in enumerate(f, start=1):
                line = line.rstrip("\n")
                if not line:
                    continue
                fields = line.split("\t")
                if len(fields) != n_fields:
                    raise FormatError(
                        f"{path}:{lineno}: expected {n_fields} tab-separated fields, "
                        f"got {len(fields)}"
                    )
                yield lineno, fields
    except OSError as e:
        raise FormatError(f"{path}: cannot read: {e}") from e


def write_count_table(path: str, columns: Sequence[str], rows: Iterable[Sequence]) -> None:
    lines = ["\t".join(columns) + "\n"]
    for row in rows:
        if len(row) != len(columns):
            raise ValidationError("row width does not match column count")
        lines.append("\t".join(_cell(v) for v in row) + "\n")
    atomic_write_text(path, "".join(lines))


def read_count_table(path: str) -> tuple[list[str], list[list[str]]]:
    header: list[str] | None = None
    rows: list[list[str]] = []
    try:
        with open(path, "r", encoding="utf-8") as f:
            for lineno, line in enumerate(f, start=1):
                line = line.rstrip("\n")
                if not line:
                    continue
                fields = line.split("\t")
                if header is None:
                    header = fields
                    continue
                if len(fields) != len(header):
                    raise FormatError(f"{path}:{lineno}: ragged row")
                rows.append(fields)
    except OSError as e:
        raise FormatError(f"{path}: cannot read: {e}") from e
    if header is None:
        raise FormatError(f"{path}: empty table")
    return header, rows


def _cell(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def format_sig6(x: float) -> str:
    """Positional formatting to exactly 6 significant digits, trailing zeros kept.

    1.76 -> "1.76000", 12.3456789 -> "12.3457".
    """
    if not math.isfinite(x):
        raise ValidationError(f"cannot format non-finite value {x}")
    return np.format_float_positional(
        float(x), precision=6, unique=False, fractional=False, trim="k"
    )


def write_report(path: str, report: dict) -> None:
    """Corpus report: 'key<TAB>value' lines, keys sorted, floats to 6 sig digits."""
    lines = []
    for key in sorted(report):
        value = report[key]
        if value is None:
            rendered = "absent"
        elif isinstance(value, bool):
            rendered = str(value).lower()
        elif isinstance(value, float):
            rendered = format_sig6(value)
        else:
            rendered = str(value)
        lines.append(f"{key}\t{rendered}\n")
    atomic_write_text(path, "".join(lines))


def read_report(path: str) -> dict[str, object]:
    out: dict[str, object] = {}
    for lineno, fields in _iter_tsv(path, 2):
        key, value = fields
        if key in out:
            raise FormatError(f"{path}:{lineno}: duplicate key {key!r}")
        if value == "absent":
            out[key] = None
        else:
            try:
                out[key] = int(value)
            except ValueError:
                try:
                    out[key] = float(value)
                except ValueError:
                    out[key] = value
    return out
