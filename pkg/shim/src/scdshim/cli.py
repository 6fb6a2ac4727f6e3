"""Shim CLI: export-ctc (SCDP + SCDE) and export-text (tagged hypotheses)."""

from __future__ import annotations

import argparse
import sys

from .containers import ShimError
from .ctc_export import export_ctc, load_class_map
from .text_export import export_text


def _read_wav_list(path: str) -> list[str]:
    with open(path, "r", encoding="utf-8") as f:
        return [line.strip() for line in f if line.strip()]


def _wavs_from_manifest(path: str) -> list[str]:
    """Unique audio_path values of a JSONL segment manifest, in file order."""
    import json

    seen: list[str] = []
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                wav = rec["audio_path"]
            except (ValueError, KeyError, TypeError) as e:
                raise ShimError(f"{path}:{lineno}: bad manifest record: {e}") from e
            if wav not in seen:
                seen.append(wav)
    return seen


def _resolve_wavs(args) -> list[str]:
    if bool(args.wav_list) == bool(args.manifest):
        raise ShimError("give exactly one of --wav-list or --manifest")
    if args.wav_list:
        return _read_wav_list(args.wav_list)
    return _wavs_from_manifest(args.manifest)


def _read_class_names(path: str) -> list[str]:
    with open(path, "r", encoding="utf-8") as f:
        return [line.rstrip("\n") for line in f if line.rstrip("\n")]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="scdkit-shim", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("export-ctc", help="frame posteriors + embeddings from a CTC model")
    p.add_argument("--model", required=True, help="model id or local checkpoint directory")
    p.add_argument("--wav-list", help="file with one WAV path per line")
    p.add_argument("--manifest", help="JSONL segment manifest; its audio_path values are used")
    p.add_argument("--classes", required=True, help="file with one toolkit class name per line")
    p.add_argument("--class-map", required=True,
                   help="JSON: toolkit class name -> model output column")
    p.add_argument("--out", required=True)
    p.add_argument("--layer", type=int, default=-1,
                   help="hidden-state layer exported as embeddings (default: last)")
    p.add_argument("--sample-rate", type=int, default=16000)
    p.add_argument("--device", default="cpu")

    p = sub.add_parser("export-text", help="tagged-text hypotheses from a seq2seq model")
    p.add_argument("--model", required=True)
    p.add_argument("--wav-list")
    p.add_argument("--manifest", help="JSONL segment manifest; its audio_path values are used")
    p.add_argument("--out", required=True)
    p.add_argument("--device", default="cpu")
    return parser


def run(argv) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "export-ctc":
            exported = export_ctc(
                model_ref=args.model,
                wav_list=_resolve_wavs(args),
                class_names=_read_class_names(args.classes),
                class_map=load_class_map(args.class_map),
                out_dir=args.out,
                layer=args.layer,
                expected_sample_rate=args.sample_rate,
                device=args.device,
            )
            print(f"export-ctc: {len(exported.posterior_paths)} utterances -> {args.out}")
        else:
            result = export_text(
                model_ref=args.model,
                wav_list=_resolve_wavs(args),
                out_path=args.out,
                device=args.device,
            )
            print(f"export-text: {result.n_ok} ok, {result.n_failed} failed -> {args.out}")
        return 0
    except ShimError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


def main() -> None:
    raise SystemExit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
