"""Batch command-line front end: build -> synth -> decode -> score -> report.

Each subcommand maps onto one module operation and communicates through the
file formats in scdkit.formats. Exit codes: 0 success, 1 validation errors,
2 I/O or format errors.
"""

from __future__ import annotations

import argparse
import dataclasses
import glob
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import builder, decoder, embeddings, formats, metrics, report as report_mod, tagtext, trials
from .core import (
    Alphabet,
    BuilderConfig,
    Manifest,
    Mode,
    NeighborConstraint,
    TagScheme,
    alphabet_from_spec,
    speaker_label_map,
)
from .errors import FormatError, ValidationError
from .synth import SynthConfig, plant_embeddings, speaker_centroids, synthesize_posteriors


class _Parser(argparse.ArgumentParser):
    # Usage problems (unknown flags, missing args) are validation errors: exit 1.
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _pmap(fn, items, jobs: int):
    items = list(items)
    if jobs <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _log(message: str) -> None:
    print(message)


def _load_alphabet(args) -> Alphabet:
    return alphabet_from_spec(args.alphabet)


def _read_manifest_arg(value: str, split: str, alphabet=None) -> tuple[str | None, Manifest]:
    """Either 'path' or 'lang=path' (for per-language manifests)."""
    if "=" in value and not os.path.exists(value):
        lang, _, path = value.partition("=")
        return lang, formats.read_manifest(path, split=split, alphabet=alphabet)
    return None, formats.read_manifest(value, split=split, alphabet=alphabet)


def _resolve_segments(spec: builder.ConcatSpec, manifest: Manifest):
    by_id = manifest.by_id()
    segments = []
    for segment_id in spec.segment_ids():
        if segment_id not in by_id:
            raise ValidationError(f"{spec.utt_id}: segment {segment_id!r} not in manifest")
        segments.append(by_id[segment_id])
    return segments


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def _cmd_build_dataset(args) -> int:
    scheme = TagScheme.parse(args.scheme)
    mode = Mode(args.mode)
    alphabet = alphabet_from_spec(args.alphabet) if args.alphabet else None
    config = BuilderConfig(
        mode=mode,
        max_duration_s=args.max_duration,
        min_duration_s=args.min_duration,
        p_language_change=args.p_language_change,
        p_same_speaker_given_same_language=args.p_same_speaker,
        crossfade_ms=args.crossfade_ms,
        target_rms_dbfs=args.target_rms_dbfs,
        tag_scheme=scheme,
        seed=args.seed,
    )
    if mode is Mode.PAIRWISE:
        manifests = {}
        for value in args.manifest:
            lang, manifest = _read_manifest_arg(value, args.split, alphabet=alphabet)
            if lang is None:
                raise ValidationError("pairwise mode needs lang=path manifest arguments")
            manifests[lang] = manifest
        specs = builder.build_multilingual_pairs(manifests, config, n_pairs=args.n_pairs)
    else:
        if len(args.manifest) != 1:
            raise ValidationError("non-pairwise modes take exactly one --manifest")
        _, manifest = _read_manifest_arg(args.manifest[0], args.split, alphabet=alphabet)
        if args.nosc_only:
            specs = builder.build_nosc(manifest, config)
        else:
            specs = builder.build_multispeaker(manifest, config)
            if args.with_nosc:
                nosc = builder.build_nosc(manifest, config)
                specs = builder.merge_no_sc(specs, nosc, seed=config.seed)
    formats.write_specs(args.out, specs)
    if args.audio_out:
        from .audio import AudioStore, write_wav

        manifests_for_audio = (
            list(manifests.values()) if mode is Mode.PAIRWISE else [manifest]
        )
        merged = Manifest(
            segments=tuple(s for m in manifests_for_audio for s in m.segments),
            split=args.split,
        )
        store = AudioStore(merged)
        os.makedirs(args.audio_out, exist_ok=True)
        for spec in specs:
            samples, sr = builder.concat_audio(spec, store, config)
            write_wav(os.path.join(args.audio_out, f"{spec.utt_id}.wav"), samples, sr)
        _log(f"build-dataset: rendered {len(specs)} WAVs -> {args.audio_out}")
    density = builder.density_report(specs)
    spc = "absent" if density.seconds_per_change is None else f"{density.seconds_per_change:.3f}"
    _log(
        f"build-dataset: {len(specs)} specs, {density.total_audio_s:.1f} s audio, "
        f"{density.n_changes} changes, {spc} s/change -> {args.out}"
    )
    return 0


def _cmd_synth(args) -> int:
    alphabet = _load_alphabet(args)
    _, manifest = _read_manifest_arg(args.manifest, args.split)
    specs = formats.read_specs(args.spec)
    config = SynthConfig(
        frame_rate_hz=args.frame_rate,
        frames_per_token=args.frames_per_token,
        blank_pad=args.blank_pad,
        peak_prob=args.peak_prob,
        noise_floor=1.0 - args.peak_prob,
        sc_repeat_peaks=args.sc_repeat_peaks,
        embedding_dim=args.embedding_dim,
        centroid_separation=args.separation,
        embedding_noise_sigma=args.sigma,
        seed=args.seed,
    )
    os.makedirs(args.out, exist_ok=True)
    speaker_map = (
        speaker_label_map(manifest) if alphabet.tag_kind.value == "speaker_labels" else None
    )
    # One corpus-wide centroid per speaker so cross-utterance trials are coherent.
    centroids = speaker_centroids(manifest.speakers(), config)

    def synth_one(spec: builder.ConcatSpec):
        segments = _resolve_segments(spec, manifest)
        parts = builder.render_attributed(segments, spec.tag_scheme, speaker_map)
        # Per-utterance seed offset keeps utterances independent but reproducible.
        utt_config = dataclasses.replace(config, seed=config.seed + _stable_offset(spec.utt_id))
        posteriors = synthesize_posteriors(parts, alphabet, utt_config, utt_id=spec.utt_id)
        emb = plant_embeddings(parts, utt_config, utt_id=spec.utt_id, centroids=centroids)
        formats.write_scdp(
            os.path.join(args.out, f"{spec.utt_id}.scdp"),
            spec.utt_id,
            utt_config.frame_rate_hz,
            alphabet.classes,
            posteriors.rows,
        )
        formats.write_scde(
            os.path.join(args.out, f"{spec.utt_id}.scde"),
            spec.utt_id,
            utt_config.frame_rate_hz,
            emb.rows,
        )
        return spec.utt_id, spec.reference

    refs = _pmap(synth_one, specs, args.jobs)
    formats.write_transcripts(os.path.join(args.out, "refs.jsonl"), refs)
    _log(f"synth: {len(refs)} utterances -> {args.out}")
    return 0


def _stable_offset(utt_id: str) -> int:
    # Deterministic across runs (unlike hash()).
    v = 0
    for ch in utt_id:
        v = (v * 131 + ord(ch)) % 1_000_000_007
    return v


def _cmd_decode(args) -> int:
    alphabet = _load_alphabet(args)
    paths = sorted(glob.glob(os.path.join(args.posteriors, "*.scdp")))
    if not paths:
        raise ValidationError(f"decode: no .scdp files under {args.posteriors}")

    def decode_one(path: str):
        header, rows = formats.read_scdp(path)
        if tuple(header["class_names"]) != alphabet.classes:
            raise ValidationError(
                f"{path}: class names do not match the alphabet "
                f"({header['class_names']} vs {list(alphabet.classes)})"
            )
        matrix = decoder.PosteriorMatrix(
            utt_id=header["utt_id"],
            frame_rate_hz=header["frame_rate_hz"],
            rows=rows.astype(np.float64),
        )
        return header["utt_id"], decoder.decode_transcript(matrix, alphabet)

    decoded = _pmap(decode_one, paths, args.jobs)
    formats.write_transcripts(args.out, decoded)
    _log(f"decode: {len(decoded)} utterances -> {args.out}")
    return 0


def _cmd_extract_embeddings(args) -> int:
    alphabet = _load_alphabet(args)
    hyps = formats.read_transcripts(args.hyp)
    os.makedirs(args.out, exist_ok=True)
    window_rows = []
    n_embeddings = 0
    for utt_id in sorted(hyps):
        scdp_path = os.path.join(args.posteriors, f"{utt_id}.scdp")
        scde_path = os.path.join(args.posteriors, f"{utt_id}.scde")
        header, rows = formats.read_scdp(scdp_path)
        eheader, erows = formats.read_scde(scde_path)
        if eheader["n_frames"] != header["n_frames"]:
            raise ValidationError(f"{utt_id}: posterior/embedding frame counts differ")
        matrix = decoder.PosteriorMatrix(
            utt_id=utt_id, frame_rate_hz=header["frame_rate_hz"], rows=rows.astype(np.float64)
        )
        if alphabet.tag_kind.value == "none":
            raise ValidationError("extract-embeddings needs an alphabet with tag classes")
        summed = decoder.sum_tag_posteriors(matrix, alphabet)
        view = decoder.single_sc_alphabet(alphabet)
        column = decoder.virtual_sc_column(summed, view)
        emb = embeddings.EmbeddingMatrix(
            utt_id=utt_id, frame_rate_hz=eheader["frame_rate_hz"], rows=erows.astype(np.float64)
        )
        windows = embeddings.extract_embeddings(hyps[utt_id], column, emb)
        selected = (
            np.stack([w.embedding for w in windows])
            if windows
            else np.zeros((0, emb.dim))
        )
        formats.write_scde(
            os.path.join(args.out, f"{utt_id}.scde"),
            utt_id,
            header["frame_rate_hz"],
            selected,
        )
        for w in windows:
            window_rows.append((utt_id, w.sc_index, w.start_frame, w.end_frame, w.selected_frame))
        n_embeddings += len(windows)
    formats.write_count_table(
        os.path.join(args.out, "windows.tsv"),
        ("utt_id", "sc_index", "start_frame", "end_frame", "selected_frame"),
        window_rows,
    )
    _log(f"extract-embeddings: {n_embeddings} embeddings over {len(hyps)} utterances -> {args.out}")
    return 0


def _cmd_parse_tags(args) -> int:
    tagset = {t for t in args.tagset.split(",") if t}
    lines = formats.read_text_hyps(args.hyp)
    parsed = [(utt_id, tagtext.parse_tagged_text(text, tagset)) for utt_id, text in lines]
    formats.write_transcripts(args.out, parsed)
    _log(f"parse-tags: {len(parsed)} utterances -> {args.out}")
    return 0


def _pair_transcripts(ref_path: str, hyp_path: str):
    refs = formats.read_transcripts(ref_path)
    hyps = formats.read_transcripts(hyp_path)
    missing = sorted(set(refs) - set(hyps))
    if missing:
        raise ValidationError(f"hypotheses missing for utterances: {missing[:10]}")
    return refs, hyps


def _cmd_score_asr(args) -> int:
    refs, hyps = _pair_transcripts(args.ref, args.hyp)
    rows = []
    for utt_id in sorted(refs):
        s, d, i, n = metrics.word_edit_counts(refs[utt_id], hyps[utt_id])
        rows.append((utt_id, n, s, d, i))
    formats.write_count_table(args.out, report_mod.ASR_COLUMNS, rows)
    agg = report_mod.aggregate_asr(rows)
    wer = "absent" if agg["wer"] is None else formats.format_sig6(agg["wer"])
    _log(f"score-asr: {len(rows)} utterances, WER {wer} -> {args.out}")
    return 0


def _cmd_score_scd(args) -> int:
    refs, hyps = _pair_transcripts(args.ref, args.hyp)
    rows = []
    for utt_id in sorted(refs):
        c = metrics.scd_counts(refs[utt_id], hyps[utt_id])
        rows.append((utt_id, c.n_ref_sc_noninitial, c.n_nosc_transitions, c.n_fn, c.n_fp))
    formats.write_count_table(args.out, report_mod.SCD_COLUMNS, rows)
    agg = report_mod.aggregate_scd(rows)
    p_fp = "absent" if agg.p_fp is None else formats.format_sig6(agg.p_fp)
    p_fn = "absent" if agg.p_fn is None else formats.format_sig6(agg.p_fn)
    _log(f"score-scd: {len(rows)} utterances, p_fp {p_fp}, p_fn {p_fn} -> {args.out}")
    return 0


def _cmd_score_language(args) -> int:
    refs, hyps = _pair_transcripts(args.ref, args.hyp)
    rows = []
    for utt_id in sorted(refs):
        rep = metrics.ler(refs[utt_id], hyps[utt_id])
        rows.append((utt_id, rep.n_segments, rep.n_language_errors))
    formats.write_count_table(args.out, report_mod.LANGUAGE_COLUMNS, rows)
    agg = report_mod.aggregate_language(rows)
    ler = "absent" if agg.ler is None else formats.format_sig6(agg.ler)
    _log(f"score-language: {len(rows)} utterances, LER {ler} -> {args.out}")
    return 0


def _cmd_build_trials(args) -> int:
    _, manifest = _read_manifest_arg(args.manifest, args.split)
    full = trials.build_full_trials(manifest)
    formats.write_trials(args.out, full.trials)
    _log(f"build-trials: {full.n_full} trials -> {args.out}")
    return 0


def _cmd_score_trials(args) -> int:
    trial_rows = formats.read_trials(args.trials)
    full = trials.TrialList(
        trials=tuple(trials.Trial(e, t, label) for e, t, label in trial_rows),
        n_full=len(trial_rows),
    )
    specs = formats.read_specs(args.spec)
    _, manifest = _read_manifest_arg(args.manifest, args.split)
    hyps = formats.read_transcripts(args.hyp)

    decodes = []
    for spec in specs:
        if spec.utt_id not in hyps:
            raise ValidationError(f"no hypothesis for {spec.utt_id}")
        segments = _resolve_segments(spec, manifest)
        announced = builder.announced_segment_ids(segments, spec.tag_scheme)
        n_sc_ref = sum(1 for t in spec.reference.tokens if t.is_tag)
        merged = metrics.merge_tag_runs(hyps[spec.utt_id].tokens)
        n_sc_hyp = sum(1 for t in merged if t.is_tag)
        _, erows = formats.read_scde(os.path.join(args.emb, f"{spec.utt_id}.scde"))
        decodes.append(
            trials.UttDecode(
                utt_id=spec.utt_id,
                n_sc_hyp=n_sc_hyp,
                n_sc_ref=n_sc_ref,
                segment_ids=tuple(announced),
                embeddings=tuple(erows),
            )
        )
    kept, fraction = trials.select_proxy_trials(full, decodes)
    lookup = trials.proxy_embedding_map(decodes)
    scored = [
        (t.enroll, t.test, t.label, trials.cosine_score(lookup[t.enroll], lookup[t.test]))
        for t in kept.trials
    ]
    formats.write_scores(args.out, scored)
    formats.write_report(
        args.out + ".meta.tsv",
        {"n_full": full.n_full, "n_scored": len(scored), "trial_fraction": fraction},
    )
    _log(
        f"score-trials: kept {len(scored)}/{full.n_full} trials "
        f"({formats.format_sig6(fraction)}%) -> {args.out}"
    )
    return 0


def _cmd_eer(args) -> int:
    rows = formats.read_scores(args.scores)
    value = trials.eer([(score, label == "target") for _, _, label, score in rows])
    _log(f"eer\t{formats.format_sig6(value)}")
    return 0


def _cmd_report(args) -> int:
    inputs = [args.asr, args.scd, args.language, args.scores, args.spec]
    if not any(inputs):
        raise ValidationError("report: no inputs given")
    asr_rows = scd_rows = language_rows = None
    scores = None
    density = None
    specs = None
    trial_fraction = None
    if args.asr:
        _, asr_rows = formats.read_count_table(args.asr)
    if args.scd:
        _, scd_rows = formats.read_count_table(args.scd)
    if args.language:
        _, language_rows = formats.read_count_table(args.language)
    if args.scores:
        rows = formats.read_scores(args.scores)
        scores = [(score, label == "target") for _, _, label, score in rows]
        meta_path = args.scores + ".meta.tsv"
        if os.path.exists(meta_path):
            meta = formats.read_report(meta_path)
            if isinstance(meta.get("trial_fraction"), (int, float)):
                trial_fraction = float(meta["trial_fraction"])
    if args.spec:
        specs = formats.read_specs(args.spec)
        density = builder.density_report(specs)
    rep = report_mod.corpus_report(
        asr_rows=asr_rows,
        scd_rows=scd_rows,
        language_rows=language_rows,
        scores=scores,
        density=density,
        trial_fraction=trial_fraction,
    )
    written = report_mod.write_report_with_figures(
        args.out, rep, scores=scores, specs=specs, figures=not args.no_figures
    )
    for path in written:
        _log(f"report: wrote {path}")
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser, *names: str) -> None:
    if "seed" in names:
        p.add_argument("--seed", type=int, default=0)
    if "jobs" in names:
        p.add_argument("--jobs", type=int, default=1)
    if "split" in names:
        p.add_argument("--split", default="train", choices=("train", "dev", "eval"))
    if "alphabet" in names:
        p.add_argument("--alphabet", required=True, help="e.g. en28+sc, en28+s4, en28+lang:nl,de,fr")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="scdkit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("build-dataset", help="construct concat specs from manifests")
    p.add_argument("--manifest", action="append", required=True,
                   help="manifest path, or lang=path (repeat) for pairwise mode")
    p.add_argument("--scheme", required=True,
                   choices=[s.value for s in TagScheme])
    p.add_argument("--mode", default=Mode.MAX_DURATION.value,
                   choices=[m.value for m in Mode])
    p.add_argument("--max-duration", type=float, default=18.75)
    p.add_argument("--min-duration", type=float, default=17.5)
    p.add_argument("--crossfade-ms", type=float, default=20.0)
    p.add_argument("--target-rms-dbfs", type=float, default=-26.0)
    p.add_argument("--p-language-change", type=float, default=0.5)
    p.add_argument("--p-same-speaker", type=float, default=0.5)
    p.add_argument("--n-pairs", type=int, default=1000)
    p.add_argument("--with-nosc", action="store_true",
                   help="also build the speaker-homogeneous set and merge (no+sc)")
    p.add_argument("--nosc-only", action="store_true")
    p.add_argument("--out", required=True)
    p.add_argument("--audio-out", help="also render each spec to 16-bit mono WAV here")
    p.add_argument("--alphabet",
                   help="optional; validates manifest text against the letter set")
    _add_common(p, "seed", "split")
    p.set_defaults(func=_cmd_build_dataset)

    p = sub.add_parser("synth", help="synthesize oracle posteriors/embeddings for specs")
    p.add_argument("--spec", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--frame-rate", type=float, default=50.0)
    p.add_argument("--frames-per-token", type=int, default=2)
    p.add_argument("--blank-pad", type=int, default=1)
    p.add_argument("--peak-prob", type=float, default=1.0)
    p.add_argument("--sc-repeat-peaks", type=int, default=1)
    p.add_argument("--embedding-dim", type=int, default=16)
    p.add_argument("--separation", type=float, default=1.0)
    p.add_argument("--sigma", type=float, default=0.0)
    _add_common(p, "seed", "jobs", "split", "alphabet")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("decode", help="greedy-decode SCDP posteriors into transcripts")
    p.add_argument("--posteriors", required=True, help="directory of .scdp files")
    p.add_argument("--out", required=True)
    _add_common(p, "jobs", "alphabet")
    p.set_defaults(func=_cmd_decode)

    p = sub.add_parser("extract-embeddings", help="one embedding per detected change")
    p.add_argument("--posteriors", required=True, help="directory of .scdp/.scde files")
    p.add_argument("--hyp", required=True)
    p.add_argument("--out", required=True)
    _add_common(p, "alphabet")
    p.set_defaults(func=_cmd_extract_embeddings)

    p = sub.add_parser("parse-tags", help="parse tagged plain-text hypotheses")
    p.add_argument("--hyp", required=True, help="utt_id<TAB>text per line")
    p.add_argument("--tagset", default="SC,NL,DE,FR")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_parse_tags)

    p = sub.add_parser("score-asr", help="WER counts per utterance")
    p.add_argument("--ref", required=True)
    p.add_argument("--hyp", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_score_asr)

    p = sub.add_parser("score-scd", help="speaker-change detection counts per utterance")
    p.add_argument("--ref", required=True)
    p.add_argument("--hyp", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_score_scd)

    p = sub.add_parser("score-language", help="language error counts per utterance")
    p.add_argument("--ref", required=True)
    p.add_argument("--hyp", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_score_language)

    p = sub.add_parser("build-trials", help="full speaker-verification trial list")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    _add_common(p, "split")
    p.set_defaults(func=_cmd_build_trials)

    p = sub.add_parser("score-trials", help="proxy selection + cosine scoring")
    p.add_argument("--trials", required=True)
    p.add_argument("--spec", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--hyp", required=True)
    p.add_argument("--emb", required=True, help="directory of extracted .scde files")
    p.add_argument("--out", required=True)
    _add_common(p, "split")
    p.set_defaults(func=_cmd_score_trials)

    p = sub.add_parser("eer", help="equal error rate of a score file")
    p.add_argument("--scores", required=True)
    p.set_defaults(func=_cmd_eer)

    p = sub.add_parser("report", help="aggregate stage outputs into one corpus report")
    p.add_argument("--asr")
    p.add_argument("--scd")
    p.add_argument("--language")
    p.add_argument("--scores")
    p.add_argument("--spec")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=_cmd_report)

    return parser


def run(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except SystemExit as e:
        return int(e.code) if e.code is not None else 0
    except ValidationError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except FormatError as e:
        print(f"format error: {e}", file=sys.stderr)
        return 2


def main() -> None:
    raise SystemExit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
