"""scdkit: speaker/language-change dataset construction, decoding, and scoring."""

from .builder import (
    ConcatSpec,
    DensityReport,
    announced_segment_ids,
    build_multilingual_pairs,
    build_multispeaker,
    build_nosc,
    concat_audio,
    density_report,
    merge_no_sc,
    render_transcript,
)
from .core import (
    Alphabet,
    BuilderConfig,
    Manifest,
    Mode,
    NeighborConstraint,
    Segment,
    TagKind,
    TagScheme,
    TaggedTranscript,
    Token,
    alphabet_from_spec,
    build_alphabet,
    speaker_label_map,
    validate_manifest,
)
from .decoder import (
    GreedyPath,
    PosteriorMatrix,
    ctc_collapse,
    decode_transcript,
    greedy_path,
    single_sc_alphabet,
    sum_tag_posteriors,
    virtual_sc_column,
)
from .embeddings import EmbeddingMatrix, ScWindow, extract_embeddings, sc_windows, select_embedding
from .errors import FormatError, ManifestError, ScdkitError, UnsatisfiableError, ValidationError
from .metrics import (
    Alignment,
    LanguageReport,
    ScdCounts,
    align_words,
    ler,
    merge_tag_runs,
    scd_counts,
    wer,
    word_edit_counts,
)
from .synth import SynthConfig, plant_embeddings, synthesize_posteriors
from .tagtext import format_tagged_text, parse_tagged_text
from .trials import (
    Trial,
    TrialList,
    UttDecode,
    build_full_trials,
    cosine_score,
    eer,
    select_proxy_trials,
    trial_count_formula,
)

__version__ = "0.1.0"
