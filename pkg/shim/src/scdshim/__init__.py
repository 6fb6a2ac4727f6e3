"""scdkit-shim: export SCDP/SCDE/text from pretrained ASR models."""

from .containers import ShimError, write_embeddings, write_posteriors
from .ctc_export import ExportedFiles, export_ctc, load_class_map, resolve_column_order
from .text_export import TextExportResult, export_text, load_transcriber

__version__ = "0.1.0"
