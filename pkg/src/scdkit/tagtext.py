"""Plain-text tagged hypotheses: uppercase standalone change tags among lowercase words."""

from __future__ import annotations

from typing import Iterable

from .core import TaggedTranscript, Token

DEFAULT_TAGSET = frozenset({"SC", "NL", "DE", "FR"})


def parse_tagged_text(text: str, tagset: Iterable[str] = DEFAULT_TAGSET) -> TaggedTranscript:
    """Whitespace-tokenize; a token is a tag iff it exactly equals a tagset member.

    Case-sensitive by design: the lowercase word "sc" (or German "tag") never
    matches. Total: any input yields a transcript.
    """
    tags = set(tagset)
    tokens = []
    for piece in text.split():
        if piece in tags:
            lang = piece.lower() if piece != "SC" else None
            tokens.append(Token("tag", piece, tag_language=lang))
        else:
            tokens.append(Token("word", piece))
    return TaggedTranscript(tuple(tokens))


def format_tagged_text(transcript: TaggedTranscript) -> str:
    """Render a transcript as decoder-style text: tags uppercase, words as-is."""
    return " ".join(
        t.value.upper() if t.is_tag else t.value for t in transcript.tokens
    )
