from __future__ import annotations

from scdkit.core import TaggedTranscript, Token
from scdkit.tagtext import DEFAULT_TAGSET, format_tagged_text, parse_tagged_text


def test_parse_mixed_tags_and_words():
    t = parse_tagged_text("DE guten tag SC hallo", {"SC", "NL", "DE", "FR"})
    assert [(tok.kind, tok.value) for tok in t.tokens] == [
        ("tag", "DE"),
        ("word", "guten"),
        ("word", "tag"),
        ("tag", "SC"),
        ("word", "hallo"),
    ]
    assert t.tokens[0].tag_language == "de"
    assert t.tokens[3].tag_language is None


def test_parse_case_sensitive_negative():
    t = parse_tagged_text("scarf and sc")
    assert [tok.kind for tok in t.tokens] == ["word", "word", "word"]


def test_parse_empty_string():
    assert parse_tagged_text("").tokens == ()


def test_parse_is_total_on_weird_whitespace():
    t = parse_tagged_text("  SC\thello \n world  ")
    assert [tok.value for tok in t.tokens] == ["SC", "hello", "world"]


def test_round_trip_random_transcripts(rng):
    words = ["hallo", "wereld", "guten", "morgen", "bonjour", "tout"]
    tags = [("SC", None), ("NL", "nl"), ("DE", "de"), ("FR", "fr")]
    for _ in range(200):
        tokens = []
        for _ in range(rng.randint(0, 12)):
            if rng.random() < 0.3:
                value, lang = rng.choice(tags)
                tokens.append(Token("tag", value, tag_language=lang))
            else:
                tokens.append(Token("word", rng.choice(words)))
        t = TaggedTranscript(tuple(tokens))
        back = parse_tagged_text(format_tagged_text(t), DEFAULT_TAGSET)
        assert [(x.kind, x.value) for x in back.tokens] == [
            (x.kind, x.value) for x in t.tokens
        ]
