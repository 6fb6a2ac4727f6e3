from __future__ import annotations

import random

import pytest

from scdkit.core import Manifest, Segment


def make_segment(
    seg_id: str,
    speaker: str,
    duration: float = 5.0,
    text: str = "hello world",
    session: str | None = None,
    language: str = "en",
    variant: str = "",
    start: float = 0.0,
    audio_path: str = "",
) -> Segment:
    return Segment(
        id=seg_id,
        speaker_id=speaker,
        session_id=session if session is not None else f"sess-{speaker}",
        language=language,
        variant=variant,
        audio_path=audio_path or f"{seg_id}.wav",
        start_s=start,
        duration_s=duration,
        text=text,
    )


def make_manifest(segments, split: str = "train") -> Manifest:
    return Manifest(segments=tuple(segments), split=split)


WORDS = (
    "hello world good morning the quick brown fox jumps over a lazy dog "
    "speech and speaker change detection is fun to test with tiny words"
).split()


def random_text(rng: random.Random, n_words_max: int = 4) -> str:
    n = rng.randint(1, n_words_max)
    return " ".join(rng.choice(WORDS) for _ in range(n))


@pytest.fixture
def rng():
    return random.Random(20240809)


# One line per acceptance criterion, echoed after the pytest summary so the
# pass/fail report survives output capture.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
