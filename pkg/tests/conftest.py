import pytest

from rsa_refgame.world import FURNITURE, AttributeSchema, ObjectDescription, ReferenceGame

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: s.split("criterion ")[1]):
            terminalreporter.write_line(line)


# Furniture plus "yellow", for the three-object world used in the worked examples.
INTRO_SCHEMA = AttributeSchema((
    ("type", ("chair", "sofa", "desk", "fan")),
    ("colour", ("blue", "red", "green", "grey", "yellow")),
    ("size", ("large", "small")),
    ("orientation", ("left", "right", "front", "back")),
))


def obj(size, colour, type_, orientation, schema=FURNITURE):
    return ObjectDescription.from_mapping(
        {"type": type_, "colour": colour, "size": size, "orientation": orientation}, schema)


@pytest.fixture
def intro_game():
    objects = (
        obj("small", "red", "desk", "front", INTRO_SCHEMA),
        obj("small", "yellow", "desk", "front", INTRO_SCHEMA),
        obj("large", "red", "chair", "front", INTRO_SCHEMA),
    )
    return ReferenceGame("intro", INTRO_SCHEMA, objects, 2)


@pytest.fixture
def tuna_game():
    objects = (
        obj("large", "red", "chair", "left"),
        obj("small", "red", "chair", "left"),
        obj("large", "blue", "chair", "left"),
        obj("large", "red", "sofa", "left"),
        obj("large", "red", "chair", "back"),
        obj("small", "green", "desk", "front"),
        obj("large", "grey", "fan", "right"),
    )
    return ReferenceGame("t1#0", FURNITURE, objects, 0)


def run_mock_pipeline(root, games=10, score_args=(), analyze_args=("--sweep-alpha",)):
    """ingest -> utterances -> score -> analyze with the mock client; returns the analysis dir."""
    from rsa_refgame.cli import main

    root.mkdir(parents=True, exist_ok=True)
    steps = [
        ["ingest", "--synthetic", "--seed", "1", "--games", str(games), "--out", str(root / "corpus.jsonl")],
        ["utterances", "--corpus", str(root / "corpus.jsonl"), "--mode", "both", "--mock", "--k", "3",
         "--out", str(root / "spaces.jsonl")],
        ["score", "--corpus", str(root / "corpus.jsonl"), "--spaces", str(root / "spaces.jsonl"), "--mock",
         "--out-dir", str(root / "scores"), *score_args],
        ["analyze", "--scores", str(root / "scores"), "--out-dir", str(root / "analysis"), *analyze_args],
    ]
    for argv in steps:
        assert main(argv) == 0, argv
    return root / "analysis"
