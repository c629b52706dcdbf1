"""TUNA trial ingestion, canonical JSONL persistence and synthetic worlds."""

from __future__ import annotations

import hashlib
import json
import logging
import xml.etree.ElementTree as ET
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import CapacityError, EmptyTrialError, IngestionError, RefGameError
from .world import FURNITURE, AttributeSchema, ObjectDescription, ReferenceGame, validate_game

log = logging.getLogger(__name__)

# Attribute spellings accepted in trial files, mapped onto schema names.
_ATTRIBUTE_ALIASES = {"color": "colour"}

CORPUS_FORMAT = "rsa-refgame/corpus/v1"


@dataclass(frozen=True)
class Corpus:
    games: tuple[ReferenceGame, ...] = ()
    # game_id -> {"file": ..., "trial_id": ..., ...}
    sources: dict = field(default_factory=dict, compare=True, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "games", tuple(self.games))
        ids = [g.game_id for g in self.games]
        if len(set(ids)) != len(ids):
            dupes = sorted(k for k, v in Counter(ids).items() if v > 1)
            raise RefGameError(f"duplicate game ids: {dupes[:5]}")
        for g in self.games:
            problems = validate_game(g)
            if problems:
                raise RefGameError(f"invalid game {g.game_id!r}: " + "; ".join(map(str, problems)))

    def __len__(self):
        return len(self.games)

    def __iter__(self):
        return iter(self.games)

    def stats(self) -> dict:
        trials = {self.sources.get(g.game_id, {}).get("trial_id", g.game_id) for g in self.games}
        return {
            "games": len(self.games),
            "objects": sum(len(g.objects) for g in self.games),
            "trials": len(trials),
            "objects_per_game": dict(sorted(Counter(len(g.objects) for g in self.games).items())),
        }


def _local(tag: str) -> str:
    return tag.rsplit("}", 1)[-1].lower()


def parse_tuna_trial(document: str | bytes, schema: AttributeSchema = FURNITURE,
                     trial_id: str | None = None) -> list[ReferenceGame]:
    """Parse one TUNA trial into one game per entity, each entity taking a turn as target.

    Attributes outside ``schema`` (coordinates and the like) are ignored.
    """
    try:
        root = ET.fromstring(document)
    except ET.ParseError as exc:
        raise IngestionError(f"malformed trial XML: {exc}") from exc

    tid = trial_id or root.get("ID") or root.get("id")
    if not tid:
        raise IngestionError("trial has no ID and none was supplied")

    entities = [el for el in root.iter() if _local(el.tag) == "entity"]
    if not entities:
        raise EmptyTrialError(f"trial {tid!r} has no entities")

    objects = []
    for n, ent in enumerate(entities):
        name = ent.get("ID") or ent.get("id") or f"#{n}"
        values = {}
        for attr in ent:
            if _local(attr.tag) != "attribute":
                continue
            key = (attr.get("NAME") or attr.get("name") or "").strip().lower()
            key = _ATTRIBUTE_ALIASES.get(key, key)
            if key in schema:
                values[key] = (attr.get("VALUE") or attr.get("value") or "").strip().lower()
        for a in schema.names:
            if a not in values:
                raise IngestionError(f"trial {tid!r}: entity {name!r} is missing attribute {a!r}")
        obj = ObjectDescription.from_mapping(values, schema)
        bad = obj.violations(schema)
        if bad:
            raise IngestionError(f"trial {tid!r}: entity {name!r}: " + "; ".join(bad))
        objects.append(obj)

    games = []
    for i in range(len(objects)):
        game = ReferenceGame(f"{tid}#{i}", schema, tuple(objects), i)
        problems = validate_game(game)
        if problems:
            raise IngestionError(f"trial {tid!r}: " + "; ".join(map(str, problems)))
        games.append(game)
    return games


def _trial_role_index(document: str | bytes) -> int | None:
    root = ET.fromstring(document)
    entities = [el for el in root.iter() if _local(el.tag) == "entity"]
    for i, ent in enumerate(entities):
        if (ent.get("TYPE") or ent.get("type") or "").lower() == "target":
            return i
    return None


def load_corpus(path, schema: AttributeSchema = FURNITURE, skip_bad: bool = False,
                pattern: str = "*.xml"):
    """Load every trial file under ``path`` (recursively, lexicographic order).

    Returns the Corpus, or ``(corpus, errors)`` when ``skip_bad`` is set, where
    ``errors`` lists ``(file, message)`` for the trials that were skipped.
    """
    root = Path(path)
    if not root.is_dir():
        raise IngestionError(f"not a directory: {root}")
    files = sorted(root.rglob(pattern), key=lambda p: p.relative_to(root).as_posix())
    games, sources, errors = [], {}, []
    for f in files:
        rel = f.relative_to(root).as_posix()
        try:
            doc = f.read_bytes()
            trial_games = parse_tuna_trial(doc, schema, trial_id=None if _has_id(doc) else f.stem)
            role_target = _trial_role_index(doc)
        except IngestionError as exc:
            if not skip_bad:
                raise IngestionError(f"{f}: {exc}") from exc
            errors.append((str(f), str(exc)))
            continue
        for g in trial_games:
            sources[g.game_id] = {"file": rel, "trial_id": g.game_id.rsplit("#", 1)[0],
                                  "original_target": role_target}
        games.extend(trial_games)
    if not files:
        log.warning("no trial files found under %s", root)
    corpus = Corpus(tuple(games), sources)
    log.info("loaded %d games (%d objects) from %d files",
             len(corpus), sum(len(g.objects) for g in games), len(files))
    return (corpus, errors) if skip_bad else corpus


def _has_id(doc: bytes) -> bool:
    try:
        root = ET.fromstring(doc)
    except ET.ParseError:
        return True  # let parse_tuna_trial report it
    return bool(root.get("ID") or root.get("id"))


def generate_synthetic(seed: int, schema: AttributeSchema = FURNITURE, n_objects: int = 7,
                       n_games: int = 10) -> Corpus:
    """Random games with distinct objects; reproducible from ``seed``."""
    capacity = schema.n_objects()
    if n_objects > capacity:
        raise CapacityError(f"{n_objects} distinct objects requested but schema admits only {capacity}")
    if n_objects < 1:
        raise CapacityError("n_objects must be positive")
    everything = list(schema.all_objects())
    rng = np.random.default_rng(seed)
    games, sources = [], {}
    for i in range(n_games):
        picks = rng.choice(capacity, size=n_objects, replace=False)
        target = int(rng.integers(n_objects))
        gid = f"synthetic-{seed}-{i:04d}"
        games.append(ReferenceGame(gid, schema, tuple(everything[j] for j in picks), target))
        sources[gid] = {"file": None, "trial_id": gid, "seed": seed}
    return Corpus(tuple(games), sources)


# --- canonical persistence -------------------------------------------------

def game_to_record(game: ReferenceGame, source: dict | None = None) -> dict:
    rec = {
        "game_id": game.game_id,
        "schema": game.schema.to_json(),
        "objects": [dict(o.assignment) for o in game.objects],
        "target_index": game.target_index,
    }
    if source is not None:
        rec["source"] = source
    return rec


def game_from_record(rec: dict) -> ReferenceGame:
    schema = AttributeSchema.from_json(rec["schema"])
    objects = tuple(ObjectDescription.from_mapping(o, schema) for o in rec["objects"])
    return ReferenceGame(rec["game_id"], schema, objects, int(rec["target_index"]))


def dumps_line(obj) -> str:
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"))


def serialize_corpus(corpus: Corpus, header: dict | None = None) -> str:
    lines = []
    if header is not None:
        lines.append(dumps_line({"__header__": {"format": CORPUS_FORMAT, **header}}))
    for g in corpus.games:
        lines.append(dumps_line(game_to_record(g, corpus.sources.get(g.game_id))))
    return "".join(line + "\n" for line in lines)


def parse_corpus(text: str) -> Corpus:
    games, sources = [], {}
    for n, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        rec = json.loads(line)
        if "__header__" in rec:
            continue
        try:
            g = game_from_record(rec)
        except (KeyError, TypeError, ValueError) as exc:
            raise IngestionError(f"line {n}: bad game record: {exc}") from exc
        games.append(g)
        if "source" in rec:
            sources[g.game_id] = rec["source"]
    return Corpus(tuple(games), sources)


def save_corpus(corpus: Corpus, path, header: dict | None = None) -> None:
    Path(path).write_text(serialize_corpus(corpus, header), encoding="utf-8")


def read_corpus(path) -> Corpus:
    return parse_corpus(Path(path).read_text(encoding="utf-8"))


def corpus_hash(corpus: Corpus) -> str:
    return hashlib.sha256(serialize_corpus(corpus).encode("utf-8")).hexdigest()
