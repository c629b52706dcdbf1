"""Utterance spaces: logic-enumerated feature bundles and deduplicated LLM top-k candidates."""

from __future__ import annotations

import itertools
import json
import logging
import re
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import RefGameError, SchemaError
from .world import COLOUR, ORIENTATION, SIZE, TEMPLATE_ROLES, TYPE, AttributeSchema, ReferenceGame

log = logging.getLogger(__name__)

ABSENT = None

WORD_COUNT = "word-count"
TOKEN_COUNT = "token-count"
FEATURE_COUNT = "feature-count"
COST_MODES = (WORD_COUNT, TOKEN_COUNT, FEATURE_COUNT)


@dataclass(frozen=True)
class FeatureBundle:
    """Partial assignment: one slot per schema attribute, ``None`` meaning absent."""

    slots: tuple[tuple[str, str | None], ...]

    def __post_init__(self):
        object.__setattr__(self, "slots", tuple(self.slots))

    @classmethod
    def from_mapping(cls, mapping, schema: AttributeSchema) -> "FeatureBundle":
        return cls(tuple((a, mapping.get(a)) for a in schema.names))

    def as_dict(self) -> dict:
        return dict(self.slots)

    def present(self) -> dict:
        return {a: f for a, f in self.slots if f is not None}

    def n_features(self) -> int:
        return sum(f is not None for _, f in self.slots)

    def subsumed_by(self, obj) -> bool:
        """True iff every present feature matches ``obj``."""
        return all(obj.get(a) == f for a, f in self.slots if f is not None)

    def check(self, schema: AttributeSchema) -> None:
        if tuple(a for a, _ in self.slots) != schema.names:
            raise SchemaError("bundle slots do not follow the schema's attributes")
        for a, f in self.slots:
            if f is not None and f not in schema.domain(a):
                raise SchemaError(f"feature not in domain: {f!r} under {a!r}")


@dataclass(frozen=True)
class LogicProvenance:
    bundle: FeatureBundle
    kind = "logic"

    def to_json(self):
        return {"kind": "logic", "bundle": self.bundle.as_dict()}


@dataclass(frozen=True)
class TopKProvenance:
    rank: int
    raw: str
    score: float | None = None  # total log-probability reported at generation time
    kind = "topk"

    def to_json(self):
        return {"kind": "topk", "rank": self.rank, "raw": self.raw, "score": self.score}


def provenance_from_json(data, schema: AttributeSchema | None = None):
    if data["kind"] == "logic":
        bundle = data["bundle"]
        names = schema.names if schema is not None else tuple(bundle)
        return LogicProvenance(FeatureBundle(tuple((a, bundle.get(a)) for a in names)))
    if data["kind"] == "topk":
        return TopKProvenance(int(data["rank"]), data["raw"], data.get("score"))
    raise RefGameError(f"unknown provenance kind {data['kind']!r}")


@dataclass(frozen=True)
class Utterance:
    text: str
    provenance: LogicProvenance | TopKProvenance
    cost: float

    def __post_init__(self):
        if not self.text:
            raise RefGameError("utterance text must be non-empty")
        if self.cost < 1:
            raise RefGameError(f"utterance cost must be >= 1, got {self.cost}")

    @property
    def kind(self) -> str:
        return self.provenance.kind


@dataclass(frozen=True)
class UtteranceSpace:
    game_id: str
    utterances: tuple[Utterance, ...]

    def __post_init__(self):
        object.__setattr__(self, "utterances", tuple(self.utterances))
        texts = [u.text for u in self.utterances]
        if len(set(texts)) != len(texts):
            raise RefGameError(f"duplicate utterance texts in space for {self.game_id!r}")

    def __len__(self):
        return len(self.utterances)

    def __iter__(self):
        return iter(self.utterances)

    @property
    def texts(self) -> list[str]:
        return [u.text for u in self.utterances]

    def counts(self) -> dict:
        out = {"logic": 0, "topk": 0}
        for u in self.utterances:
            out[u.kind] += 1
        return out


def enumerate_bundles(schema: AttributeSchema) -> list[FeatureBundle]:
    """Every element of the product over attributes of (domain + absent); absent last per slot."""
    names = schema.names
    slots = [tuple(feats) + (ABSENT,) for _, feats in schema.attributes]
    return [FeatureBundle(tuple(zip(names, combo))) for combo in itertools.product(*slots)]


def realize_bundle(bundle: FeatureBundle) -> str:
    """Noun phrase for a partial assignment.

    Absent type becomes "thing"; absent size or colour is dropped along with
    the comma; absent orientation drops the whole "facing" clause.
    """
    values = bundle.as_dict()
    extra = set(values) - set(TEMPLATE_ROLES)
    if extra:
        raise SchemaError(f"no template role for attribute(s) {sorted(extra)}")
    size, colour = values.get(SIZE), values.get(COLOUR)
    words = ["a"]
    if size is not None and colour is not None:
        words += [size.lower() + ",", colour.lower()]
    elif size is not None:
        words.append(size.lower())
    elif colour is not None:
        words.append(colour.lower())
    type_ = values.get(TYPE)
    words.append(type_.lower() if type_ is not None else "thing")
    if values.get(ORIENTATION) is not None:
        words += ["facing", values[ORIENTATION].lower()]
    return " ".join(words)


def word_count(text: str) -> int:
    return len(normalize_text(text).split())


def logical_utterances(game: ReferenceGame) -> UtteranceSpace:
    """Realized bundles subsumed by at least one object of the game."""
    out = []
    for bundle in enumerate_bundles(game.schema):
        if any(bundle.subsumed_by(o) for o in game.objects):
            text = realize_bundle(bundle)
            out.append(Utterance(text, LogicProvenance(bundle), word_count(text)))
    return UtteranceSpace(game.game_id, tuple(out))


_TRAILING_PUNCT = re.compile(r"[\s.,;:!?\"'`)\]]+$")
_LEADING_PUNCT = re.compile(r"^[\s\"'`(\[]+")


def normalize_text(text: str) -> str:
    """Trim, collapse whitespace, strip surrounding punctuation, lowercase."""
    text = " ".join(text.split())
    text = _TRAILING_PUNCT.sub("", text)
    text = _LEADING_PUNCT.sub("", text)
    return text.lower()


def ingest_topk(game: ReferenceGame, generations: Iterable) -> UtteranceSpace:
    """Normalize and deduplicate generated candidates, keeping the best rank of each text.

    ``generations`` holds ``(text, rank, score)`` triples (rank 1 is best);
    survivors keep their original rank.
    """
    gens = sorted(generations, key=lambda g: (g[1], g[0]))
    if not gens:
        log.warning("no generations for game %s; top-k space is empty", game.game_id)
        return UtteranceSpace(game.game_id, ())
    seen = {}
    for text, rank, score in gens:
        norm = normalize_text(text)
        if not norm or norm in seen:
            continue
        seen[norm] = (rank, text, score)
    out = []
    for norm, (rank, raw, score) in seen.items():
        out.append(Utterance(norm, TopKProvenance(int(rank), raw, score), word_count(norm)))
    return UtteranceSpace(game.game_id, tuple(out))


def merge_spaces(*spaces: UtteranceSpace) -> tuple[UtteranceSpace, int]:
    """Concatenate spaces in order, dropping later texts already present.

    Returns the merged space and the number of dropped duplicates.
    """
    if not spaces:
        raise RefGameError("nothing to merge")
    gid = spaces[0].game_id
    seen, out, dropped = set(), [], 0
    for space in spaces:
        if space.game_id != gid:
            raise RefGameError(f"cannot merge spaces of {gid!r} and {space.game_id!r}")
        for u in space:
            if u.text in seen:
                dropped += 1
                continue
            seen.add(u.text)
            out.append(u)
    return UtteranceSpace(gid, tuple(out)), dropped


def utterance_cost(u: Utterance | str, mode: str = WORD_COUNT, tokenizer=None, lexicon=None) -> float:
    """Length cost |u|.

    ``word-count`` counts whitespace-separated words of the normalized text.
    ``token-count`` needs ``tokenizer`` (a callable text -> token count).
    ``feature-count`` counts features: the bundle's present features for
    logic utterances, lexicon hits otherwise; floored at 1.
    """
    text = u if isinstance(u, str) else u.text
    if mode == WORD_COUNT:
        return word_count(text)
    if mode == TOKEN_COUNT:
        if tokenizer is None:
            raise RefGameError("token-count cost needs a tokenizer")
        return max(1, int(tokenizer(text)))
    if mode == FEATURE_COUNT:
        if not isinstance(u, str) and isinstance(u.provenance, LogicProvenance):
            n = u.provenance.bundle.n_features()
        elif lexicon is not None:
            n = len({feat for tok in lexicon.tokenize(text) for feat in lexicon.lookup(tok)})
        else:
            raise RefGameError("feature-count cost of free text needs a lexicon")
        return max(1, n)
    raise RefGameError(f"unknown cost mode {mode!r}")


# --- persistence -------------------------------------------------------------

def space_to_lines(space: UtteranceSpace) -> list[dict]:
    return [{"game_id": space.game_id, "text": u.text, "provenance": u.provenance.to_json(), "cost": u.cost}
            for u in space]


def spaces_from_records(records: Sequence[dict], schemas: dict | None = None) -> dict[str, UtteranceSpace]:
    """Group persisted utterance rows back into spaces, preserving row order."""
    grouped: dict[str, list] = {}
    for rec in records:
        schema = (schemas or {}).get(rec["game_id"])
        u = Utterance(rec["text"], provenance_from_json(rec["provenance"], schema), rec["cost"])
        grouped.setdefault(rec["game_id"], []).append(u)
    return {gid: UtteranceSpace(gid, tuple(us)) for gid, us in grouped.items()}


def write_spaces(spaces: Iterable[UtteranceSpace], path, header: dict | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        if header is not None:
            fh.write(json.dumps({"__header__": header}, separators=(",", ":")) + "\n")
        for space in spaces:
            for rec in space_to_lines(space):
                fh.write(json.dumps(rec, ensure_ascii=False, separators=(",", ":")) + "\n")


def read_spaces(path, schemas: dict | None = None) -> dict[str, UtteranceSpace]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                rec = json.loads(line)
                if "__header__" not in rec:
                    records.append(rec)
    return spaces_from_records(records, schemas)
