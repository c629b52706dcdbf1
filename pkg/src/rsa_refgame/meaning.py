"""Meaning functions M(u, o) in [0, 1] and the tools to evaluate them against labels."""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import LLMError, ProtocolError, RefGameError, SchemaError, ScoringError
from .llm.templates import PromptTemplate, meaning_template
from .utterance import Utterance, UtteranceSpace
from .world import FURNITURE, AttributeSchema, ObjectDescription, ReferenceGame, realize_description

RULE = "rule"
PROMPT = "prompt"
MF_KINDS = (RULE, PROMPT)

_PUNCT = re.compile(r"[^\w\s]")


class Lexicon:
    """Word -> (attribute, feature) relation; a word may name several features."""

    def __init__(self, entries):
        self.entries = frozenset((w.lower(), a, f) for w, a, f in entries)
        index: dict[str, list] = {}
        for w, a, f in sorted(self.entries):
            index.setdefault(w, []).append((a, f))
        self._index = {w: tuple(v) for w, v in index.items()}

    def lookup(self, word: str) -> tuple[tuple[str, str], ...]:
        return self._index.get(word.lower(), ())

    @staticmethod
    def tokenize(text: str) -> list[str]:
        return _PUNCT.sub(" ", text.lower()).split()

    def __len__(self):
        return len(self.entries)

    def __contains__(self, word):
        return word.lower() in self._index

    def violations(self, schema: AttributeSchema) -> list[str]:
        out = []
        for w, a, f in sorted(self.entries):
            if a not in schema:
                out.append(f"{w!r}: unknown attribute {a!r}")
            elif f not in schema.domain(a):
                out.append(f"{w!r}: feature {f!r} not in domain of {a!r}")
        for a, feats in schema.attributes:
            for f in feats:
                if (f.lower(), a, f) not in self.entries:
                    out.append(f"feature word {f!r} ({a}) not covered")
        return out

    def check(self, schema: AttributeSchema) -> None:
        problems = self.violations(schema)
        if problems:
            raise SchemaError("lexicon invalid for schema: " + "; ".join(problems))

    def to_tsv(self) -> str:
        return "".join(f"{w}\t{a}\t{f}\n" for w, a, f in sorted(self.entries))

    @property
    def hash(self) -> str:
        return hashlib.sha256(self.to_tsv().encode("utf-8")).hexdigest()

    @classmethod
    def parse_tsv(cls, text: str) -> "Lexicon":
        entries = []
        for n, line in enumerate(text.splitlines(), 1):
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.rstrip("\n").split("\t")
            if len(parts) != 3:
                raise RefGameError(f"lexicon line {n}: expected word<TAB>attribute<TAB>feature")
            entries.append(tuple(p.strip() for p in parts))
        return cls(entries)

    @classmethod
    def from_file(cls, path) -> "Lexicon":
        return cls.parse_tsv(Path(path).read_text(encoding="utf-8"))

    @classmethod
    def from_schema(cls, schema: AttributeSchema) -> "Lexicon":
        return cls((f.lower(), a, f) for a, feats in schema.attributes for f in feats)

    @classmethod
    def default(cls, schema: AttributeSchema = FURNITURE) -> "Lexicon":
        """Shipped furniture lexicon with synonyms, plus the feature words of ``schema``."""
        text = resources.files("rsa_refgame.data").joinpath("lexicon_furniture.tsv").read_text(encoding="utf-8")
        shipped = cls.parse_tsv(text)
        own = cls.from_schema(schema)
        keep = [(w, a, f) for w, a, f in shipped.entries if a in schema and f in schema.domain(a)]
        return cls(set(keep) | own.entries)


def _text(u) -> str:
    return u if isinstance(u, str) else u.text


def rule_meaning(u: Utterance | str, o: ObjectDescription, lex: Lexicon) -> int:
    """0 iff some word of ``u`` names a feature the object does not have.

    Words outside the lexicon carry no evidence, so negation and other
    function words are invisible to this meaning function.
    """
    for token in lex.tokenize(_text(u)):
        for attribute, feature in lex.lookup(token):
            if o.get(attribute) != feature:
                return 0
    return 1


def yes_ratio(p_yes: float, p_no: float) -> float:
    total = p_yes + p_no
    if not total > 0:
        raise ProtocolError("both Yes and No have zero probability")
    return p_yes / total


def prompt_meaning(u: Utterance | str, o: ObjectDescription, client, shots: int = 3,
                   template: PromptTemplate | None = None, game_id: str | None = None,
                   object_index: int | None = None) -> float:
    """P(Yes) / (P(Yes) + P(No)) for an n-shot truth-judgement prompt."""
    template = template or meaning_template(shots)
    prompt = template.render(object_description=realize_description(o), utterance=_text(u))
    try:
        p_yes, p_no = client.yes_no_probability(prompt)
        return yes_ratio(p_yes, p_no)
    except LLMError as exc:
        raise ScoringError(game_id, _text(u), object_index, exc) from exc


@dataclass(frozen=True)
class MeaningMatrix:
    """|U| x |O| literal-truth scores for one game."""

    game_id: str
    utterances: tuple[str, ...]
    n_objects: int
    values: np.ndarray
    kind: str
    template_hash: str | None = None

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.shape != (len(self.utterances), self.n_objects):
            raise RefGameError(f"matrix shape {vals.shape} != ({len(self.utterances)}, {self.n_objects})")
        if vals.size and (vals.min() < 0 or vals.max() > 1 or np.isnan(vals).any()):
            raise RefGameError("meaning values must lie in [0, 1]")
        if self.kind == RULE and not np.isin(vals, (0.0, 1.0)).all():
            raise RefGameError("rule meaning values must be 0 or 1")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "utterances", tuple(self.utterances))

    def __eq__(self, other):
        if not isinstance(other, MeaningMatrix):
            return NotImplemented
        return (self.game_id, self.utterances, self.n_objects, self.kind, self.template_hash) == \
            (other.game_id, other.utterances, other.n_objects, other.kind, other.template_hash) \
            and np.array_equal(self.values, other.values)

    __hash__ = None

    def key(self) -> tuple:
        return (self.game_id, self.kind, self.template_hash)

    def to_json(self) -> dict:
        return {"game_id": self.game_id, "mf_kind": self.kind, "template_hash": self.template_hash,
                "utterances": list(self.utterances), "n_objects": self.n_objects,
                "values": self.values.tolist()}

    @classmethod
    def from_json(cls, d) -> "MeaningMatrix":
        return cls(d["game_id"], tuple(d["utterances"]), d["n_objects"],
                   np.array(d["values"], dtype=float).reshape(len(d["utterances"]), d["n_objects"]),
                   d["mf_kind"], d.get("template_hash"))


def degenerate_counts(matrices) -> dict:
    """Utterances true of no object, per meaning-function kind; RSA drops them."""
    out = {}
    for m in matrices:
        out[m.kind] = out.get(m.kind, 0) + int((np.asarray(m.values).sum(axis=1) <= 0).sum())
    return dict(sorted(out.items()))


def rule_matrix(game: ReferenceGame, space: UtteranceSpace, lex: Lexicon) -> MeaningMatrix:
    vals = [[rule_meaning(u, o, lex) for o in game.objects] for u in space]
    return MeaningMatrix(game.game_id, tuple(space.texts), len(game.objects),
                         np.array(vals, dtype=float).reshape(len(space), len(game.objects)),
                         RULE, lex.hash)


def prompt_matrix(game: ReferenceGame, space: UtteranceSpace, client, shots: int = 3,
                  template: PromptTemplate | None = None) -> MeaningMatrix:
    """Prompt-based meaning for every (utterance, object) pair, queried through ``client.map``."""
    template = template or meaning_template(shots)
    pairs = [(i, j, u, o) for i, u in enumerate(space) for j, o in enumerate(game.objects)]

    def one(pair):
        i, j, u, o = pair
        return prompt_meaning(u, o, client, shots, template, game.game_id, j)

    scores = client.map(one, pairs)
    vals = np.zeros((len(space), len(game.objects)))
    for (i, j, _, _), s in zip(pairs, scores):
        vals[i, j] = s
    return MeaningMatrix(game.game_id, tuple(space.texts), len(game.objects), vals, PROMPT, template.hash)


def write_matrices(matrices, path, header: dict | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        if header is not None:
            fh.write(json.dumps({"__header__": header}, separators=(",", ":")) + "\n")
        for m in matrices:
            fh.write(json.dumps(m.to_json(), separators=(",", ":")) + "\n")


def read_matrices(path) -> dict[tuple, MeaningMatrix]:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                rec = json.loads(line)
                if "__header__" not in rec:
                    m = MeaningMatrix.from_json(rec)
                    out[m.key()] = m
    return out


# --- evaluation against labelled data -------------------------------------------

@dataclass(frozen=True)
class MFEvalReport:
    accuracy: float | None
    precision: float | None
    recall: float | None
    tp: int
    fp: int
    tn: int
    fn: int
    threshold: float | None = None

    @property
    def n(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def to_json(self) -> dict:
        return {"accuracy": self.accuracy, "precision": self.precision, "recall": self.recall,
                "threshold": self.threshold,
                "counts": {"tp": self.tp, "fp": self.fp, "tn": self.tn, "fn": self.fn}}


def binarize(score: float, threshold: float) -> int:
    return int(score >= threshold)


def _ratio(num: int, den: int) -> float | None:
    return num / den if den else None


def evaluate_mf(predicted: Sequence[int], truth: Sequence[int], threshold: float | None = None) -> MFEvalReport:
    if len(predicted) != len(truth):
        raise RefGameError(f"length mismatch: {len(predicted)} predictions vs {len(truth)} labels")
    tp = fp = tn = fn = 0
    for p, t in zip(predicted, truth):
        if p and t:
            tp += 1
        elif p:
            fp += 1
        elif t:
            fn += 1
        else:
            tn += 1
    return MFEvalReport(_ratio(tp + tn, tp + fp + tn + fn), _ratio(tp, tp + fp), _ratio(tp, tp + fn),
                        tp, fp, tn, fn, threshold)


def sweep_threshold(scores: Sequence[float], truth: Sequence[int]) -> tuple[float, MFEvalReport]:
    """Accuracy-maximizing threshold among observed scores plus 0 and 1.

    Thresholds inducing the same predictions are one candidate, represented by
    the largest of them (the lowest score still predicted positive). Between
    candidates of equal accuracy the smaller threshold wins.
    """
    if not len(scores):
        raise RefGameError("cannot sweep thresholds over no scores")
    if len(scores) != len(truth):
        raise RefGameError("scores and labels differ in length")
    s = np.asarray(scores, dtype=float)
    candidates = sorted(set(s.tolist()) | {0.0, 1.0})
    classes: dict[bytes, float] = {}
    for t in candidates:
        key = (s >= t).tobytes()
        classes[key] = max(t, classes.get(key, t))
    best_t, best_report = None, None
    for t in sorted(classes.values()):
        report = evaluate_mf([binarize(x, t) for x in s], truth, threshold=t)
        if best_report is None or report.accuracy > best_report.accuracy:
            best_t, best_report = t, report
    return best_t, best_report


def load_labels(path) -> list[dict]:
    """Read a label file: one JSON object per line with ``object``, ``utterance``, ``label``."""
    p = Path(path)
    if not p.is_file():
        raise RefGameError(f"label file not found: {p}")
    rows = []
    for n, line in enumerate(p.read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        rec = json.loads(line)
        try:
            rows.append({"object": rec["object"], "utterance": rec["utterance"], "label": int(rec["label"])})
        except KeyError as exc:
            raise RefGameError(f"{p}:{n}: missing field {exc}") from exc
    return rows


def bundled_labels(name: str) -> Path:
    """Path of a shipped label fixture (``logic``, ``topk``)."""
    ref = resources.files("rsa_refgame.data").joinpath("labels", f"{name}.jsonl")
    return Path(str(ref))


_OBJECT_LINE = re.compile(r"^Object:\s*(.+)$", re.M)
_DESCRIPTION_LINE = re.compile(r"^Description:\s*(.+)$", re.M)


def rule_judge(lex: Lexicon, schema: AttributeSchema = FURNITURE):
    """Callable reading the final Object/Description pair of a judgement prompt and
    answering with the rule-based meaning; used to drive the mock client."""
    from .world import parse_description

    def judge(prompt: str):
        objs, descs = _OBJECT_LINE.findall(prompt), _DESCRIPTION_LINE.findall(prompt)
        if not objs or not descs:
            return None
        try:
            obj = parse_description(objs[-1], schema)
        except SchemaError:
            return None
        return rule_meaning(descs[-1], obj, lex)

    return judge
