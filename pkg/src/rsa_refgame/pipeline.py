"""The three pipeline stages as library calls, plus the run manifest that envelopes them."""

from __future__ import annotations

import datetime as _dt
import hashlib
import json
import logging
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from . import __version__
from .analysis import build_records
from .corpus import Corpus
from .errors import RefGameError
from .llm.templates import PromptTemplate, builtin_template, meaning_template, render_context
from .meaning import PROMPT, RULE, Lexicon, prompt_matrix, rule_matrix
from .utterance import TOKEN_COUNT, UtteranceSpace, ingest_topk, logical_utterances, merge_spaces

log = logging.getLogger(__name__)

DEFAULT_K = 15
DEFAULT_STARTS = ("a", "the")


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _timestamp() -> str:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    when = _dt.datetime.fromtimestamp(int(epoch), _dt.timezone.utc) if epoch else _dt.datetime.now(_dt.timezone.utc)
    return when.strftime("%Y-%m-%dT%H:%M:%SZ")


@dataclass
class RunManifest:
    """Everything that determines a stage's output.

    ``sha256`` covers every field except ``timestamps``, so reruns with the same
    inputs and settings carry the same hash whenever they happened.
    """

    stage: str
    tool_version: str = __version__
    corpus_hash: str = "n/a"
    lexicon_hash: str = "n/a"
    template_hashes: dict = field(default_factory=dict)
    endpoint: dict = field(default_factory=lambda: {"kind": "none"})
    k: int | str = "n/a"
    starts: list | str = "n/a"
    alphas: list | str = "n/a"
    cost_mode: str = "n/a"
    llm_score_mode: str = "n/a"
    settings: dict = field(default_factory=dict)
    inputs: dict = field(default_factory=dict)
    timestamps: dict = field(default_factory=dict)

    def check_complete(self) -> None:
        missing = [k for k, v in asdict(self).items() if v is None]
        if missing:
            raise RefGameError(f"run manifest incomplete: {missing}")

    def content(self) -> dict:
        d = asdict(self)
        d.pop("timestamps")
        return d

    @property
    def sha256(self) -> str:
        blob = json.dumps(self.content(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()

    def header(self) -> dict:
        return {"manifest_sha256": self.sha256, "stage": self.stage}

    def write(self, path) -> Path:
        self.check_complete()
        if "created" not in self.timestamps:
            self.timestamps["created"] = _timestamp()
        d = asdict(self)
        d["sha256"] = self.sha256
        p = Path(path)
        p.write_text(json.dumps(d, indent=1, sort_keys=True) + "\n", encoding="utf-8")
        return p

    @classmethod
    def read(cls, path) -> "RunManifest":
        d = json.loads(Path(path).read_text(encoding="utf-8"))
        d.pop("sha256", None)
        return cls(**d)


# --- stage 1: utterance spaces ----------------------------------------------------

def build_spaces(corpus: Corpus, mode: str = "logic", client=None, k: int = DEFAULT_K,
                 starts: Sequence[str] = DEFAULT_STARTS, template: PromptTemplate | None = None
                 ) -> tuple[dict[str, UtteranceSpace], dict]:
    """Utterance space per game. ``mode`` is ``logic``, ``topk`` or ``both``."""
    if mode not in ("logic", "topk", "both"):
        raise RefGameError(f"unknown utterance mode {mode!r}")
    if mode != "logic" and client is None:
        raise RefGameError("top-k utterances need an LLM client (or the mock)")
    template = template or builtin_template("topk")
    games = list(corpus.games)
    topk = {}
    if mode in ("topk", "both"):
        def gen(game):
            return game.game_id, ingest_topk(game, client.generate_topk(render_context(game, template), k, starts))
        topk = dict(client.map(gen, games))
    spaces, stats = {}, {"logic": 0, "topk": 0, "cross_duplicates_dropped": 0, "games": len(games)}
    for game in games:
        parts = []
        if mode in ("logic", "both"):
            parts.append(logical_utterances(game))
        if mode in ("topk", "both"):
            parts.append(topk[game.game_id])
        space, dropped = merge_spaces(*parts)
        spaces[game.game_id] = space
        stats["cross_duplicates_dropped"] += dropped
        for kind, n in space.counts().items():
            stats[kind] += n
    return spaces, stats


# --- stage 2: scoring ---------------------------------------------------------------

@dataclass
class ScoreOutputs:
    llm_rows: list[dict]
    llm_logprobs: dict
    token_counts: dict
    matrices: dict
    records: list


def score_llm(corpus: Corpus, spaces: Mapping[str, UtteranceSpace], client, paper_faithful: bool = False,
              template: PromptTemplate | None = None) -> tuple[list[dict], dict]:
    """Total log-probability of every utterance under each object's context.

    With ``paper_faithful`` the generation-time score is reused for top-k
    utterances under their own game's target; everything else is rescored.
    """
    template = template or builtin_template("topk")
    tasks = []
    for game in corpus.games:
        space = spaces[game.game_id]
        for o in range(len(game.objects)):
            ctx = render_context(game.with_target(o), template)
            for i, u in enumerate(space):
                reuse = (paper_faithful and o == game.target_index and u.kind == "topk"
                         and u.provenance.score is not None)
                tasks.append((game.game_id, o, i, u, ctx, reuse))

    def one(task):
        gid, o, i, u, ctx, reuse = task
        if reuse:
            return {"game_id": gid, "object_index": o, "utterance": u.text, "logprob": float(u.provenance.score),
                    "n_tokens": None, "source": "generation"}
        s = client.score_sequence(ctx, u.text)
        return {"game_id": gid, "object_index": o, "utterance": u.text, "logprob": s.total,
                "n_tokens": s.n_tokens, "source": "rescored"}

    rows = client.map(one, tasks)
    logprobs: dict = {}
    for row in rows:
        logprobs.setdefault((row["game_id"], row["object_index"]), []).append(row["logprob"])
    return rows, logprobs


def token_counts_for(spaces: Mapping[str, UtteranceSpace], client) -> dict:
    return {gid: [client.count_tokens(u.text) for u in space] for gid, space in spaces.items()}


def score_corpus(corpus: Corpus, spaces: Mapping[str, UtteranceSpace], client, mf_kinds: Sequence[str],
                 alphas: Sequence[float], cost_mode: str, lexicon: Lexicon, shots: int = 3,
                 paper_faithful: bool = False, topk_template: PromptTemplate | None = None,
                 mf_template: PromptTemplate | None = None) -> ScoreOutputs:
    llm_rows, logprobs = score_llm(corpus, spaces, client, paper_faithful, topk_template)
    tokens = token_counts_for(spaces, client) if cost_mode == TOKEN_COUNT else {}
    matrices = {}
    for game in corpus.games:
        space = spaces[game.game_id]
        for mf in mf_kinds:
            if mf == RULE:
                matrices[(game.game_id, mf)] = rule_matrix(game, space, lexicon)
            elif mf == PROMPT:
                matrices[(game.game_id, mf)] = prompt_matrix(game, space, client, shots,
                                                             mf_template or meaning_template(shots))
            else:
                raise RefGameError(f"unknown meaning function {mf!r}")
    games = {g.game_id: g for g in corpus.games}
    records = build_records(games, spaces, matrices, logprobs, alphas, mf_kinds, cost_mode, tokens, lexicon)
    return ScoreOutputs(llm_rows, logprobs, tokens, matrices, records)


def write_jsonl(rows, path, header: dict | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        if header is not None:
            fh.write(json.dumps({"__header__": header}, separators=(",", ":")) + "\n")
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False, separators=(",", ":")) + "\n")


def read_jsonl(path) -> list[dict]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                rec = json.loads(line)
                if "__header__" not in rec:
                    out.append(rec)
    return out


def logprobs_from_rows(rows: Sequence[dict], spaces: Mapping[str, UtteranceSpace]) -> dict:
    """Rebuild the (game, object) -> aligned log-probability lists from persisted rows."""
    by_key = {(r["game_id"], r["object_index"], r["utterance"]): r["logprob"] for r in rows}
    out = {}
    objects = {}
    for r in rows:
        objects.setdefault(r["game_id"], set()).add(r["object_index"])
    for gid, objs in objects.items():
        for o in sorted(objs):
            out[(gid, o)] = [by_key[(gid, o, t)] for t in spaces[gid].texts]
    return out
