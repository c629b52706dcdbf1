"""Deterministic offline stand-in for an inference endpoint.

Every token gets a stable pseudo-probability from a keyed hash of
(seed, context, preceding tokens, token). Words that appear on the context
line marked ``(target)`` are favoured, so the mock prefers descriptions
that fit the target, loosely like a real model would.
"""

from __future__ import annotations

import hashlib
import math
import re
from typing import Callable, Sequence

from ..errors import ProtocolError
from .base import BaseClient, ScoredSequence, rank_candidates, yes_no_from_top_logprobs
from .templates import CONTINUATION_SEPARATOR

_TOKEN = re.compile(r"\w+|[^\w\s]")

FURNITURE_VOCABULARY = {
    "type": ("chair", "sofa", "desk", "fan"),
    "colour": ("blue", "red", "green", "grey"),
    "size": ("large", "small"),
    "orientation": ("left", "right", "front", "back"),
}

# Surface patterns for generated candidates, after the forced determiner.
_PATTERNS = (
    "{colour} {type}",
    "{size} {colour} {type}",
    "{size} {type}",
    "{type} facing {orientation}",
    "{colour} {type} facing {orientation}",
    "{type} on the {orientation}",
    "{colour} one",
    "{size} one",
)


def tokenize(text: str) -> list[str]:
    return _TOKEN.findall(text)


class MockClient(BaseClient):
    def __init__(self, seed: int = 0, constant_prob: float | None = None, vocabulary: dict | None = None,
                 judge: Callable[[str], int | None] | None = None, scripted: dict | None = None,
                 fixed_top: dict | None = None, punctuation_variants: bool = True):
        if constant_prob is not None and not 0 < constant_prob <= 1:
            raise ValueError("constant_prob must lie in (0, 1]")
        self.seed = seed
        self.constant_prob = constant_prob
        self.vocabulary = vocabulary or FURNITURE_VOCABULARY
        self.judge = judge
        self.scripted = dict(scripted or {})
        self.fixed_top = fixed_top
        self.punctuation_variants = punctuation_variants
        self.calls = {"score": 0, "generate": 0, "yes_no": 0}

    def identity(self) -> dict:
        return {"kind": "mock", "seed": self.seed, "constant_prob": self.constant_prob,
                "judge": self.judge is not None, "scripted_prompts": len(self.scripted)}

    def _unit(self, *parts: str) -> float:
        h = hashlib.blake2b(digest_size=8, key=str(self.seed).encode())
        for p in parts:
            h.update(p.encode("utf-8"))
            h.update(b"\x1f")
        return int.from_bytes(h.digest(), "big") / 2.0 ** 64

    @staticmethod
    def _target_words(context: str) -> set[str]:
        for line in context.splitlines():
            if "(target)" in line:
                return set(tokenize(line.lower()))
        return set()

    def _token_logprobs(self, context: str, tokens: Sequence[str]) -> list[float]:
        if self.constant_prob is not None:
            return [math.log(self.constant_prob)] * len(tokens)
        ctx = hashlib.sha256(context.encode("utf-8")).hexdigest()
        favoured = self._target_words(context)
        out = []
        for i, tok in enumerate(tokens):
            u = self._unit(ctx, " ".join(tokens[:i]), tok)
            p = 0.5 + 0.45 * u if tok.lower() in favoured else 0.05 + 0.45 * u
            out.append(math.log(p))
        return out

    def score_sequence(self, context: str, utterance: str) -> ScoredSequence:
        self.calls["score"] += 1
        return ScoredSequence.from_tokens(utterance, self._token_logprobs(context, tokenize(utterance)))

    def _pool(self, context: str) -> list[str]:
        words = set(tokenize(context.lower()))
        vocab = {role: [w for w in feats if w in words] or list(feats) for role, feats in self.vocabulary.items()}
        pool = set()
        for pattern in _PATTERNS:
            roles = re.findall(r"\{(\w+)\}", pattern)
            combos = [{}]
            for role in roles:
                combos = [dict(c, **{role: w}) for c in combos for w in vocab.get(role, ())]
            pool.update(pattern.format(**c) for c in combos)
        return sorted(pool)

    def generate_topk(self, context: str, k: int, starts: Sequence[str] = ("a", "the")) -> list[tuple[str, int, float]]:
        """Best ``k`` continuations per start; scores exclude the forced determiner."""
        self.calls["generate"] += 1
        candidates = []
        for start in starts:
            prompt = context + CONTINUATION_SEPARATOR + start
            options = []
            for phrase in self._pool(context):
                variants = [phrase, phrase + "."] if self.punctuation_variants else [phrase]
                for v in variants:
                    options.append((f"{start} {v}", math.fsum(self._token_logprobs(prompt, tokenize(v)))))
            options.sort(key=lambda c: (-c[1], c[0]))
            candidates.extend(options[:k])
        return rank_candidates(candidates)

    def next_token_logprobs(self, prompt: str) -> dict[str, float]:
        if prompt in self.scripted:
            return dict(self.scripted[prompt])
        if self.fixed_top is not None:
            return dict(self.fixed_top)
        u = self._unit("yes-no", prompt)
        truth = self.judge(prompt) if self.judge is not None else None
        if truth is None:
            p_yes = 0.1 + 0.8 * u
        elif truth:
            p_yes = 0.7 + 0.25 * u
        else:
            p_yes = 0.02 + 0.25 * u
        p_other = 0.02
        p_no = 1.0 - p_yes - p_other
        return {" Yes": math.log(p_yes), " No": math.log(p_no), " Maybe": math.log(p_other)}

    def yes_no_probability(self, prompt: str) -> tuple[float, float]:
        self.calls["yes_no"] += 1
        top = self.next_token_logprobs(prompt)
        if not top:
            raise ProtocolError("scripted response has no next-token probabilities")
        return yes_no_from_top_logprobs(top)
