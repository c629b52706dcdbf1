from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

from ..errors import ProtocolError, RefGameError


@dataclass(frozen=True)
class ScoredSequence:
    """Log-probability of a forced continuation, token by token."""

    text: str
    token_logprobs: tuple[float, ...]
    total: float

    def __post_init__(self):
        object.__setattr__(self, "token_logprobs", tuple(float(x) for x in self.token_logprobs))
        if abs(self.total - math.fsum(self.token_logprobs)) > 1e-9:
            raise RefGameError("total log-probability does not equal the sum of token log-probabilities")

    @classmethod
    def from_tokens(cls, text: str, token_logprobs: Sequence[float]) -> "ScoredSequence":
        return cls(text, tuple(token_logprobs), math.fsum(token_logprobs))

    @property
    def n_tokens(self) -> int:
        return len(self.token_logprobs)


def rank_candidates(candidates: Iterable[tuple[str, float]]) -> list[tuple[str, int, float]]:
    """Order by total log-probability descending, ties lexicographically; ranks start at 1."""
    ordered = sorted(candidates, key=lambda c: (-c[1], c[0]))
    return [(text, rank, score) for rank, (text, score) in enumerate(ordered, 1)]


def is_yes(token: str) -> bool:
    return token.strip().lower() == "yes"


def is_no(token: str) -> bool:
    return token.strip().lower() == "no"


def yes_no_from_top_logprobs(top: dict[str, float]) -> tuple[float, float]:
    """Sum probabilities of every Yes/No spelling found among the top next tokens."""
    p_yes = math.fsum(math.exp(lp) for tok, lp in top.items() if is_yes(tok))
    p_no = math.fsum(math.exp(lp) for tok, lp in top.items() if is_no(tok))
    if not any(is_yes(t) or is_no(t) for t in top):
        raise ProtocolError(f"neither Yes nor No among the {len(top)} returned next tokens; "
                            "request a larger top-n (logprobs)")
    return p_yes, p_no


class BaseClient:
    """Shared plumbing; subclasses implement the three model queries."""

    max_concurrent = 1

    def score_sequence(self, context: str, utterance: str) -> ScoredSequence:
        raise NotImplementedError

    def generate_topk(self, context: str, k: int, starts: Sequence[str] = ("a", "the")) -> list[tuple[str, int, float]]:
        raise NotImplementedError

    def yes_no_probability(self, prompt: str) -> tuple[float, float]:
        raise NotImplementedError

    def identity(self) -> dict:
        raise NotImplementedError

    def count_tokens(self, text: str, context: str = "") -> int:
        return self.score_sequence(context, text).n_tokens

    def map(self, fn: Callable, items: Sequence) -> list:
        """Apply ``fn`` to ``items`` with at most ``max_concurrent`` calls in flight; order kept."""
        items = list(items)
        if self.max_concurrent <= 1 or len(items) <= 1:
            return [fn(x) for x in items]
        with ThreadPoolExecutor(max_workers=self.max_concurrent) as pool:
            return list(pool.map(fn, items))
