"""Client for OpenAI-compatible ``/completions`` endpoints that return log-probabilities.

All three queries go through the legacy completions route because it is the
one that supports ``echo`` (needed to score a forced continuation) and
top-n next-token log-probabilities on local inference servers.
"""

from __future__ import annotations

import logging
import math
import os
import random
import time
from dataclasses import asdict, dataclass
from typing import Sequence

import httpx

from ..errors import CapabilityError, ProtocolError, ReplayMissError, TransportError
from .base import BaseClient, ScoredSequence, rank_candidates, yes_no_from_top_logprobs
from .cache import ResponseCache
from .templates import CONTINUATION_SEPARATOR

log = logging.getLogger(__name__)

_RETRY_STATUS = {408, 409, 425, 429, 500, 502, 503, 504}
_CAPABILITY_HINTS = ("logprob", "beam", "echo", "best_of", "not supported", "unsupported")


@dataclass(frozen=True)
class ClientConfig:
    base_url: str = "http://localhost:8000/v1"
    model: str = "meta-llama/Meta-Llama-3-8B-Instruct"
    api_key_env: str = "OPENAI_API_KEY"
    timeout: float = 60.0
    max_retries: int = 4
    max_concurrent: int = 4
    cache_dir: str | None = None
    top_n: int = 20
    max_new_tokens: int = 16
    backoff_base: float = 0.5
    offline: bool = False
    sampling_fallback: bool = False
    sampling_temperature: float = 1.0

    def __post_init__(self):
        if self.max_concurrent < 1:
            raise ValueError("max_concurrent must be >= 1")
        if not 0 <= self.max_retries <= 20:
            raise ValueError("max_retries must be between 0 and 20")


def _join_start(start: str, continuation: str) -> str:
    if not continuation or continuation[0].isspace():
        return start + continuation
    return f"{start} {continuation}"


class OpenAICompatibleClient(BaseClient):
    def __init__(self, config: ClientConfig, transport: httpx.BaseTransport | None = None,
                 sleep=time.sleep):
        self.config = config
        self.max_concurrent = config.max_concurrent
        self.cache = ResponseCache(config.cache_dir) if config.cache_dir else None
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(config.api_key_env) if config.api_key_env else None
        if key:
            headers["Authorization"] = f"Bearer {key}"
        self._http = httpx.Client(base_url=config.base_url.rstrip("/"), headers=headers,
                                  timeout=config.timeout, transport=transport)
        self._sleep = sleep
        self.requests_sent = 0

    def close(self):
        self._http.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def identity(self) -> dict:
        return {"kind": "openai-compatible", "base_url": self.config.base_url, "model": self.config.model,
                "top_n": self.config.top_n, "max_new_tokens": self.config.max_new_tokens,
                "sampling_fallback": self.config.sampling_fallback,
                "generation": "sampling" if self.config.sampling_fallback else "beam"}

    # -- transport ---------------------------------------------------------

    def _complete(self, payload: dict) -> dict:
        request = {"route": "/completions", "payload": payload}
        if self.cache is not None:
            cached = self.cache.get(request)
            if cached is not None:
                return cached
        if self.config.offline:
            raise ReplayMissError("offline mode and no cached response for request")
        response = self._post_with_retries("/completions", payload)
        if self.cache is not None:
            self.cache.put(request, response)
        return response

    def _post_with_retries(self, path: str, payload: dict) -> dict:
        last = None
        for attempt in range(self.config.max_retries + 1):
            if attempt:
                delay = self.config.backoff_base * 2 ** (attempt - 1)
                self._sleep(delay * (1 + 0.1 * random.random()))
            try:
                self.requests_sent += 1
                r = self._http.post(path, json=payload)
            except httpx.TransportError as exc:
                last = exc
                log.warning("request failed (%s), attempt %d", exc, attempt + 1)
                continue
            if r.status_code in _RETRY_STATUS:
                last = f"HTTP {r.status_code}: {r.text[:200]}"
                continue
            if r.status_code >= 400:
                body = r.text[:500]
                if any(h in body.lower() for h in _CAPABILITY_HINTS):
                    raise CapabilityError(f"endpoint rejected request (HTTP {r.status_code}): {body}")
                raise ProtocolError(f"HTTP {r.status_code}: {body}")
            try:
                return r.json()
            except ValueError as exc:
                raise ProtocolError(f"response is not JSON: {r.text[:200]}") from exc
        raise TransportError(f"gave up after {self.config.max_retries + 1} attempts: {last}")

    @staticmethod
    def _choices(response: dict) -> list:
        choices = response.get("choices")
        if not choices:
            raise ProtocolError("response has no choices")
        return choices

    # -- queries -------------------------------------------------------------

    def score_sequence(self, context: str, utterance: str) -> ScoredSequence:
        prompt = context + CONTINUATION_SEPARATOR + utterance
        payload = {"model": self.config.model, "prompt": prompt, "max_tokens": 1, "temperature": 0,
                   "echo": True, "logprobs": 0}
        choice = self._choices(self._complete(payload))[0]
        lp = choice.get("logprobs") or {}
        tokens, values, offsets = lp.get("tokens"), lp.get("token_logprobs"), lp.get("text_offset")
        if not tokens or values is None or offsets is None:
            raise CapabilityError("endpoint returned no echoed prompt log-probabilities; "
                                  "sequence scoring needs echo + logprobs support")
        start, end = len(context), len(prompt)
        picked = []
        for tok, val, off in zip(tokens, values, offsets):
            if off >= end:
                break
            if off + len(tok) <= start:
                continue
            if val is None:
                raise ProtocolError(f"missing log-probability for utterance token {tok!r}")
            picked.append(val)
        if not picked:
            raise ProtocolError("no utterance tokens found in echoed prompt")
        return ScoredSequence.from_tokens(utterance, picked)

    def generate_topk(self, context: str, k: int, starts: Sequence[str] = ("a", "the")) -> list[tuple[str, int, float]]:
        candidates = []
        for start in starts:
            payload = {"model": self.config.model, "prompt": context + CONTINUATION_SEPARATOR + start,
                       "max_tokens": self.config.max_new_tokens, "n": k, "logprobs": 1, "stop": ["\n"]}
            if self.config.sampling_fallback:
                payload.update(temperature=self.config.sampling_temperature, seed=0)
            else:
                payload.update(temperature=0, best_of=k, use_beam_search=True)
            try:
                response = self._complete(payload)
            except CapabilityError as exc:
                raise CapabilityError(f"{exc}; n-best beam generation unsupported, retry with "
                                      "sampling_fallback=True (repeated constrained sampling)") from exc
            for choice in self._choices(response)[:k]:
                lp = (choice.get("logprobs") or {}).get("token_logprobs")
                if lp is None:
                    raise CapabilityError("generation returned no log-probabilities")
                total = math.fsum(v for v in lp if v is not None)
                candidates.append((_join_start(start, choice.get("text", "")), total))
        return rank_candidates(candidates)

    def yes_no_probability(self, prompt: str) -> tuple[float, float]:
        payload = {"model": self.config.model, "prompt": prompt, "max_tokens": 1, "temperature": 0,
                   "logprobs": self.config.top_n}
        choice = self._choices(self._complete(payload))[0]
        top = (choice.get("logprobs") or {}).get("top_logprobs")
        if not top or not isinstance(top[0], dict):
            raise ProtocolError("response carries no top next-token log-probabilities")
        return yes_no_from_top_logprobs(top[0])


def config_dict(config: ClientConfig) -> dict:
    return asdict(config)
