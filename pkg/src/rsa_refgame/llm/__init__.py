"""Everything that talks to a language model, plus an offline mock."""

from .base import BaseClient, ScoredSequence, rank_candidates, yes_no_from_top_logprobs
from .cache import ResponseCache, request_key
from .mock import MockClient
from .openai import ClientConfig, OpenAICompatibleClient
from .templates import (
    CONTINUATION_SEPARATOR,
    PromptTemplate,
    builtin_template,
    meaning_template,
    render_context,
)

__all__ = [
    "BaseClient", "ClientConfig", "CONTINUATION_SEPARATOR", "MockClient", "OpenAICompatibleClient",
    "PromptTemplate", "ResponseCache", "ScoredSequence", "builtin_template", "meaning_template",
    "rank_candidates", "render_context", "request_key", "yes_no_from_top_logprobs",
]
