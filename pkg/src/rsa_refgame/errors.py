"""Exception hierarchy shared by every module of the toolkit."""


class RefGameError(Exception):
    """Base class for all toolkit errors."""


class SchemaError(RefGameError):
    """An object or bundle does not fit its attribute schema."""


class IngestionError(RefGameError):
    """A TUNA trial could not be turned into reference games."""


class EmptyTrialError(IngestionError):
    pass


class CapacityError(RefGameError):
    """More distinct objects were requested than the schema can express."""


class DimensionError(RefGameError):
    pass


class UnreachableObjectError(RefGameError):
    def __init__(self, object_index, message=None):
        self.object_index = object_index
        super().__init__(message or f"object {object_index} has zero listener mass under every utterance")


class TemplateError(RefGameError):
    """A prompt template has placeholders that cannot be resolved."""


class LLMError(RefGameError):
    """Base class for failures at the inference-endpoint boundary."""


class TransportError(LLMError):
    pass


class CapabilityError(LLMError):
    """The endpoint lacks a feature the operation needs (n-best, logprobs)."""


class ProtocolError(LLMError):
    """The endpoint answered, but not with what the operation needs."""


class ReplayMissError(LLMError):
    """Offline replay was requested and the cache has no entry for the request."""


class ScoringError(RefGameError):
    """A meaning-function query failed; carries the (game, utterance, object) identity."""

    def __init__(self, game_id, utterance, object_index, cause):
        self.game_id = game_id
        self.utterance = utterance
        self.object_index = object_index
        self.cause = cause
        super().__init__(
            f"scoring failed for game={game_id!r} utterance={utterance!r} "
            f"object={object_index}: {cause}"
        )
