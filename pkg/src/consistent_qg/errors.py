"""Exception types shared across the pipeline, backends, and review service."""


class ConsistentError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(ConsistentError):
    """Invalid or incomplete configuration."""


class InputError(ConsistentError):
    """Malformed or unusable caller input (bad file, empty paragraph, ...)."""


class ProtocolError(ConsistentError):
    """A backend replied with a non-2xx status or a malformed payload."""

    def __init__(self, message: str, status: int | None = None, body: str | None = None):
        super().__init__(message)
        self.status = status
        self.body = body


class BackendUnavailable(ConsistentError):
    """A backend could not be reached within the retry budget."""

    def __init__(self, message: str, attempts: int = 0, endpoint: str = ""):
        super().__init__(message)
        self.attempts = attempts
        self.endpoint = endpoint


class PipelineUnavailable(ConsistentError):
    """Every generation backend failed; no candidates could be produced."""


class NoCodeExtractable(ConsistentError):
    """The text contains no content token to derive a control code from."""


class StateError(ConsistentError):
    """Illegal review-item transition for the item's current state."""


class ConflictError(ConsistentError):
    """Optimistic-concurrency version mismatch; the item changed underneath."""

    def __init__(self, message: str, current_version: int | None = None):
        super().__init__(message)
        self.current_version = current_version
