"""Exception hierarchy shared across the engine.

Every error raised by this package derives from :class:`AvllmError`, so
callers (CLI, HTTP service) can map library failures to exit codes and
status codes without enumerating modules. Errors raised while a pipeline
stage is running carry a ``stage`` attribute naming that stage.
"""

from __future__ import annotations


class AvllmError(Exception):
    """Base class for all package errors."""

    #: pipeline stage that raised, when known ("embed", "retrieve", "generate")
    stage: str | None = None


class EmptyInput(AvllmError):
    """Input text produced no usable tokens, or a required list was empty."""


class EmptyDataset(AvllmError):
    """A preference dataset with zero pairs was supplied."""


class UnknownPrompt(AvllmError):
    """A prompt id is not present in a policy's parameter table."""


class UnknownResponse(AvllmError):
    """A response is not in the candidate set of its prompt."""


class NonFiniteLoss(AvllmError):
    """Training produced NaN or infinite loss, typically a divergent learning rate."""


class DimensionMismatch(AvllmError):
    """Vector dimensions disagree between embedder, index, or query."""


class ZeroVector(AvllmError):
    """A zero-norm vector where a direction is required (cosine is undefined)."""


class InvalidChunking(AvllmError):
    """Chunking parameters violate overlap < size or size >= 1."""


class InvalidTemplate(AvllmError):
    """A prompt template is missing or duplicating a required placeholder."""


class FormatError(AvllmError):
    """A persisted file is malformed; message names the file and line."""

    def __init__(self, message: str, *, path: str | None = None, line: int | None = None):
        self.path = path
        self.line = line
        prefix = ""
        if path is not None:
            prefix = f"{path}:" if line is None else f"{path}:{line}: "
        elif line is not None:
            prefix = f"line {line}: "
        super().__init__(prefix + message)


class VersionError(FormatError):
    """A persisted file declares an unsupported format version."""


class TransportError(AvllmError):
    """A remote call failed at the network level after the configured retries."""


class ProtocolError(AvllmError):
    """A remote call returned a response that violates the wire contract."""


class AuthError(AvllmError):
    """A remote endpoint rejected the request as unauthorized (401/403)."""
