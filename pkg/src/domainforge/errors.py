"""Exception types shared across the package."""

from __future__ import annotations


class DomainForgeError(Exception):
    """Base class for all package errors."""


class ConfigurationError(DomainForgeError, ValueError):
    """A config value or combination of inputs violates a precondition."""


class CorpusFormatError(DomainForgeError, ValueError):
    """A corpus file is malformed. Carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class UnknownNgramError(DomainForgeError, KeyError):
    """The queried n-gram is not present in the statistics snapshot."""


class FormatError(DomainForgeError, ValueError):
    """A serialized artifact (snapshot, classifier model) failed validation."""


class UndefinedInputError(DomainForgeError, ValueError):
    """The requested quantity is undefined for the given input."""


class ServiceTransportError(DomainForgeError):
    """Could not reach the generation service. Safe to retry."""

    retriable = True


class ServiceGenerationError(DomainForgeError):
    """The service reported a generation failure. Not retriable."""

    retriable = False


class ServiceProtocolError(DomainForgeError):
    """The service reply does not match the wire contract."""


class VocabularyViolationError(DomainForgeError, ValueError):
    """A generated word falls outside the allowed vocabulary."""

    def __init__(self, words: tuple[str, ...]):
        self.words = words
        super().__init__(f"generated words outside the allowed vocabulary: {sorted(words)}")
