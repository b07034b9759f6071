"""Typed errors for the evidence exporters.

Every failure the adapters can hit maps to one of these classes so batch
drivers and the CLI can decide between "this episode failed" and "this run
cannot continue" by type alone.
"""


class AdapterError(Exception):
    """Base class for all ewmadapters errors."""


class MissingInput(AdapterError):
    """An input file or directory the exporter needs does not exist."""


class DecodeFailure(AdapterError):
    """A video container exists but cannot be decoded into frames."""


class EncoderLoadFailure(AdapterError):
    """An encoder identifier is unknown or the encoder failed to initialize."""


class EndpointFailure(AdapterError):
    """The description endpoint stayed unreachable through all retries."""


class SchemaViolation(AdapterError):
    """An endpoint response does not match the documented reply schema."""


class FormatError(AdapterError):
    """An input file does not parse as its documented format."""


class UsageError(AdapterError):
    """Arguments are structurally invalid (empty captions, bad stride...)."""
