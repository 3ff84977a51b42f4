"""Exception hierarchy shared across the toolkit.

The CLI maps ConfigError/ValidationError to exit code 1 (bad input) and
everything else derived from BabelError to exit code 2 (runtime failure).
"""


class BabelError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(BabelError):
    """Invalid configuration value, flag, or profile."""


class ValidationError(BabelError):
    """Runtime input violates a documented precondition."""


class ShapeError(ValidationError):
    """Array dimensions do not match the documented contract."""


class CapabilityError(BabelError):
    """Backend does not provide the requested capability or language."""


class NotReadyError(BabelError):
    """A trainable component was used before it was fitted."""


class NumericError(BabelError):
    """A non-finite value appeared mid-computation; message carries context."""


class ProtocolError(BabelError):
    """Remote backend violated the wire protocol or returned an error body."""


class CorpusError(BabelError):
    """Malformed corpus or profile file; message carries the line number."""


class TranslationError(BabelError):
    """A translation client failed after exhausting its retry policy."""


class RepairError(BabelError):
    """All repair candidates failed; message carries partial diagnostics."""
