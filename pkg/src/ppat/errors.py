"""Shared exception types for the ppat toolkit."""


class PpatError(Exception):
    """Base class for all toolkit errors."""


class SchemaError(PpatError):
    """A document failed validation; carries the offending field path."""

    def __init__(self, field: str, message: str):
        self.field = field
        self.message = message
        super().__init__(f"{field}: {message}")


class EmptySketch(PpatError):
    """A sketch with zero strokes was supplied where at least one is required."""


class ShapeMismatch(PpatError):
    """Tensor shapes are inconsistent with the requested operation."""


class LabelOutOfRange(PpatError):
    """A class index lies outside the logit vector."""


class NonScalarLoss(PpatError):
    """backward() was called on a tensor that is not a scalar."""


class TapeConsumed(PpatError):
    """backward() was called twice on the same recorded graph."""


class EmptyDataset(PpatError):
    """A training routine received no records."""


class NonFiniteLoss(PpatError):
    """Training produced a NaN or infinite loss; aborted with diagnostics."""


class TooFewRecords(PpatError):
    """Not enough records per class to build the requested folds."""


class LengthMismatch(PpatError):
    """Paired sequences have different lengths."""


class ItemOutOfRange(PpatError):
    """A questionnaire item lies outside its allowed range."""


class InvalidFraction(PpatError):
    """A fraction parameter lies outside (0, 1)."""


class TemplateError(PpatError):
    """A prompt template is malformed."""


class ProviderTimeout(PpatError):
    """The caption provider timed out after all retries."""


class ProviderRejection(PpatError):
    """The caption provider rejected the request; not retried."""


class CacheIOError(PpatError):
    """The caption cache could not be read or written."""


class InvalidSwitchCombination(PpatError):
    """An ablation switch combination has no defined run configuration."""
