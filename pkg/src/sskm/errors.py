"""Exception hierarchy shared by every module."""


class SSKMError(Exception):
    """Base class for all library errors."""


class InvalidArgumentError(SSKMError, ValueError):
    pass


class SealedError(SSKMError):
    """Raised when ground-truth labels are read directly instead of via an oracle."""


class TrainingFailure(SSKMError):
    """A learner could not reach zero training error."""

    def __init__(self, message, pair=None, ring=None):
        super().__init__(message)
        self.pair = pair
        self.ring = ring


class NonSeparableError(TrainingFailure):
    pass


class PhaseExhaustedError(SSKMError):
    """D^2-sampling produced no points from any label that still lacks a center."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial if partial is not None else {}


class DegenerateRadiusError(SSKMError):
    pass


class GenerationError(SSKMError):
    pass


class ResourceLimitError(SSKMError):
    pass
