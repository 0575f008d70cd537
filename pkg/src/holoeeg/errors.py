"""Exception types shared across the package.

Anything derived from :class:`ValidationError` is a problem with the input
(bad data, bad config, unmet precondition). The CLI maps these to exit code 1
and every other exception to exit code 2.
"""


class ValidationError(ValueError):
    """Input rejected before or during processing."""


class NonFiniteError(ValidationError):
    pass


class TooShortError(ValidationError):
    pass


class InsufficientExtremaError(ValidationError):
    """Raised when a signal has too few extrema to build envelopes.

    Sifting treats this as the signal for stopping the decomposition.
    """


class SecondLevelSiftError(ValidationError):
    pass


class ConstantSignalError(ValidationError):
    pass


class DatasetError(ValidationError):
    """A dataset file or directory failed validation."""
