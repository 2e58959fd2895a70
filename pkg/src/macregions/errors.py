"""Exception hierarchy shared by all modules."""


class MacRegionsError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(MacRegionsError, ValueError):
    """Malformed input: bad probabilities, size mismatch, unknown names."""


class ResourceLimitError(MacRegionsError, RuntimeError):
    """A dense tensor or codebook would exceed the configured cell cap."""
