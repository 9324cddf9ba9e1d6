"""Exception types raised across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain where a quantity is defined."""


class UnwrapError(ValueError):
    """Phase unwrapping hit a zero-magnitude sample."""

    def __init__(self, index: int):
        super().__init__(f"cannot unwrap phase: sample {index} has zero magnitude")
        self.index = index


class PeakAtBoundaryError(ValueError):
    """The envelope maximum sits on the first or last time sample."""


class NotApplicableError(ValueError):
    """A derived scale has no meaning for the requested regime."""


class ConfigError(ValueError):
    """Invalid or incomplete run configuration."""
