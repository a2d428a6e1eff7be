"""Exception hierarchy shared across the package."""


class StorytellerError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(StorytellerError):
    """Invalid or incomplete run configuration (exit code 2 at the CLI)."""


class DataError(StorytellerError):
    """Malformed dataset input. Carries the offending line when known."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class NonFiniteError(StorytellerError):
    """A NaN or Inf was produced or supplied; the step is aborted."""


class CheckpointError(StorytellerError):
    """Base class for checkpoint load failures."""


class CheckpointCorruptError(CheckpointError):
    """File does not start with the expected magic or is internally inconsistent."""


class CheckpointVersionError(CheckpointError):
    """File uses a format version this code does not read."""


class CheckpointTruncatedError(CheckpointError):
    """File ends before the declared content is complete."""
