"""Exception hierarchy shared by the library and the CLI."""


class PipelineError(Exception):
    """Base class for all errors raised by nidspipe."""


class ConfigError(PipelineError):
    """Invalid or missing configuration value."""


class DataError(PipelineError, ValueError):
    """Input data does not satisfy an operation's preconditions."""


class SchemaMismatch(DataError):
    """Column set of a dataset disagrees with the expected schema."""


class ModelFormatError(DataError):
    """A serialized model file is corrupt, mis-versioned or incompatible."""


class UnsupportedError(PipelineError):
    """Requested capability is not available for this model variant."""


class TrainingDivergence(PipelineError):
    """Optimization produced a non-finite loss."""

    def __init__(self, epoch, message=None):
        self.epoch = epoch
        super().__init__(message or f"non-finite loss at epoch {epoch}")


class StageError(PipelineError):
    """A pipeline stage failed; wraps the underlying cause."""

    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage '{stage}' failed: {type(cause).__name__}: {cause}")
