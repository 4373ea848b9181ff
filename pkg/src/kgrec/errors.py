"""Exception hierarchy shared by every stage of the pipeline."""


class KGError(Exception):
    """Base class for all errors raised by kgrec."""


class ValidationError(KGError):
    """Input data or configuration fails a contract check."""


class ConfigError(ValidationError):
    """Inconsistent or missing configuration."""


class ParseError(ValidationError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class RetryExhaustedError(KGError):
    """Negative sampling ran out of retries; ``partial`` holds what was produced."""

    def __init__(self, message, partial):
        super().__init__(message)
        self.partial = partial


class StageError(KGError):
    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage {stage!r} failed: {cause}")
