"""Exception hierarchy. Each family maps to a distinct CLI exit code."""


class EoslError(Exception):
    exit_code = 1


class IngestionError(EoslError):
    """A file could not be read or parsed."""

    exit_code = 3

    def __init__(self, path, reason):
        self.path = str(path)
        super().__init__(f"{self.path}: {reason}")


class ValidationError(EoslError, ValueError):
    exit_code = 4


class DimensionError(ValidationError):
    pass


class EmptyTextError(ValidationError):
    pass


class WindowError(ValidationError):
    pass


class MalformedTraceError(ValidationError):
    pass


class ComputationError(EoslError, ArithmeticError):
    exit_code = 5


class UndefinedSimilarityError(ComputationError):
    """Similarity of a zero-norm vector. Callers must not read this as 0."""


class TruncatedSequenceError(ComputationError):
    pass
