"""Exception hierarchy shared across the package."""


class PolicyLensError(Exception):
    """Base class for all errors raised by policylens."""


class SchemaError(PolicyLensError):
    """Input file header does not match the documented schema."""


class RowError(PolicyLensError):
    """A data row failed validation.

    ``line`` is the 1-based physical line number in the source file.
    """

    def __init__(self, line, message):
        self.line = line
        super().__init__(f"line {line}: {message}")


class DuplicateKeyError(PolicyLensError):
    pass


class ConfigError(PolicyLensError):
    pass


class TrainingError(PolicyLensError):
    pass


class ModelFormatError(PolicyLensError):
    pass


class CollinearityError(PolicyLensError):
    def __init__(self, column, message=None):
        self.column = column
        super().__init__(message or f"regressor {column!r} is collinear with earlier columns")


class IdentificationError(PolicyLensError):
    """Too few usable observations to identify the fixed-effects model."""


class ConvergenceError(PolicyLensError):
    pass


class TableError(PolicyLensError):
    """Contingency table is too small or otherwise unusable for CA."""


class RenderError(PolicyLensError):
    pass
