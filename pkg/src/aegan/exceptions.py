"""Exception hierarchy shared by every module of the package."""


class AeganError(Exception):
    """Base class for all errors raised by aegan."""

    code = "aegan_error"


class SchemaError(AeganError, ValueError):
    code = "schema_error"


class DegenerateColumnError(SchemaError):
    code = "degenerate_column"


class DataError(AeganError, ValueError):
    """A cell or file does not conform to the declared schema.

    ``column`` and ``row`` locate the offending cell when known; ``row`` is the
    zero-based data row index (the header is not counted).
    """

    code = "data_error"

    def __init__(self, message, column=None, row=None):
        super().__init__(message)
        self.column = column
        self.row = row


class UnknownCategoryError(DataError):
    code = "unknown_category"


class StratificationError(AeganError, ValueError):
    code = "stratification_error"


class ReportVersionError(AeganError, ValueError):
    code = "report_version"


class TrainingDivergenceError(AeganError, RuntimeError):
    code = "training_divergence"


class ConfigError(AeganError, ValueError):
    """Raised with every violated field listed in ``problems``."""

    code = "config_error"

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))
