"""Exception types shared across the package."""


class RejectedInputError(ValueError):
    """Raised when an argument violates an operation's preconditions."""


class NumericalFailureError(ArithmeticError):
    """Raised when an iteration diverges, fails to converge, or produces non-finite values."""


class ConfigError(RejectedInputError):
    pass


class DataError(RejectedInputError):
    pass


class PgmFormatError(DataError):
    pass


class MixedDimensionsError(DataError):
    pass


class MissingDirectoryError(DataError):
    pass


class CheckpointError(RejectedInputError):
    pass


class BadMagicError(CheckpointError):
    pass


class TruncatedCheckpointError(CheckpointError):
    pass


class VersionMismatchError(CheckpointError):
    pass
