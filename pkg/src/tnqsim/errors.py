"""Exception hierarchy shared by all modules."""


class TnqsimError(Exception):
    """Base class for every error raised by the package."""


class DimensionError(TnqsimError, ValueError):
    """Shapes or axis lengths do not match."""


class PreconditionError(TnqsimError, ValueError):
    """An input violates a documented precondition."""


class CapExceededError(TnqsimError, ValueError):
    """A dense representation would exceed the configured size cap."""


class UnsupportedOperationError(TnqsimError, ValueError):
    """The requested operation is not defined for the given input."""


class PathError(TnqsimError, ValueError):
    """A contraction path does not describe a valid binary tree."""


class SchemaError(TnqsimError, ValueError):
    """A serialized document does not follow the expected schema.

    ``path`` locates the offending field, e.g. ``ops[3].name``.
    """

    def __init__(self, message, path=""):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)
