"""Exception hierarchy shared by every qest module."""


class QestError(Exception):
    """Base class for all errors raised by qest."""


class DimensionCapError(QestError):
    """Total Hilbert-space dimension exceeds the configured cap."""


class SpaceMismatchError(QestError, ValueError):
    """Operands live on different Hilbert spaces."""


class NotHermitianError(QestError, ValueError):
    pass


class InvalidStateError(QestError, ValueError):
    pass


class SpecError(QestError):
    """Invalid probe specification.

    ``line`` and ``column`` are 1-based and ``token`` is the offending token
    text when the error can be traced to a location in the source.
    """

    def __init__(self, message, line=None, column=None, token=None, field=None):
        self.message = message
        self.line = line
        self.column = column
        self.token = token
        self.field = field
        super().__init__(str(self))

    def __str__(self):
        if self.line is None:
            return self.message
        where = f"line {self.line}, column {self.column}"
        if self.token is not None:
            where += f" near {self.token!r}"
        return f"{where}: {self.message}"
