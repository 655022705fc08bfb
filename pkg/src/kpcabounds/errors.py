"""Exception taxonomy shared across the package."""


class KpcaBoundsError(Exception):
    """Base class for all errors raised by this package."""


class InputError(KpcaBoundsError, ValueError):
    """A caller-supplied argument violates a documented precondition."""


class ParseError(InputError):
    """Malformed external data; carries the offending row number when known."""

    def __init__(self, message: str, row: int | None = None):
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)
        self.row = row


class InvalidKernelError(KpcaBoundsError):
    """A Gram matrix fails positive semidefiniteness beyond tolerance."""


class NumericalError(KpcaBoundsError):
    """A computation left its supported numerical regime."""


class UnsupportedError(KpcaBoundsError):
    """The requested operation is not defined for this configuration."""
