"""Exception hierarchy shared by every stage of the flow."""

from __future__ import annotations


class AcimError(Exception):
    """Base class for all errors raised by acimflow."""


class ValidationError(AcimError, ValueError):
    """An argument or data record violates its documented constraints."""


class ConfigurationError(AcimError):
    """A profile, library or run configuration is incomplete or malformed."""


class FeasibilityError(AcimError, ValueError):
    """A design point violates the architecture constraints."""


class EmptySpaceError(AcimError):
    """The feasible design space is empty."""


class ParseError(AcimError, ValueError):
    """A filter expression or netlist text could not be parsed."""

    def __init__(self, message: str, token: str | None = None, position: int | None = None):
        self.token = token
        self.position = position
        if position is not None:
            message = f"{message} at position {position}"
        super().__init__(message)


class LibraryError(AcimError):
    """A required cell or template is missing from a library."""

    def __init__(self, message: str, cell: str | None = None):
        self.cell = cell
        super().__init__(message)


class RoutingError(AcimError):
    """A net could not be routed on the available grid."""

    def __init__(self, message: str, net: str | None = None):
        self.net = net
        super().__init__(message)


class CheckFailedError(AcimError):
    """Serialization refused because a rule check reported violations."""

    def __init__(self, message: str, report: list):
        self.report = report
        super().__init__(f"{message}: {len(report)} violation(s)")
