"""Exceptions shared by the engine and the CLI.

The CLI maps these onto stable exit codes: InputError -> 2,
SizeError -> 3, InternalError -> 4.
"""


class InputError(ValueError):
    """Malformed or inconsistent user-supplied data."""


class SizeError(ValueError):
    """A brute-force guard was exceeded (desk-scale tools only)."""


class InternalError(RuntimeError):
    """An internal invariant was breached; indicates a bug, not bad input."""


class DegenerateMarketError(InputError):
    """A market with zero total demand; its game is identically zero."""


class UnsupportedModeError(InputError):
    """The requested computation has no algorithm for this instance class."""
