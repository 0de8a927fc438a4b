"""Exception hierarchy shared by all statelab modules.

The CLI maps these onto distinct exit codes (validation 2, numerical 3,
I/O 4), so library code should raise the most specific class that applies.
"""


class StatelabError(Exception):
    """Base class for all statelab errors."""


class ValidationError(StatelabError):
    """Invalid argument, malformed input, or violated precondition."""


class NumericalError(StatelabError):
    """A numerical invariant failed (non-finite loss, lost mass, ...)."""


class TruncationError(NumericalError):
    """Fock-space truncation is inadequate for the requested state."""


class FormatError(StatelabError):
    """Corrupt, truncated, or version-incompatible file content."""
