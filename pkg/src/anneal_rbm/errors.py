"""Exception hierarchy shared by all modules.

Every error raised by library code derives from ContractError so the CLI can
map module failures to a single exit code, distinct from usage and IO errors.
"""


class ContractError(Exception):
    """A module contract was violated (bad parameter, infeasible input, ...)."""

    category = "contract"


class InvalidParameterError(ContractError):
    """An argument is outside its documented domain."""


class EmbeddingInfeasibleError(ContractError):
    """The requested embedding does not fit the hardware graph."""


class DimensionMismatchError(ContractError):
    """Array or problem dimensions disagree."""


class FormatError(ContractError):
    """A file or payload does not match its documented schema."""
