"""Exception hierarchy for evotree.

Every failure mode raised by the package derives from :class:`EvoTreeError`
so callers (CLI, HTTP service) can map them to exit codes / status codes in
one place.
"""


class EvoTreeError(Exception):
    """Base class for all evotree errors."""


# --- tree structure / chromosome ---------------------------------------

class EmptyStructureError(EvoTreeError):
    """Tree structure has no stages."""


class NonMonotoneStructureError(EvoTreeError):
    """Node counts decrease between stages, so nesting is impossible."""


class TerminalExceedsScenariosError(EvoTreeError):
    """More terminal nodes requested than input scenarios available."""


class LengthMismatchError(EvoTreeError):
    """Chromosome length does not match the bound (structure, scenario count)."""


class InvalidTreeError(EvoTreeError):
    """A chromosome decoded to a partition with an empty required node."""


class EmptyNodeSetError(EvoTreeError):
    """A node value was requested for an empty member set."""


# --- scenario input ------------------------------------------------------

class MalformedRowError(EvoTreeError):
    """Scenario file is empty, ragged or contains non-numeric cells."""


class NonFiniteValueError(EvoTreeError):
    """Scenario values contain NaN or infinity."""


class BadProbabilitiesError(EvoTreeError):
    """Path probabilities are negative or do not sum to one."""


class NonStationaryParamsError(EvoTreeError):
    """GARCH parameters violate covariance stationarity (alpha + beta >= 1)."""


class InvalidCountError(EvoTreeError):
    """Requested path count or horizon is not a positive integer."""


# --- evolution -----------------------------------------------------------

class BadMError(EvoTreeError):
    """Mutation gene count m is outside 1..chromosome length."""


class TooManyInvalidError(EvoTreeError):
    """Invalid-chromosome retry budget exhausted; the requested structure is
    too demanding for the input scenarios."""


# --- deterministic equivalent -------------------------------------------

class DegenerateTreeError(EvoTreeError):
    """Tree has fewer than two stages; no stochastic program to emit."""


class BadConfigError(EvoTreeError):
    """Asset-allocation model configuration is invalid."""


class TreeFormatError(EvoTreeError):
    """A tree file does not follow the documented JSON schema."""
