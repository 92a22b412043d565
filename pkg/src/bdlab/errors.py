"""Exception types shared across the package."""


class BdlabError(Exception):
    """Base class for all bdlab errors."""


# -- causal-set construction --------------------------------------------------

class ReflexiveError(BdlabError):
    """A pair (i, i) appears in the relation."""


class CycleError(BdlabError):
    """The relation is not acyclic (asymmetry violated)."""


class TransitivityError(BdlabError):
    """Strict validation found a missing transitive pair."""


class IndexOutOfRange(BdlabError):
    """An element index lies outside 1..n."""


class InvalidParameter(BdlabError):
    """A numeric or mode parameter violates its precondition."""


# -- action assembly -----------------------------------------------------------

class InsufficientAbundances(BdlabError):
    """Fewer abundance entries than the dimension's layer count."""


# -- sampling ------------------------------------------------------------------

class EmptyRelation(BdlabError):
    """The causal set has no related pairs to sample."""


class KTooLarge(BdlabError):
    """Sample size exceeds the population, or an abundance parameter
    exceeds the register capacity of an oracle circuit."""


# -- circuit construction -------------------------------------------------------

class InsufficientAncillae(BdlabError):
    """A gate decomposition was given fewer ancilla qubits than it needs."""


class OutOfRange(BdlabError):
    """A register value or pair index lies outside its encodable range."""


# -- simulators ------------------------------------------------------------------

class UnsupportedGate(BdlabError):
    """The simulator cannot apply this gate kind."""


class WidthTooLarge(BdlabError):
    """Circuit width exceeds the dense-simulation cap."""


# -- counting ---------------------------------------------------------------------

class ZeroMarked(BdlabError):
    """The geometric pre-scan found no marked item (count is treated as 0)."""


class StageOneZero(BdlabError):
    """The first counting stage returned 0 twice despite finding marked items."""
