"""Exception types shared across the package."""


class MultiwalkError(Exception):
    """Base class for all errors raised by multiwalk."""


class InvalidEdgeError(MultiwalkError):
    """Edge rejected: self-loop, duplicate pair, nonpositive weight, or bad index."""


class DisconnectedError(MultiwalkError):
    """The edge set does not connect all vertices."""


class InvalidSizeError(MultiwalkError):
    """Generator called with an unsupported size parameter."""


class RetriesExhaustedError(MultiwalkError):
    """Rejection sampling hit its retry cap without a connected sample."""


class ParseError(MultiwalkError):
    """Edge-list file could not be parsed."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class WrongVariantError(MultiwalkError):
    """Kernel transformation applied to the wrong chain variant."""


class BadVertexError(MultiwalkError):
    """Vertex index outside the kernel's state space."""


class NegativeTimeError(MultiwalkError):
    """Negative lifespan or query time."""


class EigenFailureError(MultiwalkError):
    """Symmetric eigendecomposition did not converge."""


class ParityViolationError(MultiwalkError):
    """Moment product requested for a non-lazy discrete chain with mixed-parity times."""


class TableTooLargeError(MultiwalkError):
    """Explicit coupling table exceeds the admissible size."""


class TooLargeError(MultiwalkError):
    """Problem outside the brute-force oracle's enumeration bounds."""


class SamplesNotRetainedError(MultiwalkError):
    """Empirical CDF requested but per-replica samples were not kept."""


class CaseViolationError(MultiwalkError):
    """Discrete non-lazy chain with odd total lifespan: outside the proven cases."""


class AssumptionViolationError(MultiwalkError):
    """A precondition on the chain or the start measures does not hold."""


class InvalidDimensionError(MultiwalkError):
    """Torus experiment requires dimension >= 3."""


class DegenerateFitError(MultiwalkError):
    """Too few usable points for the exponential gap fit."""
