"""Exception hierarchy.

Validation problems (bad input, unsupported structure, ill-posed queries)
derive from ``ValueError``; numerical failures (no bracket, divergence,
unresolved geometry, blow-up) derive from ``RuntimeError``.  The CLI maps
the two families to exit codes 2 and 3.
"""


class SRLabError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(SRLabError, ValueError):
    pass


class NumericalFailure(SRLabError, RuntimeError):
    pass


class UnsupportedStructureError(ValidationError):
    """Operation needs the polynomial structure family."""


class DegenerateStructureError(ValidationError):
    """phi vanishes along a curve, so the horizontal lift is undefined."""


class ConstructionError(ValidationError):
    """Curves could not be assembled (e.g. junction mismatch)."""


class DomainError(ValidationError):
    pass


class IllPosedQueryError(ValidationError):
    pass


class NotConstructibleError(ValidationError):
    """The cut-and-rectangle competitor does not exist for this structure."""


class GradientUndefinedError(ValidationError):
    pass


class BracketError(NumericalFailure):
    pass


class ResolutionError(NumericalFailure):
    pass


class DivergenceError(NumericalFailure):
    pass


class BlowUpError(NumericalFailure):
    def __init__(self, message, last_time=None):
        super().__init__(message)
        self.last_time = last_time
