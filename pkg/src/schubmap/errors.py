"""Exception types shared across the package."""


class SchubmapError(Exception):
    """Base class for all package errors."""


class MalformedPermutation(SchubmapError, ValueError):
    pass


class NoReduction(SchubmapError, ValueError):
    """Raised when a reduction would leave an empty matrix."""


class PoleError(SchubmapError, ZeroDivisionError):
    """Evaluation hit a zero denominator."""


class NotExactDivision(SchubmapError, ArithmeticError):
    pass


class ParseError(SchubmapError, ValueError):
    pass


class EndpointError(SchubmapError, ValueError):
    """Origins or destinations are not nonzero cells, or their sizes differ."""


class DegenerateDecomposition(SchubmapError, ArithmeticError):
    """A leading minor vanished where the decomposition needs it invertible."""


class DivergentRegion(SchubmapError, ValueError):
    """The requested integral does not converge for this parameter."""


class InsufficientRegularization(SchubmapError, ValueError):
    """Too few integration-by-parts steps for the requested parameter."""


class ConvergenceError(SchubmapError, ArithmeticError):
    pass
