"""Exception hierarchy shared by all modules."""


class AlgebraError(ValueError):
    """Base class for every error raised by this package."""


class ContextError(AlgebraError):
    """Operands live over different variable rosters, or a variable is unknown."""


class GradingError(AlgebraError):
    """A substitution image does not respect parity or weight."""


class ShapeError(AlgebraError):
    """A polynomial does not have the shape an operation requires."""


class NotPoissonError(AlgebraError):
    """A bivector fails [pi, pi] = 0; ``obstruction`` holds the bracket."""

    def __init__(self, message, obstruction=None):
        super().__init__(message)
        self.obstruction = obstruction


class IsometryError(AlgebraError):
    """A frame change does not preserve the fiber metric."""


class InvarianceError(AlgebraError):
    """A metric is not ad-invariant for the given structure constants."""


class NotClosedError(AlgebraError):
    """An element expected to be D-closed is not; ``residual`` holds D f."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class OutOfRangeError(AlgebraError):
    """A bidegree outside the range where an operation is defined."""


class IncompatibleError(NotClosedError):
    """gamma is not compatible with the standard algebroid (D gamma != 0)."""


class NotLieAlgebroidError(AlgebraError):
    """{gamma, gamma} != 0."""

    def __init__(self, message, obstruction=None):
        super().__init__(message)
        self.obstruction = obstruction


class TruncationError(AlgebraError):
    """D leaves the truncated span of a cochain block."""

    def __init__(self, message, element=None):
        super().__init__(message)
        self.element = element


class SchemaError(AlgebraError):
    """A document fails to parse; ``location`` names the offending field."""

    def __init__(self, message, location=""):
        super().__init__(f"{location}: {message}" if location else message)
        self.location = location
