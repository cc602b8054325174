"""Exception types raised by the toolkit."""


class QuadsubError(Exception):
    """Base class for all toolkit errors."""


class SymbolError(QuadsubError, ValueError):
    """Invalid symbol input (shape, symmetry or sign of the real part)."""


class SingularSpaceNonTrivial(QuadsubError):
    """The singular space is not {0}, so k0 and the flow bounds are undefined."""

    def __init__(self, dim, message=None):
        self.dim = dim
        super().__init__(message or f"singular space has dimension {dim}")


class NotConvergedError(QuadsubError):
    """Common parent for numerical procedures that failed to converge."""


class QuadratureNotConverged(NotConvergedError):
    pass


class ExpmNotConverged(NotConvergedError):
    pass


class NoStableC0(NotConvergedError):
    pass


class WeightBlowup(NotConvergedError):
    """The weight ODE left its validity window (norm exceeded the guard)."""


class TanSingular(NotConvergedError):
    pass


class PlaneNotGraph(NotConvergedError):
    """The evolved Lagrangian plane is not a graph over the real phase space."""


class DegenerateCriticalPoint(NotConvergedError):
    pass


class NoOrderFound(QuadsubError):
    pass


class InsufficientDecayRange(QuadsubError):
    pass


class CutoffTooSmall(QuadsubError):
    pass
