"""Exception types raised across the package."""


class DimensionError(ValueError):
    """Operands have inconsistent shapes."""


class DegenerateGeometryError(ValueError):
    """An antenna coincides with a scatterer (singular 1/d kernel)."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class PilotDeficiencyError(ValueError):
    """Fewer pilots than transmit antennas, or rank-deficient pilots."""


class SingularSystemError(ValueError):
    """A regularized normal matrix is not positive definite."""


class ConnectivityError(ValueError):
    """The backhaul graph is disconnected or has an isolated node."""


class DivergenceError(RuntimeError):
    """An iterate became non-finite or exceeded the divergence bound.

    ``trace`` holds the iteration records collected before the abort.
    """

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace
