"""Exception types for the jetexit toolkit."""


class JetExitError(Exception):
    """Base class for all toolkit errors."""


class ParameterError(JetExitError, ValueError):
    """A physical or numerical parameter is outside its admissible range."""


class GeometryError(JetExitError, RuntimeError):
    """Separatrix or domain construction failed."""


class DegeneratePointError(GeometryError):
    """A stagnation-point candidate has a singular velocity Jacobian."""

    def __init__(self, location, message=None):
        self.location = tuple(float(v) for v in location)
        if message is None:
            message = f"degenerate stagnation point near {self.location}"
        super().__init__(message)


class TracingBudgetError(GeometryError):
    """Level-set tracing exhausted its point budget without terminating."""


class MeshQualityError(JetExitError, RuntimeError):
    """A generated mesh has inverted, degenerate, or non-conforming cells."""


class MarkerError(JetExitError, ValueError):
    """Unknown or inconsistent boundary marker."""


class PairingError(JetExitError, ValueError):
    """Periodic vertex pairs do not form a valid bijection."""


class SolverError(JetExitError, RuntimeError):
    """Linear solve failed to reach the requested residual."""

    def __init__(self, message, residual_history=None):
        self.residual_history = list(residual_history or [])
        super().__init__(message)


class CrossingStructureError(JetExitError, RuntimeError):
    """A sweep column difference does not change sign exactly once."""


class ExtremumStructureError(JetExitError, RuntimeError):
    """A sweep column is not unimodal over the table."""


class CensoringError(JetExitError, RuntimeError):
    """Monte Carlo paths hit the time cap before exiting."""

    def __init__(self, n_censored, n_paths, max_time):
        self.n_censored = int(n_censored)
        self.n_paths = int(n_paths)
        self.max_time = float(max_time)
        super().__init__(
            f"{self.n_censored} of {self.n_paths} paths were still inside "
            f"the domain at the time cap {self.max_time:g}"
        )
