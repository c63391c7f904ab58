class GlidepathError(Exception):
    """Base class for errors raised by the engine."""


class ParameterError(GlidepathError, ValueError):
    pass


class DensityError(GlidepathError, ValueError):
    """A special density is undefined for the requested equity ratio."""


class GridError(GlidepathError):
    """The ruin-factor grid cannot represent the recursion (raise rf_max)."""


class ConsistencyError(GlidepathError):
    pass


class EnvelopeError(GlidepathError):
    """A rejection-sampling box failed to dominate the density."""


class StuckError(GlidepathError):
    """Climbing cannot make progress even after shrinking the step size."""


class BoundaryError(GlidepathError):
    """Newton's method refused because a coordinate is pinned at a bound."""


class ConvergenceError(GlidepathError):
    def __init__(self, message, glidepath=None, probability=None, diagnostics=None):
        super().__init__(message)
        self.glidepath = glidepath
        self.probability = probability
        self.diagnostics = diagnostics


class InputFileError(GlidepathError):
    pass
