"""Exception hierarchy shared by the solver, diagnostics and CLI."""


class DispersaError(Exception):
    """Base class for all package errors."""


class ValidationError(DispersaError, ValueError):
    """Invalid parameters or violated preconditions."""


class SpectralSymmetryError(DispersaError):
    """A spectral state that should represent a real field is not Hermitian."""


class EmptyRegionError(DispersaError):
    """A supremum was requested over a region containing no grid points."""


class BlowUpError(DispersaError):
    """Non-finite values appeared during time stepping.

    ``last_time`` is the time of the last finite state and ``last_state`` the
    state itself, so callers can persist what was computed before breakdown.
    """

    def __init__(self, message, last_time, last_state=None):
        super().__init__(message)
        self.last_time = last_time
        self.last_state = last_state


class TailOverflowError(DispersaError):
    """Too much mass reached the outer quarter of the periodic box."""

    def __init__(self, message, time, tail_mass, partial=None):
        super().__init__(message)
        self.time = time
        self.tail_mass = tail_mass
        self.partial = partial


class QuadratureError(DispersaError):
    """An oscillatory quadrature did not reach its error target."""

    def __init__(self, message, achieved):
        super().__init__(message)
        self.achieved = achieved
