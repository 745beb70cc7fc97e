"""Exception types raised across the simulator.

Every error derives from :class:`CavityError` as well as the builtin type
that best describes it, so callers can catch either.
"""


class CavityError(Exception):
    """Base class for simulator errors."""


class InvalidArgumentError(CavityError, ValueError):
    pass


class ClippedPacketError(CavityError, ValueError):
    """A wave packet (or a shifted copy) does not fit on its time grid."""


class InfeasibleControlError(CavityError, RuntimeError):
    """No coupling schedule can impedance-match the requested packet."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class InfeasibleEtaError(CavityError, ValueError):
    """Requested emission efficiency exceeds what loss allows."""

    def __init__(self, message, eta_max):
        super().__init__(message)
        self.eta_max = eta_max


class ConvergenceError(CavityError, RuntimeError):
    pass


class UnstableStepError(CavityError, ValueError):
    """Time step too coarse for the explicit integrator."""


class CalibrationError(CavityError, RuntimeError):
    pass
