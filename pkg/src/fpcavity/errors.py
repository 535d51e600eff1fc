"""Exception and warning types raised across the package."""


class FPCavityError(Exception):
    """Base class for computation errors raised by fpcavity."""


class SingularLoopError(FPCavityError, ArithmeticError):
    """The closed-loop denominator vanishes (a pole sits on the real-frequency axis)."""


class MeasurementBlindError(FPCavityError, ArithmeticError):
    """The measurement kernel vanishes, so the position-referred noise diverges."""


class FitError(FPCavityError):
    """A rational fit did not meet its residual bound or produced untrustworthy poles."""


class NoBracketError(FPCavityError):
    """Root finding could not locate a sign change on the search interval."""


class InsufficientRealizationsWarning(UserWarning):
    """Monte Carlo standard errors are too large to be informative."""
