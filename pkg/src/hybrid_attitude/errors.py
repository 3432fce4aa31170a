"""Exception types raised by the toolkit."""


class AttitudeError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(AttitudeError, ValueError):
    """A parameter or configuration value violates an invariant."""


class ParseError(AttitudeError, ValueError):
    """A configuration file could not be parsed."""


class NotSkewSymmetric(AttitudeError, ValueError):
    pass


class NotARotation(AttitudeError, ValueError):
    pass


class Degenerate(AttitudeError, ValueError):
    pass


class NonSkewResidual(AttitudeError, ArithmeticError):
    """Finite-difference angular velocity is not skew (non-smooth command)."""


class CapTooLarge(AttitudeError, ValueError):
    pass


class CTooLarge(ValidationError):
    pass


class NotPositiveDefinite(AttitudeError, ArithmeticError):
    pass


class NonFiniteState(AttitudeError, ArithmeticError):
    pass


class ZenoSuspected(AttitudeError, RuntimeError):
    pass
