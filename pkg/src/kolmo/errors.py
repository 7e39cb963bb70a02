"""Exception types raised across the package."""


class KolmoError(Exception):
    """Base class for all package errors."""


class InvalidConfig(KolmoError, ValueError):
    """A configuration value is out of range; ``field`` names the offender."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field
        self.message = message


class ConfigMismatch(KolmoError, ValueError):
    """Two fields live on different tori."""


class MeanNotZero(KolmoError, ValueError):
    pass


class NotInX(KolmoError, ValueError):
    """Field has content on kx = 0 modes where the x-averaged part must vanish."""


class WrongAspect(KolmoError, ValueError):
    pass


class DegenerateMode(KolmoError, ValueError):
    """A mode with |k|^2 <= 1 is populated, so 1 + inv_laplacian is not positive."""


class NonFinite(KolmoError, ArithmeticError):
    """Time stepping produced NaN or inf."""

    def __init__(self, message, time=None):
        super().__init__(message if time is None else f"{message} (t={time:.6g})")
        self.time = time


class IncompatibleDomain(KolmoError, ValueError):
    pass


class ResonanceViolated(KolmoError, ValueError):
    pass


class NonPositiveValue(KolmoError, ValueError):
    pass


class WindowTooSmall(KolmoError, ValueError):
    pass


class AspectTooSmall(KolmoError, ValueError):
    pass
