"""Exception types raised by the simulator."""


class NtnError(Exception):
    """Base class for all simulator errors."""


class ZeroDistance(NtnError, ValueError):
    """Two points that must be distinct coincide (distance below 1e-9 m)."""


class InvalidDirectivity(NtnError, ValueError):
    pass


class InvalidHpbw(NtnError, ValueError):
    pass


class InvalidEpsilon(NtnError, ValueError):
    pass


class DegenerateNormalizer(NtnError, ArithmeticError):
    """A_h(t, 0) vanishes, typically because a beam points away from every path."""


class QuadratureNotConverged(NtnError, ArithmeticError):
    """Adaptive sphere quadrature ran out of refinements.

    The best available estimate is attached as ``result``.
    """

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class ConfigError(NtnError, ValueError):
    """Malformed run configuration.

    ``path`` is the dotted location of the offending field.
    """

    def __init__(self, path, reason):
        super().__init__(f"{path}: {reason}")
        self.path = path
        self.reason = reason


class UnitError(ConfigError):
    pass
