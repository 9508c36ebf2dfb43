"""Exception types raised across the package."""


class CPConeError(Exception):
    """Base class for all package errors."""


class NonHermitian(CPConeError, ValueError):
    pass


class DimensionMismatch(CPConeError, ValueError):
    pass


class NoConvergence(CPConeError, RuntimeError):
    pass


class BadProgram(CPConeError, ValueError):
    pass


class SolverStalled(CPConeError, RuntimeError):
    pass


class ParameterOutOfRange(CPConeError, ValueError):
    pass


class ZeroVector(CPConeError, ValueError):
    pass


class NotDNN(CPConeError, ValueError):
    pass


class NotPSD(CPConeError, ValueError):
    pass


class NotCP(CPConeError, ValueError):
    pass


class DimensionTooLarge(CPConeError, ValueError):
    pass


class NotQubit(CPConeError, ValueError):
    pass


class NonHermiticityPreserving(CPConeError, ValueError):
    pass


class NotUnitalCPCP(CPConeError, ValueError):
    pass


class NotDensityMatrix(CPConeError, ValueError):
    pass


class NotUnitNorm(CPConeError, ValueError):
    pass


class BadParameter(CPConeError, ValueError):
    pass
