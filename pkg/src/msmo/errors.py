"""Exception hierarchy shared by every module of the package."""


class MSMOError(Exception):
    """Base class for all errors raised by msmo."""


# scenario lattice
class EmptyStageError(MSMOError, ValueError):
    pass


class UnreachableStateError(MSMOError, ValueError):
    pass


class DanglingTransitionError(MSMOError, ValueError):
    pass


class UnknownStateError(MSMOError, KeyError):
    pass


# lp core
class MalformedProblemError(MSMOError, ValueError):
    pass


class DimensionMismatchError(MSMOError, ValueError):
    pass


class InvalidNameError(MSMOError, ValueError):
    pass


class LPParseError(MSMOError, ValueError):
    pass


# model
class PrefixMismatchError(MSMOError, ValueError):
    pass


class WidthMismatchError(MSMOError, ValueError):
    pass


class CoverageError(MSMOError, ValueError):
    pass


class ShapeMismatchError(MSMOError, ValueError):
    pass


class RangeError(MSMOError, ValueError):
    pass


# scalarization / horizon
class NonpositiveWeightError(MSMOError, ValueError):
    pass


class NotOptimalError(MSMOError, RuntimeError):
    def __init__(self, status, message=None):
        self.status = status
        super().__init__(message or f"LP solve did not reach optimality (status={status})")


class InfeasibleInputError(MSMOError, ValueError):
    pass


class FirstStageInfeasibleError(MSMOError, RuntimeError):
    pass


# portfolio / cli
class InvalidInstanceError(MSMOError, ValueError):
    pass


class ConfigError(MSMOError, ValueError):
    """Config could not be parsed; ``field`` names the offending key path."""

    def __init__(self, message, field=None, line=None):
        self.field = field
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field:
            where.append(f"field '{field}'")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)
