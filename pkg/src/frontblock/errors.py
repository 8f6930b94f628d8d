"""Exception types shared across the package."""


class FrontblockError(Exception):
    """Base class."""


class NumericalFailure(FrontblockError):
    """A solver could not deliver a verdict (maps to CLI exit code 2)."""


class NoWave(NumericalFailure):
    pass


class NonConvergence(NumericalFailure):
    pass


class BracketFailure(NumericalFailure):
    pass


class OutOfValidity(FrontblockError, ValueError):
    pass


class DisconnectedDomain(FrontblockError, ValueError):
    pass


class TooCoarse(FrontblockError, ValueError):
    pass


class StabilityViolation(FrontblockError, ValueError):
    pass


class FrontTooClose(FrontblockError, ValueError):
    pass


class NoFront(FrontblockError):
    pass


class LeftBasin(FrontblockError):
    """The blocking minimiser drifted out of the admissible ball around the ramp profile."""

    def __init__(self, msg, field=None, distance=None):
        super().__init__(msg)
        self.field = field
        self.distance = distance


class SeamMismatch(FrontblockError, ValueError):
    pass


class NotStationary(FrontblockError, ValueError):
    pass


class HypothesisUnmet(FrontblockError, ValueError):
    pass


class SupportViolation(FrontblockError, ValueError):
    pass


class BudgetExceeded(NumericalFailure):
    def __init__(self, msg, partial=None):
        super().__init__(msg)
        self.partial = partial


class ConfigError(FrontblockError, ValueError):
    pass


class ParseError(ConfigError):
    def __init__(self, msg, line=None, column=None):
        loc = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(msg + loc)
        self.line = line
        self.column = column


class UnknownKey(ConfigError):
    pass


class RangeError(ConfigError):
    pass
