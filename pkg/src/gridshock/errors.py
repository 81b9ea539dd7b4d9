"""Exception types raised across the package."""


class GridshockError(Exception):
    """Base class for all package errors."""


class ConfigError(GridshockError, ValueError):
    pass


class NegativeSpeed(GridshockError, ValueError):
    pass


class IncompleteGrid(GridshockError, ValueError):
    """A wind file does not cover every (tract, hour) cell."""


class MalformedRow(GridshockError, ValueError):
    pass


class UnknownTract(GridshockError, KeyError):
    pass


class TractMismatch(GridshockError, ValueError):
    pass


class InfeasibleTask(GridshockError, ValueError):
    """A repair needs more teams than the pool will ever hold."""


class UnknownStrategy(GridshockError, ValueError):
    pass


class EmptyPopulation(GridshockError, ValueError):
    pass


class UndefinedGroup(GridshockError, ValueError):
    pass


class UnknownBaseline(GridshockError, KeyError):
    pass


class MismatchedPopulation(GridshockError, ValueError):
    pass
