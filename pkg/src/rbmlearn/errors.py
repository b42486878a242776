"""Exception hierarchy shared by every module.

The CLI maps these onto exit codes: ``ParameterError``/``FormatError`` -> 1,
``AssumptionError`` -> 2, ``CapacityError`` -> 3.
"""


class RbmLearnError(Exception):
    """Base class for all library errors."""


class ParameterError(RbmLearnError, ValueError):
    """An argument is outside its documented domain."""


class FormatError(RbmLearnError, ValueError):
    """A model, sample or structure file could not be parsed."""


class CapacityError(RbmLearnError):
    """A request exceeds an enumeration or representation bound."""


class AssumptionError(RbmLearnError):
    """The input violates a modelling assumption (ferromagneticity, nondegeneracy)."""


class InfeasibleError(RbmLearnError):
    """A building-block target lies outside the achievable coefficient range."""

    def __init__(self, message, feasible_range):
        super().__init__(message)
        self.feasible_range = feasible_range


class InsufficientDataError(RbmLearnError):
    """Too few rows to fit or validate."""


class LearningFailure(RbmLearnError):
    """A structure learner could not produce an estimate."""


class ZeroMassError(RbmLearnError):
    """Conditioning on (or taking the log of) an event of zero probability."""


class RootFindingError(RbmLearnError):
    """Polynomial roots could not be resolved numerically."""
