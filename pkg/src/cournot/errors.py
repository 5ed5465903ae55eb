"""Exception hierarchy shared by every module in the package."""


class CournotError(Exception):
    """Base class for all errors raised by this package."""


class SumNotOne(CournotError, ValueError):
    pass


class NegativeWeight(CournotError, ValueError):
    pass


class SpaceMismatch(CournotError, ValueError):
    pass


class LevelMismatch(CournotError, ValueError):
    pass


class EmptyList(CournotError, ValueError):
    pass


class BudgetExceeded(CournotError):
    pass


class ThresholdOutOfRange(CournotError, ValueError):
    pass


class OracleFailure(CournotError):
    """A class membership procedure could not answer a query."""


class NonMonotonePredicate(CournotError):
    """Bisection found a membership predicate that is not monotone in sigma."""


class ContainmentViolated(CournotError):
    pass


class MeasuresEqual(CournotError, ValueError):
    pass


class ParseError(CournotError, ValueError):
    pass


class ValidationError(CournotError, ValueError):
    pass
