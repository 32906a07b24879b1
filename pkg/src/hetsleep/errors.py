"""Exception types raised across the package."""


class HetSleepError(Exception):
    """Base class for all package errors."""


class ParseError(HetSleepError):
    """Scenario file is not valid JSON or misses required keys."""


class ValidationError(HetSleepError, ValueError):
    """A scenario or sweep parameter violates one of its invariants."""


class DegenerateLoad(HetSleepError, ZeroDivisionError):
    """Expected macro-cell user count is zero where a ratio needs it."""


class InfeasibleScenario(HetSleepError):
    """No operation mode keeps the MBS transmit power within its cap."""


class BracketError(HetSleepError):
    """A root-finding bracket does not contain a sign change."""


class TooLarge(HetSleepError):
    """Exhaustive enumeration requested beyond the hard size cap."""


class ContractViolation(HetSleepError):
    """A documented precondition was not met by the caller."""
