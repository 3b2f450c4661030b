"""Exception types shared across the package."""


class EmschemesError(Exception):
    """Base class for all package errors."""


class DomainViolation(EmschemesError):
    """State lies outside the model's domain."""


class UnknownModel(EmschemesError):
    """Requested builtin model name is not registered."""


class InvalidG(EmschemesError):
    """Step-intensity process returned a non-positive or non-finite value."""


class MissingExactSolution(EmschemesError):
    """Operation requires a model with a closed-form solution."""


class BudgetExceeded(EmschemesError):
    """A stopped simulation did not terminate within its step budget."""


class OutOfRange(EmschemesError):
    """Argument outside the mathematical domain of the function."""


class MismatchedG(EmschemesError):
    """Two scheme specs do not share the same step-intensity process."""


class ParseError(EmschemesError):
    """Config text could not be parsed; message carries the line number."""


class ValidationError(EmschemesError):
    """Config or experiment parameters failed validation."""
