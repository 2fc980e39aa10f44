"""Exception types shared across the package."""


class ParameterError(ValueError):
    """An argument is outside its mathematical domain."""


class ConstraintError(ValueError):
    """A schedule or power split violates a structural constraint."""


class ConfigError(ValueError):
    """An experiment configuration is malformed or inconsistent."""


class NumericError(RuntimeError):
    """A series, bracketing search, or fixed-point iteration failed to
    converge within its budget.  The message carries diagnostics."""


class EnumerationBudgetError(RuntimeError):
    """An exhaustive search would exceed its subset budget."""


class InternalConsistencyError(RuntimeError):
    """A state the surrounding contracts promise is unreachable."""
