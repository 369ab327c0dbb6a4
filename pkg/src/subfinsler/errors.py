"""Exception types shared across the package."""


class SubfinslerError(Exception):
    """Common base, so callers can catch everything raised here at once."""


class SingularPoint(SubfinslerError, ValueError):
    """A field or norm was evaluated on its declared singular set."""


class PolePoint(SingularPoint):
    """Evaluation at the pole of a fundamental solution."""


class DimensionMismatch(SubfinslerError, ValueError):
    pass


class DegenerateGradient(SubfinslerError, ArithmeticError):
    """A block gradient vanished where a non-Euclidean Finsler Laplacian needs it."""


class NoConvergence(SubfinslerError, RuntimeError):
    pass


class BudgetExceeded(SubfinslerError, ValueError):
    """Quadrature grid larger than the configured point budget."""


class ConfigError(SubfinslerError, ValueError):
    pass
