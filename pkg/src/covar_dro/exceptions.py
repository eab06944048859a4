"""Exception hierarchy shared by all modules."""


class CovarDROError(Exception):
    """Base class for package errors."""


class ContractError(CovarDROError, ValueError):
    """An input violated an operation's preconditions (shapes, finiteness)."""


class ConfigurationError(CovarDROError, ValueError):
    """Invalid or unsupported configuration (radius out of range, empty set, ...)."""


class SingularDesignError(CovarDROError, ValueError):
    """The regression design matrix is rank deficient."""


class DegenerateLeverageError(CovarDROError, ValueError):
    """A hat-matrix leverage is (numerically) one, so the LOO residual is undefined."""


class SolverError(CovarDROError, RuntimeError):
    """The LP backend failed or returned a non-optimal status."""


class InfeasibleError(SolverError):
    """The optimization problem has no feasible point."""


class NonConvergenceError(CovarDROError, RuntimeError):
    """An iterative scheme hit its iteration cap before reaching tolerance."""

    def __init__(self, message, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics
