class ContPathError(Exception):
    """Base class for every error raised by contpath."""

    pass


class InvalidArgumentError(ContPathError, ValueError):
    """Raised when an argument has the wrong shape, sign or direction."""

    pass


class DualInfeasibleError(ContPathError):
    """Raised when a dual point violates ||X^T theta||_inf <= 1 beyond tolerance."""

    def __init__(self, max_violation: float):
        self.max_violation = max_violation
        super().__init__(
            f"Dual point is infeasible: max constraint violation {max_violation:.3e}"
        )


class PolicyError(ContPathError):
    """Raised when a path policy cannot produce a valid next step."""

    pass


class GridOrderError(ContPathError, ValueError):
    """Raised when a regularization grid is not strictly decreasing."""

    pass


class SizeControlInfeasibleError(ContPathError):
    """Raised when the active-set size rule needs a more accurate inner solve."""

    def __init__(self, target_size: int, radicand: float):
        self.target_size = target_size
        self.radicand = radicand
        super().__init__(
            f"Size control infeasible for p_t={target_size}: "
            f"radicand {radicand:.3e} is negative, tighten the inner solve"
        )


class BudgetExceededError(ContPathError):
    """Raised when an iteration budget is exhausted; carries the best state seen."""

    def __init__(self, message: str, best_state=None, epochs: int = 0):
        self.best_state = best_state
        self.epochs = epochs
        super().__init__(message)


class DataParseError(ContPathError):
    """Raised when a dataset file contains a malformed line."""

    def __init__(self, line_number: int, detail: str):
        self.line_number = line_number
        self.detail = detail
        super().__init__(f"Parse error on line {line_number}: {detail}")


class DataError(ContPathError):
    """Raised when a dataset is empty or contains non-finite values."""

    pass


class UsageError(ContPathError):
    """Raised when command-line flags are missing or inconsistent."""

    pass
