"""Exception types shared across the package.

CLI exit-code mapping: usage errors exit 2 (argparse), NumericError and its
subclasses exit 3, BudgetExceededError exits 4.
"""


class MlmomError(Exception):
    """Base class for all package errors."""


class NumericError(MlmomError):
    """Base class for numeric failures (divergence, tolerance, overflow)."""


class DomainError(NumericError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class DivergenceError(NumericError):
    """A requested integral diverges (detected analytically, not by blow-up)."""


class ToleranceError(NumericError):
    """Quadrature could not meet the requested tolerance."""

    def __init__(self, msg, achieved=None):
        super().__init__(msg)
        self.achieved = achieved


class OverflowRangeError(NumericError, OverflowError):
    """Result exceeds the floating range; carries the exceeded threshold."""

    def __init__(self, msg, threshold=None):
        super().__init__(msg)
        self.threshold = threshold


class MissingMomentError(NumericError):
    """A moment snapshot lacks required orders; lists the absent ones."""

    def __init__(self, orders):
        super().__init__(f"snapshot missing moment orders: {sorted(orders)}")
        self.orders = tuple(sorted(orders))


class FitDegenerateError(NumericError):
    """Tail-order regression is degenerate (range too short / non-log-convex)."""


class DtTooLargeError(MlmomError):
    """DSMC time step violates the collision-probability cap."""

    def __init__(self, msg, majorant=None):
        super().__init__(msg)
        self.majorant = majorant


class BudgetExceededError(MlmomError):
    """A study would exceed its computational budget; aborted with diagnostics."""

    def __init__(self, msg, diagnostics=None):
        super().__init__(msg)
        self.diagnostics = diagnostics or {}
