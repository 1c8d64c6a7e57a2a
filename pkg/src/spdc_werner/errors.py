"""Exception types shared across the package."""


class CapacityError(ValueError):
    """Requested pair number exceeds the supported truncation."""


class PhysicalityError(ValueError):
    """Matrix fails a density-matrix invariant (Hermiticity, positivity, trace)."""


class ConvergenceError(RuntimeError):
    """Iterative computation did not reach its tolerance.

    Carries a ``diagnostics`` dict (tail bounds, iteration counts, optimizer
    messages) for error reporting.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class FitError(RuntimeError):
    """Calibration fit failed or produced out-of-range parameters."""


class DesignError(ValueError):
    """Measurement settings do not span the operator space."""
