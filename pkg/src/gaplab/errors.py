"""Shared exception types."""


class ParameterError(ValueError):
    """An argument lies outside its documented domain."""


class RangeError(ParameterError):
    """An index or limit falls outside the range a table covers."""


class SingularDenominator(ArithmeticError):
    """A closed-form kernel hit a near-zero sine denominator.

    The closed forms exist for speed and cross-checking only; callers fall
    back to direct summation, which is always valid.
    """


class ResourceCapError(RuntimeError):
    """A requested experiment exceeds the configured element budget."""

    def __init__(self, estimate: int, cap: int):
        super().__init__(
            f"experiment would stream about {estimate:,} elements but the cap is "
            f"{cap:,}; shrink the run or raise GAPLAB_MAX_ELEMENTS"
        )
        self.estimate = estimate
        self.cap = cap
