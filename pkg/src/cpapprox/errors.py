"""Exception types shared across the package."""


class DimensionMismatchError(ValueError):
    """Operands live on lattices of different dimension."""


class CoordinateOverflowError(OverflowError):
    """A convolution would produce coordinates beyond the supported range."""


class NumericalRefusalError(ArithmeticError):
    """A computation was refused because cancellation or accumulated error
    would make the result meaningless.  Carries a diagnostic message."""


class SpanConditionError(ValueError):
    """A line-mixture component violates the adjacent-occupancy requirement."""
