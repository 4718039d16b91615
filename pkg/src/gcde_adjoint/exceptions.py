"""Exception types raised across the package."""


class ShapeError(ValueError):
    """Operand shapes are incompatible with the requested operation."""


class ValidationError(ValueError):
    """An input violates a documented precondition."""


class DivergenceError(ArithmeticError):
    """A solver produced non-finite values.

    ``step`` holds the index of the offending step when known.
    """

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class OracleSizeError(ValueError):
    """A dense Jacobian oracle was requested beyond the desk-scale guard."""


class KinkWarning(UserWarning):
    """Pre-activations come close to the ReLU kink; gradients may be unreliable."""
