"""Exception types shared across the package."""


class InputError(ValueError):
    """Invalid argument: wrong dimension, out-of-range constant, non-finite entry."""


class NumericError(ArithmeticError):
    """A numerical routine failed to converge; ``estimate`` holds the best value found."""

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


class DecompositionError(NumericError):
    """Matrix is not symmetric positive semi-definite."""


class RegimeError(InputError):
    """Problem constants do not fit the requested parameter regime."""


class ConfigError(ValueError):
    """Malformed or inconsistent experiment configuration."""


class RunAborted(NumericError):
    """An SGD run produced a non-finite iterate."""

    def __init__(self, step, iterate, sample):
        super().__init__(f"non-finite iterate at step {step}", estimate=iterate)
        self.step = step
        self.iterate = iterate
        self.sample = sample
