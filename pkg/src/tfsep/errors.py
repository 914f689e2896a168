"""Exception hierarchy.

The CLI maps each family onto an exit code: invalid input (2), I/O (3),
numerical failure (4).
"""


class TfsepError(Exception):
    """Base class for all package errors."""


class ValidationError(TfsepError, ValueError):
    """A precondition on arguments or signals was violated."""


class WavError(TfsepError, OSError):
    """A WAV file could not be read or written."""


class MalformedWavError(WavError):
    pass


class UnsupportedWavError(WavError):
    pass


class NumericError(TfsepError, ArithmeticError):
    """A computation could not be carried out reliably."""


class SingularGramError(NumericError):
    pass


class MemoryBudgetError(NumericError):
    """Materializing a spectrogram would exceed the configured budget."""
