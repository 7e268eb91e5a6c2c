"""Exception hierarchy shared by every module of the package."""


class EnsembleError(Exception):
    """Base class for all errors raised by ``rydberg_ensemble``."""


class InvalidDimensionsError(EnsembleError, ValueError):
    pass


class LengthMismatchError(EnsembleError, ValueError):
    pass


class BasisMismatchError(EnsembleError, ValueError):
    pass


class UnknownLevelError(EnsembleError, ValueError):
    pass


class IntegratorError(EnsembleError, RuntimeError):
    pass


class NonpositiveDistanceError(EnsembleError, ValueError):
    pass


class IndexOutOfRangeError(EnsembleError, ValueError):
    pass


class IdenticalIndicesError(EnsembleError, ValueError):
    pass


class InfeasibleFitError(EnsembleError, ValueError):
    pass


class DegeneratePointsError(EnsembleError, ValueError):
    pass


class NonpositiveFieldError(EnsembleError, ValueError):
    pass


class InvalidQuantumNumberError(EnsembleError, ValueError):
    pass


class UnknownParameterError(EnsembleError, ValueError):
    pass


class CircuitError(EnsembleError, ValueError):
    """Diagnostic raised by the circuit parser.

    ``kind`` is one of ``syntax-error``, ``index-out-of-range``,
    ``identical-indices`` or ``missing-header``; ``line`` and ``column`` are
    1-based positions in the source text.
    """

    def __init__(self, kind, message, line, column=1):
        self.kind = kind
        self.line = line
        self.column = column
        super().__init__(f"line {line}, column {column}: {kind}: {message}")
