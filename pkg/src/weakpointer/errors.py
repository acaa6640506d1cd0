"""Exception hierarchy.

Every error raised by the library derives from :class:`WeakPointerError` and
carries an ``exit_code`` used by the command line front end.
"""


class WeakPointerError(Exception):
    exit_code = 10


class NotCommuting(WeakPointerError):
    exit_code = 11

    def __init__(self, residual: float):
        self.residual = residual
        super().__init__(f"observables do not commute: ||AB - BA||_max = {residual:.3e}")


class DegeneracyResolutionFailed(WeakPointerError):
    exit_code = 12


class NearOrthogonalSelection(WeakPointerError):
    exit_code = 13

    def __init__(self, overlap_abs: float, eps: float):
        self.overlap_abs = overlap_abs
        super().__init__(f"|<f|i>| = {overlap_abs:.3e} is below {eps:.1e}; weak values diverge")


class InvalidState(WeakPointerError, ValueError):
    """Input violates a type invariant (non-Hermitian matrix, non-unit vector, ...)."""

    exit_code = 14


class ModeNotContained(WeakPointerError):
    exit_code = 15


class SpecMismatch(WeakPointerError):
    exit_code = 16


class IncompatibleDims(WeakPointerError):
    exit_code = 17


class ZeroNorm(WeakPointerError):
    exit_code = 18


class HermiticityViolation(WeakPointerError):
    exit_code = 19


class ShiftTooLarge(WeakPointerError):
    exit_code = 20


class TooLargeForOracle(WeakPointerError):
    exit_code = 21


class NonpositiveW(WeakPointerError):
    exit_code = 22


class UnsupportedCombination(WeakPointerError):
    exit_code = 23


class ParseError(WeakPointerError):
    """Scenario file is malformed; ``field`` is a dotted path into the document."""

    exit_code = 3

    def __init__(self, field: str, reason: str):
        self.field = field
        self.reason = reason
        super().__init__(f"{field}: {reason}")
