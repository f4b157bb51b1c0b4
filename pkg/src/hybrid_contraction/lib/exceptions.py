"""Errors raised by the hybrid-system library.

None of these subclass ValueError, so pydantic validators that raise them let them propagate unchanged instead of
wrapping them in a ValidationError.
"""

import numpy as np
import numpy.typing as npt


class HybridSystemError(Exception):
    pass


class DimensionMismatchError(HybridSystemError):
    def __init__(self, *, expected: int | tuple[int, ...], actual: int | tuple[int, ...], what: str):
        self.expected = expected
        self.actual = actual
        super().__init__(f"Dimension mismatch for {what}: expected {expected}, got {actual}")


class NotPositiveDefiniteError(HybridSystemError):
    pass


class ConfigurationError(HybridSystemError):
    pass


class ExpressionError(ConfigurationError):
    pass


class EvaluatorError(HybridSystemError):
    """An evaluator callback failed or returned non-finite values."""

    def __init__(self, message: str, *, mode: str, t: float, x: npt.NDArray[np.float64]):
        self.mode = mode
        self.t = t
        self.x = x
        super().__init__(f"{message} (mode={mode}, t={t!r}, x={x.tolist()})")


class GrazingError(HybridSystemError):
    def __init__(self, *, guard: tuple[str, str], t: float, transversality: float):
        self.guard = guard
        self.t = t
        self.transversality = transversality
        super().__init__(
            f"Grazing contact with guard {guard[0]}->{guard[1]} at t={t!r}: transversality {transversality!r} is not"
            " strictly negative"
        )


class TransversalityError(HybridSystemError):
    pass


class OffGuardError(HybridSystemError):
    pass


class EventSequenceMismatchError(HybridSystemError):
    pass


class RankDeficiencyError(HybridSystemError):
    pass


class InvalidPathError(HybridSystemError):
    pass


class SimulationError(HybridSystemError):
    pass
