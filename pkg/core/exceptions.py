# core/exceptions.py
from typing import Optional


class FlexADMMError(Exception):
    """Base class for every error raised by the solver library"""


class ShapeError(FlexADMMError, ValueError):
    """Operand dimensions do not conform"""


class InvalidGroupingError(FlexADMMError, ValueError):
    """Index sets do not form a valid grouping of the blocks"""


class InvalidParameterError(FlexADMMError, ValueError):
    """A numeric parameter is outside its admissible range"""


class UnsupportedObjectiveError(FlexADMMError):
    """The block objective cannot be handled by the requested solve"""


class EstimationFailedError(FlexADMMError):
    """Power iteration did not reach the requested accuracy"""

    def __init__(self, message: str, best_estimate: float, iterations: int,
                 residual: Optional[float] = None):
        super().__init__(message)
        self.best_estimate = best_estimate
        self.iterations = iterations
        self.residual = residual


class NotStronglyConvexError(FlexADMMError):
    """A τ rule needs μ > 0 but the objective is merely convex"""


class DegenerateTauError(FlexADMMError):
    """A τ rule produced a non-positive regularization scalar"""


class InvalidConfigError(FlexADMMError, ValueError):
    """Solver, sweep or application configuration is inconsistent"""


class MetricViolationWarning(UserWarning):
    """G-metric evaluated negative: some P_j is not positive semidefinite"""


class RankDeficientWarning(UserWarning):
    """AAᵀ could not be factorized; a least-squares fallback was used"""
