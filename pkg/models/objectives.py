# models/objectives.py
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional, Tuple, Dict, Any, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.linalg import cho_factor, cho_solve, LinAlgError

from core.exceptions import InvalidParameterError, UnsupportedObjectiveError, ShapeError

ProxFn = Callable[[np.ndarray, float], np.ndarray]
ValueFn = Callable[[np.ndarray], float]


class ObjectiveKind(Enum):
    HALF_SQ_L2 = "half_sq_l2"
    L1 = "l1"
    WEIGHTED_QUADRATIC = "weighted_quadratic"
    CUSTOM_PROX = "custom_prox"


QUADRATIC_KINDS = (ObjectiveKind.HALF_SQ_L2, ObjectiveKind.WEIGHTED_QUADRATIC)


def prox_l1(d: np.ndarray, lam: float) -> np.ndarray:
    """Soft thresholding: sign(d)·max(|d| − λ, 0)"""
    if lam <= 0:
        raise InvalidParameterError(f"threshold must be positive, got {lam}")
    d = np.asarray(d, dtype=float)
    return np.sign(d) * np.maximum(np.abs(d) - lam, 0.0)


def prox_half_sq(d: np.ndarray, tau: float) -> np.ndarray:
    """argmin ½‖x‖² + (τ/2)‖x − d‖² = τd/(τ + 1)"""
    if tau <= 0:
        raise InvalidParameterError(f"tau must be positive, got {tau}")
    ratio = tau / (tau + 1.0)
    return ratio * np.asarray(d, dtype=float)


@dataclass(frozen=True, eq=False)
class BlockObjective:
    """One separable term f_i with its strong convexity constant μ_i"""
    kind: ObjectiveKind
    mu: float
    weights: Optional[np.ndarray] = None
    prox_fn: Optional[ProxFn] = None
    value_fn: Optional[ValueFn] = None

    def __post_init__(self):
        if self.mu < 0:
            raise InvalidParameterError(f"strong convexity must be >= 0, got {self.mu}")
        if self.kind is ObjectiveKind.HALF_SQ_L2 and self.mu != 1.0:
            raise InvalidParameterError("half_sq_l2 has strong convexity exactly 1")
        if self.kind is ObjectiveKind.L1 and self.mu != 0.0:
            raise InvalidParameterError("l1 is merely convex (μ = 0)")
        if self.kind is ObjectiveKind.WEIGHTED_QUADRATIC:
            if self.weights is None or np.any(np.asarray(self.weights) < 0):
                raise InvalidParameterError("weighted_quadratic needs nonnegative weights")

    @classmethod
    def half_sq(cls) -> "BlockObjective":
        return cls(ObjectiveKind.HALF_SQ_L2, 1.0)

    @classmethod
    def l1(cls) -> "BlockObjective":
        return cls(ObjectiveKind.L1, 0.0)

    @classmethod
    def weighted_quadratic(cls, weights: Sequence[float]) -> "BlockObjective":
        w = np.asarray(weights, dtype=float).ravel()
        w.setflags(write=False)
        return cls(ObjectiveKind.WEIGHTED_QUADRATIC, float(w.min()) if w.size else 0.0, weights=w)

    @classmethod
    def custom(cls, prox_fn: Optional[ProxFn], mu: float = 0.0,
               value_fn: Optional[ValueFn] = None) -> "BlockObjective":
        return cls(ObjectiveKind.CUSTOM_PROX, float(mu), prox_fn=prox_fn, value_fn=value_fn)

    def prox(self, d: np.ndarray, tau: float) -> np.ndarray:
        """argmin f(x) + (τ/2)‖x − d‖²"""
        if tau <= 0:
            raise InvalidParameterError(f"tau must be positive, got {tau}")

        if self.kind is ObjectiveKind.HALF_SQ_L2:
            return prox_half_sq(d, tau)
        if self.kind is ObjectiveKind.L1:
            return prox_l1(d, 1.0 / tau)
        if self.kind is ObjectiveKind.WEIGHTED_QUADRATIC:
            d = np.asarray(d, dtype=float)
            if d.shape != self.weights.shape:
                raise ShapeError(f"weights have shape {self.weights.shape}, d has {d.shape}")
            return tau * d / (self.weights + tau)
        if self.prox_fn is None:
            raise UnsupportedObjectiveError("custom objective has no prox implementation")
        return np.asarray(self.prox_fn(np.asarray(d, dtype=float), tau), dtype=float)

    def value(self, x: np.ndarray) -> float:
        x = np.asarray(x, dtype=float)
        if self.kind is ObjectiveKind.HALF_SQ_L2:
            return 0.5 * float(x @ x)
        if self.kind is ObjectiveKind.L1:
            return float(np.abs(x).sum())
        if self.kind is ObjectiveKind.WEIGHTED_QUADRATIC:
            return 0.5 * float(self.weights @ (x * x))
        if self.value_fn is None:
            raise UnsupportedObjectiveError("custom objective has no value function")
        return float(self.value_fn(x))

    def to_dict(self) -> Dict[str, Any]:
        data = {"kind": self.kind.value, "mu": self.mu}
        if self.weights is not None:
            data["params"] = {"weights": self.weights.tolist()}
        return data

    @classmethod
    def from_dict(cls, kind: str, params: Optional[Dict[str, Any]] = None) -> "BlockObjective":
        try:
            kind = ObjectiveKind(kind)
        except ValueError as e:
            raise UnsupportedObjectiveError(f"unknown objective kind {kind!r}") from e

        if kind is ObjectiveKind.HALF_SQ_L2:
            return cls.half_sq()
        if kind is ObjectiveKind.L1:
            return cls.l1()
        if kind is ObjectiveKind.WEIGHTED_QUADRATIC:
            return cls.weighted_quadratic((params or {})["weights"])
        raise UnsupportedObjectiveError("custom_prox objectives cannot be loaded from files")


@dataclass(frozen=True)
class SeparableObjective:
    """f(x) = Σ_i f_i(x_i)"""
    terms: Tuple[BlockObjective, ...]

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        if not self.terms:
            raise InvalidParameterError("objective needs at least one term")

    @classmethod
    def uniform(cls, term: BlockObjective, n: int) -> "SeparableObjective":
        return cls(tuple([term] * n))

    @property
    def n(self) -> int:
        return len(self.terms)

    @property
    def mu(self) -> float:
        return min(t.mu for t in self.terms)

    def __getitem__(self, j: int) -> BlockObjective:
        return self.terms[j]

    def value(self, x) -> float:
        return sum(t.value(x.segment(j)) for j, t in enumerate(self.terms))

    def kinds(self):
        return [t.kind.value for t in self.terms]


def min_strong_convexity(obj: SeparableObjective) -> float:
    """μ = min_i μ_i; zero means merely convex"""
    return obj.mu


def solve_block_subproblem(f_j: BlockObjective, A_j, x_j_old: np.ndarray, v: np.ndarray,
                           rho: float, tau_j: float) -> np.ndarray:
    """Block update with P_j = τ_j I − ρA_jᵀA_j.

    The regularized subproblem
    ``f_j(x) + (ρ/2)‖A_j(x − x_old) + v‖² + ½‖x − x_old‖²_{P_j}``
    reduces to ``prox_{f_j/τ_j}(x_old − (ρ/τ_j) A_jᵀ v)``.
    """
    if tau_j <= 0:
        raise InvalidParameterError(f"tau must be positive, got {tau_j}")

    x_j_old = np.asarray(x_j_old, dtype=float)
    if f_j.kind is ObjectiveKind.HALF_SQ_L2:
        # (τ/(τ+1)) x_old − (ρ/(τ+1)) A_jᵀ v, ratio formed before scaling
        ratio = tau_j / (tau_j + 1.0)
        return ratio * x_j_old - (rho / (tau_j + 1.0)) * np.asarray(A_j.T @ v).ravel()

    d = x_j_old - (rho / tau_j) * np.asarray(A_j.T @ v).ravel()
    return f_j.prox(d, tau_j)


def solve_quadratic_subproblem(f_j: BlockObjective, A_j, x_j_old: np.ndarray, v: np.ndarray,
                               rho: float, P_j: np.ndarray) -> np.ndarray:
    """Block update for a general symmetric P_j (quadratic objectives only).

    Solves (P_j + W + ρA_jᵀA_j) x = (P_j + ρA_jᵀA_j) x_old − ρA_jᵀv by Cholesky.
    """
    if f_j.kind not in QUADRATIC_KINDS:
        raise UnsupportedObjectiveError(
            f"general regularizers need a quadratic objective, got {f_j.kind.value}")

    dense = A_j.toarray() if sp.issparse(A_j) else np.asarray(A_j)
    gram = rho * (dense.T @ dense)
    size = gram.shape[0]
    P_j = np.asarray(P_j, dtype=float)
    if P_j.shape != (size, size):
        raise ShapeError(f"P_j must be {size}x{size}, got {P_j.shape}")

    weights = np.ones(size) if f_j.weights is None else f_j.weights
    lhs = P_j + gram + np.diag(weights)
    rhs = (P_j + gram) @ np.asarray(x_j_old, dtype=float) - rho * (dense.T @ v)
    try:
        factor = cho_factor(lhs)
    except LinAlgError as e:
        raise InvalidParameterError("P_j + W + ρA_jᵀA_j is not positive definite") from e
    return cho_solve(factor, rhs)


def subproblem_objective(f_j: BlockObjective, A_j, x: np.ndarray, x_j_old: np.ndarray,
                         v: np.ndarray, rho: float, tau_j: float) -> float:
    """Value of the regularized block subproblem at x (for descent checks)"""
    dx = np.asarray(x, dtype=float) - np.asarray(x_j_old, dtype=float)
    Adx = np.asarray(A_j @ dx).ravel()
    coupling = 0.5 * rho * float(np.sum((Adx + v) ** 2))
    prox_term = 0.5 * (tau_j * float(dx @ dx) - rho * float(Adx @ Adx))
    return f_j.value(x) + coupling + prox_term
