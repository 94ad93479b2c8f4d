# analysis/oracles.py
import logging
import warnings
from typing import Tuple, Optional

import numpy as np
import scipy.sparse as sp
from scipy.linalg import cho_factor, cho_solve, lstsq, LinAlgError

from core.exceptions import RankDeficientWarning, ShapeError
from models.blocks import BlockMatrix, BlockVector
from models.objectives import ObjectiveKind

logger = logging.getLogger(__name__)


def l2_kkt_oracle(A, b: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Saddle point of min ½‖x‖² s.t. Ax = b: AAᵀy* = b, x* = Aᵀy*"""
    A = A.assemble() if isinstance(A, BlockMatrix) else A
    b = np.asarray(b, dtype=float).ravel()
    if A.shape[0] != b.shape[0]:
        raise ShapeError(f"A has {A.shape[0]} rows, b has length {b.shape[0]}")

    gram = A @ A.T
    gram = gram.toarray() if sp.issparse(gram) else np.asarray(gram)
    try:
        factor = cho_factor(gram)
        y_star = cho_solve(factor, b)
        if not np.all(np.isfinite(y_star)):
            raise LinAlgError("non-finite solution")
    except LinAlgError:
        msg = "AAᵀ is not positive definite; using the minimum-norm least-squares solution"
        logger.warning(msg)
        warnings.warn(msg, RankDeficientWarning, stacklevel=2)
        y_star = lstsq(gram, b, lapack_driver="gelsd")[0]

    x_star = np.asarray(A.T @ y_star).ravel()
    return x_star, y_star


def kkt_residual_l2(A: BlockMatrix, x: BlockVector, y: np.ndarray) -> float:
    """‖x − Aᵀy‖: stationarity of ½‖x‖² − yᵀ(Ax − b)"""
    grad = np.concatenate([np.asarray(A.blocks[j].T @ y).ravel() for j in range(A.n)])
    return float(np.linalg.norm(x.data - grad))


def l1_subgradient_violation(A: BlockMatrix, x: BlockVector, y: np.ndarray,
                             zero_tol: float = 0.0) -> float:
    """Largest componentwise distance of Aᵀy from ∂‖x‖₁"""
    g = np.concatenate([np.asarray(A.blocks[j].T @ y).ravel() for j in range(A.n)])
    xs = x.data
    active = np.abs(xs) > zero_tol
    viol = np.where(active, np.abs(g - np.sign(xs)), np.maximum(np.abs(g) - 1.0, 0.0))
    return float(viol.max()) if viol.size else 0.0


def kkt_violation(problem, x: BlockVector, y: np.ndarray) -> Optional[float]:
    """KKT stationarity check when every block has the same supported kind"""
    kinds = {t.kind for t in problem.objective.terms}
    if kinds == {ObjectiveKind.HALF_SQ_L2}:
        return kkt_residual_l2(problem.matrix, x, y)
    if kinds == {ObjectiveKind.L1}:
        return l1_subgradient_violation(problem.matrix, x, y)
    return None


def relative_error(x: np.ndarray, x_ref: np.ndarray) -> float:
    """‖x − x_ref‖/‖x_ref‖ (absolute error when x_ref = 0)"""
    ref_norm = np.linalg.norm(x_ref)
    err = np.linalg.norm(np.asarray(x) - np.asarray(x_ref))
    return float(err / ref_norm) if ref_norm > 0 else float(err)
