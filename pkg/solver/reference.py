# solver/reference.py
"""Gauss-Seidel ADMM with exact block solves and arbitrary quadratic regularizers.

With every P_j = 0 this is classic multi-block ADMM; used to check the
linearized solver in the limit P_j → 0.
"""
import logging
from typing import Optional, Sequence

import numpy as np

from core.exceptions import InvalidConfigError, ShapeError
from models.objectives import solve_quadratic_subproblem
from models.problem import Problem
from models.run import SolverState

logger = logging.getLogger(__name__)


def generalized_admm_reference(problem: Problem, rho: float, gamma: float = 1.0,
                               regularizers: Optional[Sequence[np.ndarray]] = None,
                               epochs: int = 1, x0: Optional[np.ndarray] = None,
                               y0: Optional[np.ndarray] = None) -> SolverState:
    if not rho > 0:
        raise InvalidConfigError(f"rho must be positive, got {rho}")
    if not 0 < gamma < 2:
        raise InvalidConfigError(f"gamma must lie in (0, 2), got {gamma}")

    A = problem.matrix
    sizes = problem.partition.block_sizes
    if regularizers is None:
        regularizers = [np.zeros((s, s)) for s in sizes]
    if len(regularizers) != problem.n:
        raise ShapeError(f"expected {problem.n} regularizers, got {len(regularizers)}")

    state = SolverState.initial(problem, x0, y0)
    for _ in range(epochs):
        w = state.block_products.sum(axis=0) - problem.b - state.y / rho
        for j in range(problem.n):
            x_old = state.x.segment(j).copy()
            x_new = solve_quadratic_subproblem(problem.objective[j], A.blocks[j], x_old, w,
                                               rho, regularizers[j])
            product = np.asarray(A.blocks[j] @ x_new).ravel()
            w += product - state.block_products[j]
            state.block_products[j] = product
            state.x[j] = x_new
        state.refresh_residual(problem.b)
        state.y = state.y - gamma * rho * state.residual
        state.epoch += 1

    logger.debug("reference ADMM: %d epochs, ½‖r‖² = %.3e", state.epoch, state.half_sq_residual)
    return state


def classic_admm_two_block(problem: Problem, rho: float, gamma: float = 1.0, epochs: int = 1,
                           x0: Optional[np.ndarray] = None, y0: Optional[np.ndarray] = None) -> SolverState:
    """Textbook two-block ADMM: exact minimisation in x_1 then x_2, then the dual step"""
    if problem.n != 2:
        raise InvalidConfigError(f"two-block ADMM needs exactly 2 blocks, got {problem.n}")
    return generalized_admm_reference(problem, rho, gamma, None, epochs, x0, y0)
