# core/base_schedule.py
from abc import ABC, abstractmethod
from concurrent.futures import Executor
from typing import Optional, Sequence

import numpy as np

from core.exceptions import InvalidConfigError, ShapeError
from models.objectives import solve_block_subproblem


class BaseSchedule(ABC):
    """Abstract base class for every primal sweep.

    A schedule updates all n blocks once per ``epoch``; the dual update is
    left to the run loop.
    """

    def __init__(self, executor: Optional[Executor] = None):
        self.executor = executor

    @abstractmethod
    def epoch(self, state, problem, config):
        pass

    def validate_input(self, state, problem, config) -> None:
        """Validasi input sebelum sweep"""
        if config.policy.n != problem.n:
            raise InvalidConfigError(f"policy has {config.policy.n} τ values, problem has {problem.n} blocks")
        if not np.all(config.policy.tau > 0):
            raise InvalidConfigError("every τ_j must be strictly positive")
        if state.x.partition.total != problem.partition.total:
            raise ShapeError("state does not conform to the problem partition")

    def solve_blocks(self, blocks: Sequence[int], v: np.ndarray, state, problem, config) -> np.ndarray:
        """Jacobi update of ``blocks`` from one shared v; returns Σ A_j(x_j^new − x_j^old).

        Every solve reads only v and its own old block, so serial and threaded
        execution give identical results.
        """
        A = problem.matrix
        tau = config.policy.tau

        def solve(j):
            return solve_block_subproblem(problem.objective[j], A.blocks[j], state.x.segment(j),
                                          v, config.rho, tau[j])

        if self.executor is not None and len(blocks) > 1:
            updates = list(self.executor.map(solve, blocks))
        else:
            updates = [solve(j) for j in blocks]

        delta = np.zeros(A.m)
        for j, x_new in sorted(zip(blocks, updates), key=lambda item: item[0]):
            product = np.asarray(A.blocks[j] @ x_new).ravel()
            delta += product - state.block_products[j]
            state.block_products[j] = product
            state.x[j] = x_new
        return delta
