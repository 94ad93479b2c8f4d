# solver/schedules.py
from concurrent.futures import Executor
from typing import Optional

import numpy as np

from core.base_schedule import BaseSchedule
from models.objectives import solve_block_subproblem
from models.run import Schedule, ScheduleKind, SolverState


def _shifted_residual(state: SolverState, problem, config) -> np.ndarray:
    """Σ_j A_j x_j − b − y/ρ from the cached products"""
    return state.block_products.sum(axis=0) - problem.b - state.y / config.rho


class GaussSeidelSchedule(BaseSchedule):
    """F-ADMM: blocks 1..n in turn, each seeing the fresh values of its predecessors"""

    def epoch(self, state, problem, config):
        self.validate_input(state, problem, config)
        A = problem.matrix
        tau = config.policy.tau

        w = _shifted_residual(state, problem, config)
        for j in range(problem.n):
            x_old = state.x.segment(j).copy()
            x_new = solve_block_subproblem(problem.objective[j], A.blocks[j], x_old, w, config.rho, tau[j])
            w += np.asarray(A.blocks[j] @ (x_new - x_old)).ravel()
            state.block_products[j] = np.asarray(A.blocks[j] @ x_new).ravel()
            state.x[j] = x_new
        return state


class JacobiSchedule(BaseSchedule):
    """J-ADMM: every block solved from the same stale residual"""

    def epoch(self, state, problem, config):
        self.validate_input(state, problem, config)
        v = _shifted_residual(state, problem, config)
        self.solve_blocks(list(range(problem.n)), v, state, problem, config)
        return state


class HybridSchedule(BaseSchedule):
    """H-ADMM: groups in Gauss-Seidel order, blocks inside a group in Jacobi fashion.

    v_i = Σ_{q<i} 𝒜_q𝐱_q^(k+1) + Σ_{s≥i} 𝒜_s𝐱_s^(k) − b − y^(k)/ρ
    """

    def epoch(self, state, problem, config):
        self.validate_input(state, problem, config)
        grouping = config.schedule.grouping

        v = _shifted_residual(state, problem, config)
        for blocks in grouping.index_sets:
            v = v + self.solve_blocks(list(blocks), v.copy(), state, problem, config)
        return state


class TwoGroupSchedule(BaseSchedule):
    """H-ADMM(ℓ=2), convergent for merely convex objectives.

    v_1 = 𝒜_1𝐱_1^(k) + 𝒜_2𝐱_2^(k) − b − y/ρ, v_2 = 𝒜_1𝐱_1^(k+1) + 𝒜_2𝐱_2^(k) − b − y/ρ
    """

    def epoch(self, state, problem, config):
        self.validate_input(state, problem, config)
        grouping = config.schedule.grouping
        shift = problem.b + state.y / config.rho

        for blocks in grouping.index_sets:
            v_i = state.group_product(grouping, 0) + state.group_product(grouping, 1) - shift
            self.solve_blocks(list(blocks), v_i, state, problem, config)
        return state


_SCHEDULES = {
    ScheduleKind.GAUSS_SEIDEL: GaussSeidelSchedule,
    ScheduleKind.JACOBI: JacobiSchedule,
    ScheduleKind.HYBRID: HybridSchedule,
    ScheduleKind.TWO_GROUP: TwoGroupSchedule,
}


def make_schedule(schedule: Schedule, executor: Optional[Executor] = None) -> BaseSchedule:
    return _SCHEDULES[schedule.kind](executor)


def epoch_gauss_seidel(state, problem, config, executor: Optional[Executor] = None):
    return GaussSeidelSchedule(executor).epoch(state, problem, config)


def epoch_jacobi(state, problem, config, executor: Optional[Executor] = None):
    return JacobiSchedule(executor).epoch(state, problem, config)


def epoch_hybrid(state, problem, config, executor: Optional[Executor] = None):
    return HybridSchedule(executor).epoch(state, problem, config)


def epoch_two_group(state, problem, config, executor: Optional[Executor] = None):
    return TwoGroupSchedule(executor).epoch(state, problem, config)
