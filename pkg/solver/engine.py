# solver/engine.py
"""Run loop shared by every schedule: primal sweep, dual update, stop check."""
import logging
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from contextlib import nullcontext
from typing import Optional, Tuple

import numpy as np

from core.exceptions import InvalidConfigError, MetricViolationWarning, ShapeError
from models.blocks import BlockMatrix
from models.policy import RegularizerPolicy
from models.problem import Problem
from models.run import (
    SolverConfig, SolverState, StateSnapshot, StopRule, StopRuleKind, StopDecision,
    RunReport, RunStatus,
)
from analysis.oracles import kkt_violation, relative_error
from solver.schedules import make_schedule

logger = logging.getLogger(__name__)

METRIC_VIOLATION_TOL = -1e-10


def dual_update(state: SolverState, config: SolverConfig, b: Optional[np.ndarray] = None) -> SolverState:
    """y ← y − γρ(Ax − b), using the residual cached in ``state``"""
    if b is not None:
        state.refresh_residual(b)
    state.y = state.y - config.gamma * config.rho * state.residual
    return state


def g_metric(u, u_ref, policy: RegularizerPolicy, rho: float, gamma: float, A: BlockMatrix) -> float:
    """‖u − u_ref‖²_G with G = blockdiag(P_1, …, P_n, I/(γρ)) and P_j = τ_j I − ρA_jᵀA_j"""
    if u.x.partition.total != u_ref.x.partition.total or u.y.shape != u_ref.y.shape:
        raise ShapeError("snapshots do not conform")

    total = 0.0
    for j in range(A.n):
        dx = u.x.segment(j) - u_ref.x.segment(j)
        Adx = np.asarray(A.blocks[j] @ dx).ravel()
        total += policy.tau[j] * float(dx @ dx) - rho * float(Adx @ Adx)
    dy = u.y - u_ref.y
    total += float(dy @ dy) / (gamma * rho)

    if total < METRIC_VIOLATION_TOL:
        msg = f"G-metric is negative ({total:.3e}): some P_j is not positive semidefinite"
        logger.warning(msg)
        warnings.warn(msg, MetricViolationWarning, stacklevel=2)
    return total


def stop_check(state: SolverState, rule: StopRule, divergence_threshold: float = 1e12,
               grace_epochs: int = 10, max_epochs: Optional[int] = None) -> StopDecision:
    """converged / continue / diverged / max-epochs for the current iterate"""
    if rule.kind is StopRuleKind.RELATIVE_ERROR and rule.x_ref is None:
        raise InvalidConfigError("relative-error stop rule needs a reference solution")

    x = state.x.data
    half_sq = state.half_sq_residual
    if not (np.isfinite(half_sq) and np.all(np.isfinite(x)) and np.all(np.isfinite(state.y))):
        return StopDecision.DIVERGED
    if state.epoch >= grace_epochs and (half_sq > divergence_threshold
                                        or state.x.norm() > divergence_threshold):
        return StopDecision.DIVERGED

    if rule.kind is StopRuleKind.CONSTRAINT_RESIDUAL and half_sq <= rule.tol:
        return StopDecision.CONVERGED
    if rule.kind is StopRuleKind.RELATIVE_ERROR and relative_error(x, rule.x_ref) <= rule.tol:
        return StopDecision.CONVERGED

    if max_epochs is not None and state.epoch >= max_epochs:
        return StopDecision.MAX_EPOCHS
    return StopDecision.CONTINUE


_STATUS = {
    StopDecision.CONVERGED: RunStatus.CONVERGED,
    StopDecision.DIVERGED: RunStatus.DIVERGED,
    StopDecision.MAX_EPOCHS: RunStatus.MAX_EPOCHS,
}


def _check_config(problem: Problem, config: SolverConfig):
    if config.policy.n != problem.n:
        raise InvalidConfigError(f"policy has {config.policy.n} τ values, problem has {problem.n} blocks")
    grouping = config.schedule.grouping
    if grouping is not None and grouping.partition != problem.partition:
        raise InvalidConfigError("schedule grouping was built for a different partition")


def solve(problem: Problem, config: SolverConfig, x_ref: Optional[np.ndarray] = None,
          u_ref: Optional[StateSnapshot] = None, x0: Optional[np.ndarray] = None,
          y0: Optional[np.ndarray] = None) -> Tuple[RunReport, SolverState]:
    """Iterate until the stop rule fires; returns the report and the final state"""
    _check_config(problem, config)
    state = SolverState.initial(problem, x0, y0)
    A = problem.matrix
    rule = config.stop
    if x_ref is None and rule.x_ref is not None:
        x_ref = rule.x_ref

    def check():
        return stop_check(state, rule, config.divergence_threshold,
                          config.divergence_grace_epochs, config.max_epochs)

    pool = ThreadPoolExecutor(max_workers=config.threads) if config.threads > 1 else nullcontext()
    logger.info("run %s with τ rule %s (ρ=%g, γ=%g)", config.schedule.algorithm,
                config.policy.rule.value, config.rho, config.gamma)
    started = time.perf_counter()

    with pool as executor, np.errstate(over="ignore", invalid="ignore"):
        schedule = make_schedule(config.schedule, executor)
        previous = state.snapshot() if config.track_g_metric else None
        decision = check()
        while decision is StopDecision.CONTINUE:
            schedule.epoch(state, problem, config)
            dual_update(state, config, problem.b)
            state.epoch += 1

            record = {"epoch": state.epoch, "half_sq_residual": state.half_sq_residual,
                      "g_dist_to_ref": np.nan, "g_step": np.nan}
            if u_ref is not None:
                record["g_dist_to_ref"] = g_metric(state, u_ref, config.policy, config.rho, config.gamma, A)
            if previous is not None:
                record["g_step"] = g_metric(previous, state, config.policy, config.rho, config.gamma, A)
                previous = state.snapshot()
            state.history.append(record)

            decision = check()
            if state.epoch % 500 == 0:
                logger.debug("epoch %d: ½‖r‖² = %.3e", state.epoch, record["half_sq_residual"])

    elapsed = time.perf_counter() - started
    status = _STATUS[decision]
    if status is RunStatus.DIVERGED:
        logger.info("%s diverged after %d epochs", config.schedule.algorithm, state.epoch)
    else:
        logger.info("%s finished (%s) after %d epochs in %.2fs", config.schedule.algorithm,
                    status.value, state.epoch, elapsed)

    finite = bool(np.all(np.isfinite(state.x.data)) and np.all(np.isfinite(state.y)))
    report = RunReport(
        status=status,
        epochs=state.epoch,
        final_half_sq_residual=state.half_sq_residual,
        tau_rule=config.policy.rule.value,
        algorithm=config.schedule.algorithm,
        wall_time=elapsed,
        final_relative_error=relative_error(state.x.data, x_ref) if x_ref is not None and finite else None,
        kkt_violation=kkt_violation(problem, state.x, state.y) if finite else None,
        config=config.to_dict(),
        trace=state.history,
    )
    return report, state


def run(problem: Problem, config: SolverConfig, x_ref: Optional[np.ndarray] = None,
        u_ref: Optional[StateSnapshot] = None, x0: Optional[np.ndarray] = None,
        y0: Optional[np.ndarray] = None) -> RunReport:
    """Solve and keep only the scalar report"""
    return solve(problem, config, x_ref, u_ref, x0, y0)[0]
