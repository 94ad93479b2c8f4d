# models/run.py
import json
from dataclasses import dataclass, field, asdict
from enum import Enum
from typing import Optional, List, Dict, Any

import numpy as np
import pandas as pd

from core.exceptions import InvalidConfigError, ShapeError
from models.blocks import BlockVector, Grouping, BlockPartition
from models.policy import RegularizerPolicy


class ScheduleKind(Enum):
    GAUSS_SEIDEL = "gauss-seidel"
    JACOBI = "jacobi"
    HYBRID = "hybrid"
    TWO_GROUP = "two-group"


ALGORITHM_NAMES = {
    ScheduleKind.GAUSS_SEIDEL: "fadmm",
    ScheduleKind.JACOBI: "jadmm",
    ScheduleKind.HYBRID: "hadmm",
    ScheduleKind.TWO_GROUP: "hadmm2",
}


@dataclass(frozen=True)
class Schedule:
    """Order in which the blocks of one epoch are updated"""
    kind: ScheduleKind
    grouping: Optional[Grouping] = None

    def __post_init__(self):
        if self.kind in (ScheduleKind.HYBRID, ScheduleKind.TWO_GROUP) and self.grouping is None:
            raise InvalidConfigError(f"{self.kind.value} schedule needs a grouping")
        if self.kind is ScheduleKind.TWO_GROUP and self.grouping.ell != 2:
            raise InvalidConfigError(f"two-group schedule needs exactly 2 groups, got {self.grouping.ell}")

    @classmethod
    def gauss_seidel(cls) -> "Schedule":
        return cls(ScheduleKind.GAUSS_SEIDEL)

    @classmethod
    def jacobi(cls) -> "Schedule":
        return cls(ScheduleKind.JACOBI)

    @classmethod
    def hybrid(cls, grouping: Grouping) -> "Schedule":
        return cls(ScheduleKind.HYBRID, grouping)

    @classmethod
    def two_group(cls, grouping: Grouping) -> "Schedule":
        return cls(ScheduleKind.TWO_GROUP, grouping)

    @property
    def algorithm(self) -> str:
        return ALGORITHM_NAMES[self.kind]

    def to_dict(self) -> Dict[str, Any]:
        data = {"kind": self.kind.value, "algorithm": self.algorithm}
        if self.grouping is not None:
            data["grouping"] = self.grouping.to_dict()
        return data


class StopRuleKind(Enum):
    CONSTRAINT_RESIDUAL = "constraint-residual"
    RELATIVE_ERROR = "relative-error"
    MAX_EPOCHS = "max-epochs"


@dataclass(eq=False)
class StopRule:
    kind: StopRuleKind = StopRuleKind.CONSTRAINT_RESIDUAL
    tol: float = 1e-10
    x_ref: Optional[np.ndarray] = None

    @classmethod
    def constraint_residual(cls, tol: float = 1e-10) -> "StopRule":
        return cls(StopRuleKind.CONSTRAINT_RESIDUAL, tol)

    @classmethod
    def relative_error(cls, x_ref: np.ndarray, tol: float = 1e-10) -> "StopRule":
        return cls(StopRuleKind.RELATIVE_ERROR, tol, np.asarray(x_ref, dtype=float).ravel())

    @classmethod
    def max_epochs(cls) -> "StopRule":
        return cls(StopRuleKind.MAX_EPOCHS, 0.0)

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind.value, "tol": self.tol}


class StopDecision(Enum):
    CONTINUE = "continue"
    CONVERGED = "converged"
    DIVERGED = "diverged"
    MAX_EPOCHS = "max-epochs"


@dataclass(eq=False)
class SolverConfig:
    """Penalty ρ, dual step γ, τ policy, schedule and stopping"""
    rho: float
    policy: RegularizerPolicy
    schedule: Schedule
    gamma: float = 1.0
    max_epochs: int = 50000
    stop: StopRule = field(default_factory=StopRule.constraint_residual)
    divergence_threshold: float = 1e12
    divergence_grace_epochs: int = 10
    threads: int = 1
    track_g_metric: bool = False

    def __post_init__(self):
        if not self.rho > 0:
            raise InvalidConfigError(f"rho must be positive, got {self.rho}")
        if not 0 < self.gamma < 2:
            raise InvalidConfigError(f"gamma must lie in (0, 2), got {self.gamma}")
        if self.max_epochs < 0:
            raise InvalidConfigError("max_epochs must be >= 0")
        if self.threads < 1:
            raise InvalidConfigError("threads must be >= 1")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "rho": self.rho,
            "gamma": self.gamma,
            "policy": self.policy.to_dict(),
            "schedule": self.schedule.to_dict(),
            "max_epochs": self.max_epochs,
            "stop": self.stop.to_dict(),
            "divergence_threshold": self.divergence_threshold,
            "divergence_grace_epochs": self.divergence_grace_epochs,
            "threads": self.threads,
            "track_g_metric": self.track_g_metric,
        }


@dataclass(eq=False)
class StateSnapshot:
    """u = (x, y) frozen at one epoch"""
    x: BlockVector
    y: np.ndarray


@dataclass(eq=False)
class SolverState:
    """Iterate u^(k) = (x^(k), y^(k)) plus cached products.

    ``block_products[j]`` holds A_j x_j; ``residual`` holds Ax − b as of the
    last refresh.
    """
    x: BlockVector
    y: np.ndarray
    block_products: np.ndarray
    residual: np.ndarray
    epoch: int = 0
    history: List[Dict[str, float]] = field(default_factory=list)

    @classmethod
    def initial(cls, problem, x0: Optional[np.ndarray] = None,
                y0: Optional[np.ndarray] = None) -> "SolverState":
        partition = problem.partition
        x = BlockVector(partition, None if x0 is None else np.array(x0, dtype=float))
        y = np.zeros(problem.m) if y0 is None else np.array(y0, dtype=float).ravel()
        if y.shape[0] != problem.m:
            raise ShapeError(f"y0 has length {y.shape[0]}, expected {problem.m}")

        A = problem.matrix
        products = np.zeros((A.n, A.m))
        for j in range(A.n):
            products[j] = A.blocks[j] @ x.segment(j)
        state = cls(x=x, y=y, block_products=products, residual=np.zeros(problem.m))
        state.refresh_residual(problem.b)
        return state

    def refresh_residual(self, b: np.ndarray) -> np.ndarray:
        self.residual = self.block_products.sum(axis=0) - b
        return self.residual

    def group_product(self, grouping: Grouping, i: int) -> np.ndarray:
        """g_i = 𝒜_i 𝐱_i from the cache"""
        return self.block_products[sorted(grouping.index_sets[i])].sum(axis=0)

    @property
    def half_sq_residual(self) -> float:
        return 0.5 * float(self.residual @ self.residual)

    def snapshot(self) -> StateSnapshot:
        return StateSnapshot(self.x.copy(), self.y.copy())


class RunStatus(Enum):
    CONVERGED = "converged"
    DIVERGED = "diverged"
    MAX_EPOCHS = "max-epochs"


@dataclass
class RunReport:
    """Outcome of one solver run"""
    status: RunStatus
    epochs: int
    final_half_sq_residual: float
    tau_rule: str
    algorithm: str
    wall_time: float
    final_relative_error: Optional[float] = None
    kkt_violation: Optional[float] = None
    config: Dict[str, Any] = field(default_factory=dict)
    trace: List[Dict[str, float]] = field(default_factory=list)

    @property
    def converged(self) -> bool:
        return self.status is RunStatus.CONVERGED

    @property
    def diverged(self) -> bool:
        return self.status is RunStatus.DIVERGED

    @property
    def hit_max_epochs(self) -> bool:
        return self.status is RunStatus.MAX_EPOCHS

    def trace_frame(self) -> pd.DataFrame:
        columns = ["epoch", "half_sq_residual", "g_dist_to_ref", "g_step"]
        return pd.DataFrame(self.trace, columns=columns)

    def to_dict(self, include_trace: bool = False) -> Dict[str, Any]:
        data = asdict(self)
        data["status"] = self.status.value
        data["converged"] = self.converged
        data["diverged"] = self.diverged
        if not include_trace:
            data.pop("trace")
        return data

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), default=_json_default, **kwargs)


def _json_default(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"cannot serialize {type(value).__name__}")
