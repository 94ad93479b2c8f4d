# models/problem.py
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Dict, Any

import numpy as np

from core.exceptions import ShapeError
from models.blocks import BlockMatrix, BlockPartition
from models.objectives import SeparableObjective


class ProblemFamily(Enum):
    L2 = "l2"
    L1 = "l1"
    CUSTOM = "custom"


@dataclass(eq=False)
class Problem:
    """minimize Σ f_i(x_i) subject to Σ A_i x_i = b"""
    matrix: BlockMatrix
    b: np.ndarray
    objective: SeparableObjective
    family: ProblemFamily = ProblemFamily.CUSTOM
    seed: Optional[int] = None
    x_star: Optional[np.ndarray] = None

    def __post_init__(self):
        self.b = np.asarray(self.b, dtype=float).ravel()
        if self.b.shape[0] != self.matrix.m:
            raise ShapeError(f"b has length {self.b.shape[0]}, A has {self.matrix.m} rows")
        if self.objective.n != self.matrix.n:
            raise ShapeError(f"objective has {self.objective.n} terms, A has {self.matrix.n} blocks")
        if self.x_star is not None:
            self.x_star = np.asarray(self.x_star, dtype=float).ravel()
            if self.x_star.shape[0] != self.matrix.partition.total:
                raise ShapeError("x_star does not conform to the partition")

    @property
    def partition(self) -> BlockPartition:
        return self.matrix.partition

    @property
    def m(self) -> int:
        return self.matrix.m

    @property
    def n(self) -> int:
        return self.matrix.n

    @property
    def mu(self) -> float:
        return self.objective.mu

    def meta(self) -> Dict[str, Any]:
        """Metadata persisted alongside the matrix files"""
        params = [t.to_dict().get("params") for t in self.objective.terms]
        data = {
            "family": self.family.value,
            "m": self.m,
            "block_sizes": list(self.partition.block_sizes),
            "objectives": self.objective.kinds(),
            "mu": [t.mu for t in self.objective.terms],
            "seed": self.seed,
            "sparse": self.matrix.is_sparse,
        }
        if any(p is not None for p in params):
            data["objective_params"] = params
        return data
