# data/generators.py
"""Seeded instance generators for the two benchmark families.

Every instance draws from two PCG64 streams spawned from ``SeedSequence(seed)``:
child 0 builds A, child 1 builds z (or x*).
"""
import logging
from dataclasses import dataclass, asdict, fields
from typing import Dict, Any, List, Optional, Tuple

import numpy as np
import scipy.sparse as sp

from core.exceptions import InvalidConfigError
from models.blocks import BlockMatrix, BlockPartition
from models.objectives import BlockObjective, SeparableObjective
from models.problem import Problem, ProblemFamily
from models.run import StopRule

logger = logging.getLogger(__name__)


def instance_streams(seed: int) -> Tuple[np.random.Generator, np.random.Generator]:
    """(matrix stream, solution stream)"""
    matrix_seq, solution_seq = np.random.SeedSequence(seed).spawn(2)
    return np.random.Generator(np.random.PCG64(matrix_seq)), np.random.Generator(np.random.PCG64(solution_seq))


def run_seeds(seed: int, runs: int) -> List[int]:
    """One integer seed per run, spawned from the sweep seed"""
    return [int(child.generate_state(1, dtype=np.uint64)[0])
            for child in np.random.SeedSequence(seed).spawn(runs)]


class _InstanceSpec:
    def validate(self):
        if self.block_size < 1 or self.N % self.block_size:
            raise InvalidConfigError(f"N={self.N} is not a multiple of block_size={self.block_size}")
        if self.m < 1:
            raise InvalidConfigError(f"m must be >= 1, got {self.m}")
        if not 1 <= self.groups <= self.n:
            raise InvalidConfigError(f"groups must lie in [1, {self.n}], got {self.groups}")

    @property
    def n(self) -> int:
        return self.N // self.block_size

    @property
    def partition(self) -> BlockPartition:
        return BlockPartition.uniform(self.n, self.block_size)

    @classmethod
    def from_dict(cls, data: Optional[Dict[str, Any]] = None):
        data = dict(data or {})
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise InvalidConfigError(f"unknown instance keys: {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class L2InstanceSpec(_InstanceSpec):
    """min ½‖x‖² s.t. Ax = b with sparse A and b = Az"""
    m: int = 3000
    N: int = 10000
    block_size: int = 100
    nnz_per_row: int = 20
    rho_value: float = 0.1
    gamma: float = 1.0
    tol: float = 1e-10
    groups: int = 10
    exact_row_nnz: bool = False

    def __post_init__(self):
        self.validate()
        if not 1 <= self.nnz_per_row <= self.N:
            raise InvalidConfigError(f"nnz_per_row must lie in [1, N], got {self.nnz_per_row}")

    def rho(self, problem: Problem) -> float:
        return self.rho_value

    def stop_rule(self, problem: Problem) -> StopRule:
        return StopRule.constraint_residual(self.tol)


@dataclass
class L1InstanceSpec(_InstanceSpec):
    """min ‖x‖₁ s.t. Ax = b with dense A, k-sparse x* and b = Ax*"""
    m: int = 300
    N: int = 1000
    block_size: int = 10
    k: int = 60
    rho_scale: float = 10.0
    gamma: float = 1.0
    tol: float = 1e-10
    groups: int = 25
    two_group_first: int = 50

    def __post_init__(self):
        self.validate()
        if not 0 <= self.k <= self.N:
            raise InvalidConfigError(f"sparsity k must lie in [0, N], got {self.k}")
        if not 1 <= self.two_group_first < self.n:
            raise InvalidConfigError(f"two_group_first must lie in [1, {self.n - 1}]")

    def rho(self, problem: Problem) -> float:
        """ρ = 10/‖b‖₁"""
        norm = float(np.abs(problem.b).sum())
        if norm == 0:
            raise InvalidConfigError("‖b‖₁ = 0: ρ is undefined")
        return self.rho_scale / norm

    def stop_rule(self, problem: Problem) -> StopRule:
        return StopRule.relative_error(problem.x_star, self.tol)


def gen_l2(spec: L2InstanceSpec, seed: int) -> Problem:
    """Sparse Gaussian A with m·nnz_per_row nonzeros; z Gaussian; b = Az.

    Positions are uniform over the whole matrix, so rows hold about
    ``nnz_per_row`` entries each (binomially spread). ``exact_row_nnz``
    pins every row to exactly ``nnz_per_row`` distinct columns instead.
    """
    rng_matrix, rng_solution = instance_streams(seed)
    m, N, k = spec.m, spec.N, spec.nnz_per_row

    if spec.exact_row_nnz:
        cols = np.empty((m, k), dtype=np.int64)
        for i in range(m):
            cols[i] = np.sort(rng_matrix.choice(N, size=k, replace=False))
        values = rng_matrix.standard_normal((m, k))
        rows = np.repeat(np.arange(m), k)
        A = sp.csc_matrix((values.ravel(), (rows, cols.ravel())), shape=(m, N))
    else:
        A = sp.random(m, N, density=k / N, format="csc", random_state=rng_matrix,
                      data_rvs=rng_matrix.standard_normal)

    z = rng_solution.standard_normal(N)
    b = A @ z

    matrix = BlockMatrix.from_matrix(A, spec.partition)
    objective = SeparableObjective.uniform(BlockObjective.half_sq(), spec.n)
    logger.debug("generated l2 instance seed=%d (%d×%d, nnz=%d)", seed, m, N, A.nnz)
    return Problem(matrix, b, objective, family=ProblemFamily.L2, seed=seed)


def gen_l1(spec: L1InstanceSpec, seed: int) -> Tuple[Problem, np.ndarray]:
    """Dense Gaussian A; x* with k Gaussian entries at uniform positions; b = Ax*"""
    rng_matrix, rng_solution = instance_streams(seed)

    A = rng_matrix.standard_normal((spec.m, spec.N))
    x_star = np.zeros(spec.N)
    support = rng_solution.choice(spec.N, size=spec.k, replace=False)
    x_star[support] = rng_solution.standard_normal(spec.k)
    b = A @ x_star

    matrix = BlockMatrix.from_matrix(A, spec.partition)
    objective = SeparableObjective.uniform(BlockObjective.l1(), spec.n)
    logger.debug("generated l1 instance seed=%d (%d×%d, k=%d)", seed, spec.m, spec.N, spec.k)
    problem = Problem(matrix, b, objective, family=ProblemFamily.L1, seed=seed, x_star=x_star)
    return problem, problem.x_star


INSTANCE_SPECS = {ProblemFamily.L2: L2InstanceSpec, ProblemFamily.L1: L1InstanceSpec}


def generate(family: ProblemFamily, seed: int, spec=None) -> Problem:
    family = ProblemFamily(family)
    if family not in INSTANCE_SPECS:
        raise InvalidConfigError(f"no generator for family {family.value!r}")
    spec = spec or INSTANCE_SPECS[family]()
    if family is ProblemFamily.L2:
        return gen_l2(spec, seed)
    return gen_l1(spec, seed)[0]
