# tests/helpers.py
import numpy as np
import scipy.sparse as sp

from models.blocks import BlockMatrix, BlockPartition
from models.objectives import BlockObjective, SeparableObjective
from models.problem import Problem, ProblemFamily


def make_problem(seed: int, m: int = 6, block_sizes=(3, 3, 3, 3), kind: str = "l2",
                 sparse: bool = False, k: int = 3) -> Problem:
    """Small random instance: dense (or sparse) Gaussian A with full row rank"""
    rng = np.random.default_rng(seed)
    partition = BlockPartition(tuple(block_sizes))
    A = rng.standard_normal((m, partition.total))
    if sparse:
        A = sp.csc_matrix(A * (rng.random(A.shape) < 0.6))
    matrix = BlockMatrix.from_matrix(A, partition)

    if kind == "l2":
        z = rng.standard_normal(partition.total)
        objective = SeparableObjective.uniform(BlockObjective.half_sq(), partition.n)
        return Problem(matrix, matrix.assemble() @ z, objective, family=ProblemFamily.L2, seed=seed)

    x_star = np.zeros(partition.total)
    x_star[rng.choice(partition.total, size=k, replace=False)] = rng.standard_normal(k)
    objective = SeparableObjective.uniform(BlockObjective.l1(), partition.n)
    return Problem(matrix, matrix.assemble() @ x_star, objective,
                   family=ProblemFamily.L1, seed=seed, x_star=x_star)


def dense_coupling(A: np.ndarray, partition: BlockPartition, index_sets) -> np.ndarray:
    """Strictly block-upper part of the permuted cross-Gram matrix, formed explicitly"""
    cols = {j: np.arange(partition.offsets[j], partition.offsets[j + 1]) for j in range(partition.n)}
    C = np.zeros((partition.total, partition.total))
    for i, s in enumerate(index_sets):
        rows = np.concatenate([cols[j] for j in s])
        for t in index_sets[i + 1:]:
            other = np.concatenate([cols[j] for j in t])
            C[np.ix_(rows, other)] = A[:, rows].T @ A[:, other]
    return C
