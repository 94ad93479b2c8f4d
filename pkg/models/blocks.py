# models/blocks.py
"""Block-partitioned problem data.

Blocks and groups are indexed from 0 in code; block ``j`` of the code is
block ``j + 1`` in the usual 1-based notation.
"""
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union, Iterable

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator

from core.exceptions import ShapeError, InvalidGroupingError

MatrixLike = Union[np.ndarray, sp.spmatrix, sp.sparray]


@dataclass(frozen=True)
class BlockPartition:
    """Split of N variables into n consecutive blocks"""
    block_sizes: Tuple[int, ...]
    offsets: Tuple[int, ...] = field(init=False, repr=False)

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.block_sizes)
        if not sizes:
            raise ShapeError("a partition needs at least one block")
        if any(s < 1 for s in sizes):
            raise ShapeError(f"block sizes must be >= 1, got {sizes}")
        object.__setattr__(self, "block_sizes", sizes)
        object.__setattr__(self, "offsets", tuple(np.concatenate(([0], np.cumsum(sizes))).tolist()))

    @classmethod
    def uniform(cls, n: int, size: int) -> "BlockPartition":
        return cls(tuple([size] * n))

    @property
    def n(self) -> int:
        return len(self.block_sizes)

    @property
    def total(self) -> int:
        return self.offsets[-1]

    def slice(self, j: int) -> slice:
        self._check_index(j)
        return slice(self.offsets[j], self.offsets[j + 1])

    def _check_index(self, j: int):
        if not 0 <= j < self.n:
            raise IndexError(f"block index {j} out of range for {self.n} blocks")

    def to_dict(self):
        return {"block_sizes": list(self.block_sizes)}


@dataclass(frozen=True)
class Grouping:
    """Ordered disjoint index sets S_1..S_ℓ covering all blocks"""
    partition: BlockPartition
    index_sets: Tuple[Tuple[int, ...], ...]

    def __post_init__(self):
        sets = tuple(tuple(int(j) for j in s) for s in self.index_sets)
        if not sets or any(len(s) == 0 for s in sets):
            raise InvalidGroupingError("every group must contain at least one block")

        flat = [j for s in sets for j in s]
        if len(flat) != len(set(flat)):
            raise InvalidGroupingError("index sets are not disjoint")
        if sorted(flat) != list(range(self.partition.n)):
            raise InvalidGroupingError(
                f"index sets must cover blocks 0..{self.partition.n - 1} exactly")
        object.__setattr__(self, "index_sets", sets)

    @property
    def ell(self) -> int:
        return len(self.index_sets)

    @property
    def group_sizes(self) -> Tuple[int, ...]:
        return tuple(len(s) for s in self.index_sets)

    @property
    def group_size(self) -> int:
        """Nominal p: size of the first group (the last may hold a remainder)"""
        return len(self.index_sets[0])

    def member(self, i: int, j: int) -> int:
        """S_{i,j}: the j-th block of group i"""
        return self.index_sets[i][j]

    def group_of(self, block: int) -> int:
        for i, s in enumerate(self.index_sets):
            if block in s:
                return i
        raise IndexError(f"block {block} not in any group")

    def to_dict(self):
        return {"ell": self.ell, "index_sets": [list(s) for s in self.index_sets]}


def make_contiguous_grouping(partition: BlockPartition, ell: int) -> Grouping:
    """Contiguous groups of p = n // ℓ blocks; the last group takes any remainder."""
    n = partition.n
    if ell <= 0 or ell > n:
        raise InvalidGroupingError(f"number of groups must be in 1..{n}, got {ell}")

    p = n // ell
    sets = [tuple(range(i * p, (i + 1) * p)) for i in range(ell - 1)]
    sets.append(tuple(range((ell - 1) * p, n)))
    return Grouping(partition, tuple(sets))


def make_two_group_grouping(partition: BlockPartition, first_size: Optional[int] = None) -> Grouping:
    """Two groups; the first holds ``first_size`` blocks (default n // 2)."""
    n = partition.n
    if n < 2:
        raise InvalidGroupingError("two groups need at least two blocks")
    first = n // 2 if first_size is None else int(first_size)
    if not 1 <= first < n:
        raise InvalidGroupingError(f"first group size must be in 1..{n - 1}, got {first}")
    return Grouping(partition, (tuple(range(first)), tuple(range(first, n))))


@dataclass(frozen=True, eq=False)
class BlockMatrix:
    """A = [A_1, ..., A_n] stored as column blocks.

    Sparse blocks are kept in CSC form, dense blocks in column-major order.
    """
    blocks: Tuple[MatrixLike, ...]
    partition: BlockPartition

    def __post_init__(self):
        blocks = tuple(_normalize_block(B) for B in self.blocks)
        if len(blocks) != self.partition.n:
            raise ShapeError(f"expected {self.partition.n} blocks, got {len(blocks)}")

        rows = {B.shape[0] for B in blocks}
        if len(rows) != 1:
            raise ShapeError(f"all blocks must share the row count, got {sorted(rows)}")
        for j, B in enumerate(blocks):
            if B.shape[1] != self.partition.block_sizes[j]:
                raise ShapeError(
                    f"block {j} has {B.shape[1]} columns, partition says {self.partition.block_sizes[j]}")
        object.__setattr__(self, "blocks", blocks)

    @classmethod
    def from_matrix(cls, A: MatrixLike, partition: BlockPartition) -> "BlockMatrix":
        if A.shape[1] != partition.total:
            raise ShapeError(f"matrix has {A.shape[1]} columns, partition totals {partition.total}")
        if sp.issparse(A):
            A = sp.csc_matrix(A)
        else:
            A = np.asarray(A, dtype=float)
        return cls(tuple(A[:, partition.slice(j)] for j in range(partition.n)), partition)

    @property
    def m(self) -> int:
        return self.blocks[0].shape[0]

    @property
    def n(self) -> int:
        return self.partition.n

    @property
    def shape(self) -> Tuple[int, int]:
        return self.m, self.partition.total

    @property
    def is_sparse(self) -> bool:
        return sp.issparse(self.blocks[0])

    def __getitem__(self, j: int) -> MatrixLike:
        return self.blocks[j]

    def assemble(self) -> MatrixLike:
        """Concatenate the blocks back into A"""
        if self.is_sparse:
            return sp.hstack(self.blocks, format="csc")
        return np.hstack(self.blocks)

    def to_dense(self) -> np.ndarray:
        A = self.assemble()
        return A.toarray() if sp.issparse(A) else np.array(A)

    def operator(self, blocks: Optional[Sequence[int]] = None) -> LinearOperator:
        """Implicit operator for the column slice over ``blocks`` (default all)"""
        idx = list(range(self.n)) if blocks is None else list(blocks)
        sizes = [self.partition.block_sizes[j] for j in idx]
        cuts = np.concatenate(([0], np.cumsum(sizes)))

        def matvec(w):
            w = np.ravel(w)
            out = np.zeros(self.m)
            for k, j in enumerate(idx):
                out += self.blocks[j] @ w[cuts[k]:cuts[k + 1]]
            return out

        def rmatvec(z):
            z = np.ravel(z)
            return np.concatenate([self.blocks[j].T @ z for j in idx])

        return LinearOperator((self.m, int(cuts[-1])), matvec=matvec, rmatvec=rmatvec, dtype=float)


def _normalize_block(B: MatrixLike) -> MatrixLike:
    if sp.issparse(B):
        B = sp.csc_matrix(B, dtype=float)
        B.sort_indices()
        return B
    B = np.array(np.atleast_2d(B), dtype=float, order="F")
    B.setflags(write=False)
    return B


class BlockVector:
    """A vector conforming to a BlockPartition.

    Stored flat; ``segment(i)`` returns a view onto block i.
    """

    def __init__(self, partition: BlockPartition, data: Optional[np.ndarray] = None):
        self.partition = partition
        if data is None:
            data = np.zeros(partition.total)
        data = np.asarray(data, dtype=float).ravel()
        if data.shape[0] != partition.total:
            raise ShapeError(f"vector has length {data.shape[0]}, partition totals {partition.total}")
        self.data = data

    @classmethod
    def zeros(cls, partition: BlockPartition) -> "BlockVector":
        return cls(partition)

    @classmethod
    def from_segments(cls, partition: BlockPartition, segments: Iterable[np.ndarray]) -> "BlockVector":
        segments = [np.asarray(s, dtype=float).ravel() for s in segments]
        if len(segments) != partition.n:
            raise ShapeError(f"expected {partition.n} segments, got {len(segments)}")
        for j, s in enumerate(segments):
            if s.shape[0] != partition.block_sizes[j]:
                raise ShapeError(f"segment {j} has length {s.shape[0]}, expected {partition.block_sizes[j]}")
        return cls(partition, np.concatenate(segments))

    @property
    def segments(self) -> List[np.ndarray]:
        return [self.segment(j) for j in range(self.partition.n)]

    def segment(self, j: int) -> np.ndarray:
        return self.data[self.partition.slice(j)]

    def __getitem__(self, j: int) -> np.ndarray:
        return self.segment(j)

    def __setitem__(self, j: int, value: np.ndarray):
        self.data[self.partition.slice(j)] = value

    def group(self, grouping: Grouping, i: int) -> np.ndarray:
        """𝐱_i: the concatenated segments of group i"""
        return np.concatenate([self.segment(j) for j in grouping.index_sets[i]])

    def copy(self) -> "BlockVector":
        return BlockVector(self.partition, self.data.copy())

    def norm(self) -> float:
        return float(np.linalg.norm(self.data))

    def __len__(self):
        return self.partition.total

    def __repr__(self):
        return f"BlockVector(n={self.partition.n}, N={self.partition.total})"


def block_apply(A: BlockMatrix, j: int, x_j: np.ndarray) -> np.ndarray:
    """A_j x_j"""
    x_j = np.asarray(x_j, dtype=float).ravel()
    if x_j.shape[0] != A.partition.block_sizes[j]:
        raise ShapeError(f"block {j} expects length {A.partition.block_sizes[j]}, got {x_j.shape[0]}")
    return np.asarray(A.blocks[j] @ x_j).ravel()


def group_apply(A: BlockMatrix, g: Grouping, i: int, x: BlockVector) -> np.ndarray:
    """𝒜_i 𝐱_i = Σ_{j∈S_i} A_j x_j, accumulated in ascending block order"""
    if not 0 <= i < g.ell:
        raise IndexError(f"group index {i} out of range for {g.ell} groups")
    out = np.zeros(A.m)
    for j in sorted(g.index_sets[i]):
        out += block_apply(A, j, x.segment(j))
    return out


def full_residual(A: BlockMatrix, x: BlockVector, b: np.ndarray) -> np.ndarray:
    """Ax − b"""
    b = np.asarray(b, dtype=float).ravel()
    if b.shape[0] != A.m:
        raise ShapeError(f"b has length {b.shape[0]}, A has {A.m} rows")
    if x.partition.total != A.partition.total:
        raise ShapeError("x does not conform to the matrix partition")
    out = np.zeros(A.m)
    for j in range(A.n):
        out += block_apply(A, j, x.segment(j))
    return out - b
