# analysis/spectral.py
"""Spectral norms of blocks, group slices and the strictly block-upper
cross-Gram operators, estimated by power iteration on opᵀop."""
import logging
from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator, aslinearoperator

from core.exceptions import EstimationFailedError, InvalidParameterError
from models.blocks import BlockMatrix, Grouping
from models.policy import SpectralReport

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-9
DEFAULT_MAX_ITERS = 5000
DEFAULT_SEED = 0x5EED

# Slices with at most this many columns get an exact Gram eigenvalue solve.
GRAM_COLUMN_LIMIT = 512


@dataclass
class PowerResult:
    sigma: float
    iterations: int
    rel_change: float


def power_iteration(op, tol: float = DEFAULT_TOL, max_iters: int = DEFAULT_MAX_ITERS,
                    seed: int = DEFAULT_SEED) -> PowerResult:
    """Largest singular value of ``op`` via the Rayleigh quotient of opᵀop"""
    if tol <= 0:
        raise InvalidParameterError(f"tol must be positive, got {tol}")
    op = aslinearoperator(op)

    rng = np.random.default_rng(seed)
    x = rng.standard_normal(op.shape[1])
    x /= np.linalg.norm(x)

    lam_prev = 0.0
    lam = 0.0
    change = np.inf
    for it in range(1, max_iters + 1):
        w = np.ravel(op.rmatvec(np.ravel(op.matvec(x))))
        w_norm = np.linalg.norm(w)
        if w_norm == 0.0:
            return PowerResult(0.0, it, 0.0)

        lam = float(x @ w)
        change = abs(lam - lam_prev) / lam if lam > 0 else np.inf
        if change <= tol:
            return PowerResult(float(np.sqrt(lam)), it, change)
        lam_prev = lam
        x = w / w_norm

    raise EstimationFailedError(
        f"power iteration did not converge in {max_iters} iterations (rel. change {change:.3e})",
        best_estimate=float(np.sqrt(max(lam, 0.0))), iterations=max_iters, residual=change)


def spectral_norm(op, tol: float = DEFAULT_TOL, max_iters: int = DEFAULT_MAX_ITERS,
                  seed: int = DEFAULT_SEED) -> float:
    """σ_max(op)"""
    return power_iteration(op, tol, max_iters, seed).sigma


def slice_norm(A: BlockMatrix, blocks: Sequence[int], tol: float = DEFAULT_TOL,
               max_iters: int = DEFAULT_MAX_ITERS, seed: int = DEFAULT_SEED) -> float:
    """‖[A_j for j in blocks]‖₂"""
    blocks = sorted(blocks)
    cols = sum(A.partition.block_sizes[j] for j in blocks)
    if cols <= GRAM_COLUMN_LIMIT:
        S = sp.hstack([A.blocks[j] for j in blocks]).toarray() if A.is_sparse \
            else np.hstack([A.blocks[j] for j in blocks])
        top = np.linalg.eigvalsh(S.T @ S)[-1]
        return float(np.sqrt(max(top, 0.0)))
    return spectral_norm(A.operator(blocks), tol, max_iters, seed)


def coupling_operator(A: BlockMatrix, index_sets: Sequence[Sequence[int]]) -> LinearOperator:
    """Implicit strictly block-upper operator with (i, q) block 𝒜_iᵀ𝒜_q, i < q.

    Applying it to w gives z_i = 𝒜_iᵀ Σ_{q>i} 𝒜_q w_q via suffix sums; the
    N×N matrix is never formed.
    """
    sets = [sorted(s) for s in index_sets]
    part = A.partition

    def group_products(w):
        out = []
        for s in sets:
            u = np.zeros(A.m)
            for j in s:
                u += A.blocks[j] @ w[part.slice(j)]
            out.append(u)
        return out

    def matvec(w):
        w = np.ravel(w)
        u = group_products(w)
        z = np.zeros(part.total)
        tail = np.zeros(A.m)
        for i in range(len(sets) - 1, -1, -1):
            for j in sets[i]:
                z[part.slice(j)] = A.blocks[j].T @ tail
            tail = tail + u[i]
        return z

    def rmatvec(z):
        z = np.ravel(z)
        u = group_products(z)
        w = np.zeros(part.total)
        head = np.zeros(A.m)
        for i in range(len(sets)):
            for j in sets[i]:
                w[part.slice(j)] = A.blocks[j].T @ head
            head = head + u[i]
        return w

    return LinearOperator((part.total, part.total), matvec=matvec, rmatvec=rmatvec, dtype=float)


def coupling_norm_blocks(A: BlockMatrix, tol: float = DEFAULT_TOL, max_iters: int = DEFAULT_MAX_ITERS,
                         seed: int = DEFAULT_SEED) -> float:
    """‖A_DᵀA_△‖₂ over single blocks"""
    if A.n == 1:
        return 0.0
    return spectral_norm(coupling_operator(A, [(j,) for j in range(A.n)]), tol, max_iters, seed)


def coupling_norm_groups(A: BlockMatrix, g: Grouping, tol: float = DEFAULT_TOL,
                         max_iters: int = DEFAULT_MAX_ITERS, seed: int = DEFAULT_SEED) -> float:
    """‖𝒜_Dᵀ𝒜_△‖₂ over the group slices of ``g``"""
    if g.ell == 1:
        return 0.0
    return spectral_norm(coupling_operator(A, g.index_sets), tol, max_iters, seed)


class SpectralCache:
    """Memoized spectral quantities of one matrix.

    Sweeps reuse one cache per instance across algorithms and τ cells.
    """

    def __init__(self, A: BlockMatrix, tol: float = DEFAULT_TOL, max_iters: int = DEFAULT_MAX_ITERS,
                 seed: int = DEFAULT_SEED, strict: bool = True):
        self.A = A
        self.strict = strict
        self.tol = tol
        self.max_iters = max_iters
        self.seed = seed
        self._block_norms: Optional[np.ndarray] = None
        self._full_norm: Optional[float] = None
        self._coupling_blocks: Optional[float] = None
        self._groups: Dict[Tuple[Tuple[int, ...], ...], Tuple[np.ndarray, float]] = {}
        self.residuals: Dict[str, float] = {}

    @property
    def block_norms(self) -> np.ndarray:
        if self._block_norms is None:
            self._block_norms = np.array([slice_norm(self.A, [j], self.tol, self.max_iters, self.seed)
                                          for j in range(self.A.n)])
        return self._block_norms

    @property
    def full_norm(self) -> float:
        """‖A‖₂"""
        if self._full_norm is None:
            res = self._power("full_norm", aslinearoperator(self.A.assemble()))
            self._full_norm = res.sigma
            self.residuals["full_norm"] = res.rel_change
            logger.debug("‖A‖₂ = %.6g", self._full_norm)
        return self._full_norm

    @property
    def coupling_blocks(self) -> float:
        if self._coupling_blocks is None:
            self._coupling_blocks = self._coupling("coupling_blocks", [(j,) for j in range(self.A.n)])
            logger.debug("‖A_DᵀA_△‖₂ = %.6g", self._coupling_blocks)
        return self._coupling_blocks

    def groups(self, g: Grouping) -> Tuple[np.ndarray, float]:
        """(per-group norms ‖𝒜_i‖₂, coupling norm ‖𝒜_Dᵀ𝒜_△‖₂)"""
        key = g.index_sets
        if key not in self._groups:
            norms = np.array([slice_norm(self.A, s, self.tol, self.max_iters, self.seed)
                              for s in g.index_sets])
            coupling = self._coupling(f"coupling_groups_{g.ell}", g.index_sets)
            self._groups[key] = (norms, coupling)
        return self._groups[key]

    def _coupling(self, label, index_sets) -> float:
        if len(index_sets) == 1:
            return 0.0
        res = self._power(label, coupling_operator(self.A, index_sets))
        self.residuals[label] = res.rel_change
        return res.sigma

    def _power(self, label, op) -> PowerResult:
        try:
            return power_iteration(op, self.tol, self.max_iters, self.seed)
        except EstimationFailedError as e:
            if self.strict:
                raise
            logger.warning("%s: %s; using best estimate %.10g", label, e, e.best_estimate)
            return PowerResult(e.best_estimate, e.iterations, e.residual)

    def report(self, g: Optional[Grouping] = None) -> SpectralReport:
        rep = SpectralReport(per_block_norms=self.block_norms,
                             coupling_norm_blocks=self.coupling_blocks,
                             full_norm=self.full_norm, residuals=dict(self.residuals))
        if g is not None:
            rep.per_group_norms, rep.coupling_norm_groups = self.groups(g)
            rep.index_sets = g.index_sets
            rep.residuals = dict(self.residuals)
        return rep


def spectral_report(A: BlockMatrix, g: Optional[Grouping] = None, tol: float = DEFAULT_TOL,
                    max_iters: int = DEFAULT_MAX_ITERS, seed: int = DEFAULT_SEED) -> SpectralReport:
    return SpectralCache(A, tol, max_iters, seed).report(g)
