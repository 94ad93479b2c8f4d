# data/problem_store.py
import json
import logging
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from scipy.io import mmread, mmwrite

from core.exceptions import InvalidConfigError, ShapeError
from data.data_provider import ProblemProvider, PathLike
from models.blocks import BlockMatrix, BlockPartition
from models.objectives import BlockObjective, SeparableObjective
from models.problem import Problem, ProblemFamily

logger = logging.getLogger(__name__)

META_FILE = "meta.json"
MATRIX_FILE = "A.mtx"
RHS_FILE = "b.vec"
REFERENCE_FILE = "x_star.vec"


def write_vector(path: Path, values: np.ndarray, digits: int = 17):
    """One value per line, C-locale '%.17g'"""
    np.savetxt(path, np.asarray(values, dtype=float).ravel(), fmt=f"%.{digits}g")


def read_vector(path: Path) -> np.ndarray:
    return np.loadtxt(path, dtype=float, ndmin=1)


class MatrixMarketStore(ProblemProvider):
    """Problem directories: meta.json, A.mtx, b.vec and optionally x_star.vec"""

    def __init__(self, digits: int = 17):
        self.digits = digits

    def exists(self, location: PathLike) -> bool:
        root = Path(location)
        return all((root / name).is_file() for name in (META_FILE, MATRIX_FILE, RHS_FILE))

    def save(self, problem: Problem, location: PathLike) -> Path:
        root = Path(location)
        root.mkdir(parents=True, exist_ok=True)

        with open(root / META_FILE, "w", encoding="utf-8") as f:
            json.dump(problem.meta(), f, indent=2, sort_keys=True)
            f.write("\n")

        A = problem.matrix.assemble()
        if sp.issparse(A):
            A = sp.coo_matrix(A)
        mmwrite(str(root / MATRIX_FILE), A, precision=self.digits, symmetry="general")
        write_vector(root / RHS_FILE, problem.b, self.digits)
        if problem.x_star is not None:
            write_vector(root / REFERENCE_FILE, problem.x_star, self.digits)

        logger.info("saved %s instance (%d×%d, %d blocks) to %s", problem.family.value,
                    problem.m, problem.partition.total, problem.n, root)
        return root

    def load(self, location: PathLike) -> Problem:
        root = Path(location)
        if not self.exists(root):
            raise FileNotFoundError(f"{root} is not a problem directory (needs {META_FILE}, {MATRIX_FILE}, {RHS_FILE})")

        with open(root / META_FILE, "r", encoding="utf-8") as f:
            try:
                meta = json.load(f)
            except json.JSONDecodeError as e:
                raise InvalidConfigError(f"cannot parse {root / META_FILE}: {e}") from e

        try:
            partition = BlockPartition(tuple(meta["block_sizes"]))
            kinds = meta["objectives"]
            family = ProblemFamily(meta.get("family", "custom"))
        except (KeyError, ValueError) as e:
            raise InvalidConfigError(f"invalid metadata in {root / META_FILE}: {e}") from e
        params = meta.get("objective_params") or [None] * len(kinds)
        objective = SeparableObjective(tuple(BlockObjective.from_dict(k, p) for k, p in zip(kinds, params)))

        raw = mmread(str(root / MATRIX_FILE))
        A = sp.csc_matrix(raw) if sp.issparse(raw) else np.asarray(raw, dtype=float)
        if A.shape[0] != meta.get("m", A.shape[0]):
            raise ShapeError(f"A.mtx has {A.shape[0]} rows, metadata says {meta['m']}")
        matrix = BlockMatrix.from_matrix(A, partition)

        x_star = read_vector(root / REFERENCE_FILE) if (root / REFERENCE_FILE).is_file() else None
        problem = Problem(matrix, read_vector(root / RHS_FILE), objective,
                          family=family, seed=meta.get("seed"), x_star=x_star)
        logger.info("loaded %s instance from %s", family.value, root)
        return problem
