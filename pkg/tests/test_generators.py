# tests/test_generators.py
import numpy as np
import pytest
from numpy.testing import assert_array_equal

from core.exceptions import InvalidConfigError
from data.generators import (
    L1InstanceSpec, L2InstanceSpec, gen_l1, gen_l2, generate, instance_streams, run_seeds,
)
from models.blocks import BlockVector, full_residual
from models.objectives import ObjectiveKind
from models.problem import ProblemFamily

SMALL_L2 = dict(m=30, N=120, block_size=12, nnz_per_row=5, groups=5)
SMALL_L1 = dict(m=20, N=60, block_size=6, k=6, groups=5, two_group_first=5)


def test_default_constants():
    l2 = L2InstanceSpec()
    assert (l2.m, l2.N, l2.n, l2.block_size, l2.nnz_per_row, l2.rho_value, l2.groups) == (3000, 10000, 100, 100, 20, 0.1, 10)
    l1 = L1InstanceSpec()
    assert (l1.m, l1.N, l1.n, l1.block_size, l1.k, l1.groups, l1.two_group_first) == (300, 1000, 100, 10, 60, 25, 50)


def test_l2_instance_structure():
    spec = L2InstanceSpec(**SMALL_L2)
    problem = gen_l2(spec, 5)
    A = problem.matrix.assemble()
    assert problem.matrix.is_sparse
    assert A.nnz == spec.m * spec.nnz_per_row
    assert problem.mu == 1.0
    assert set(problem.objective.kinds()) == {ObjectiveKind.HALF_SQ_L2.value}
    assert problem.family is ProblemFamily.L2
    assert spec.rho(problem) == 0.1


def test_l2_row_counts_vary_around_the_mean():
    spec = L2InstanceSpec(m=200, N=1000, block_size=100, nnz_per_row=20, groups=5)
    row_nnz = np.diff(gen_l2(spec, 2).matrix.assemble().tocsr().indptr)
    assert row_nnz.mean() == 20.0
    assert row_nnz.min() < 20 < row_nnz.max()


def test_l2_exact_row_counts():
    spec = L2InstanceSpec(**SMALL_L2, exact_row_nnz=True)
    A = gen_l2(spec, 5).matrix.assemble()
    assert_array_equal(np.diff(A.tocsr().indptr), np.full(spec.m, spec.nnz_per_row))


def test_l2_rhs_is_in_range():
    spec = L2InstanceSpec(**SMALL_L2)
    problem = gen_l2(spec, 9)
    # b = Az for the solution-stream z
    _, rng_solution = instance_streams(9)
    z = rng_solution.standard_normal(spec.N)
    r = full_residual(problem.matrix, BlockVector(problem.partition, z), problem.b)
    assert np.max(np.abs(r)) <= 1e-12 * (1 + np.abs(problem.b).max())


def test_l1_instance_structure():
    spec = L1InstanceSpec(**SMALL_L1)
    problem, x_star = gen_l1(spec, 3)
    assert not problem.matrix.is_sparse
    assert problem.matrix.shape == (20, 60)
    assert np.count_nonzero(x_star) == 6
    assert problem.mu == 0.0
    r = full_residual(problem.matrix, BlockVector(problem.partition, x_star), problem.b)
    assert np.max(np.abs(r)) <= 1e-12 * (1 + np.abs(problem.b).max())
    assert spec.rho(problem) == pytest.approx(10.0 / np.abs(problem.b).sum())
    assert spec.stop_rule(problem).x_ref is not None


def test_full_size_l1_instance():
    problem, x_star = gen_l1(L1InstanceSpec(), 1)
    assert problem.matrix.shape == (300, 1000)
    assert problem.n == 100
    assert np.count_nonzero(x_star) == 60


@pytest.mark.parametrize("family", [ProblemFamily.L2, ProblemFamily.L1])
def test_same_seed_same_instance(family):
    spec = L2InstanceSpec(**SMALL_L2) if family is ProblemFamily.L2 else L1InstanceSpec(**SMALL_L1)
    a = generate(family, 42, spec)
    b = generate(family, 42, spec)
    c = generate(family, 43, spec)
    assert_array_equal(a.matrix.to_dense(), b.matrix.to_dense())
    assert_array_equal(a.b, b.b)
    assert not np.array_equal(a.b, c.b)


def test_run_seeds_are_stable_and_distinct():
    seeds = run_seeds(7, 5)
    assert seeds == run_seeds(7, 5)
    assert seeds[:3] == run_seeds(7, 3)
    assert len(set(seeds)) == 5


@pytest.mark.parametrize("overrides", [
    dict(N=125),
    dict(nnz_per_row=500),
    dict(groups=11),
    dict(m=0),
])
def test_invalid_l2_specs(overrides):
    with pytest.raises(InvalidConfigError):
        L2InstanceSpec(**{**SMALL_L2, **overrides})


def test_invalid_l1_specs():
    with pytest.raises(InvalidConfigError):
        L1InstanceSpec(**{**SMALL_L1, "k": 61})
    with pytest.raises(InvalidConfigError):
        L1InstanceSpec(**{**SMALL_L1, "two_group_first": 10})
    with pytest.raises(InvalidConfigError):
        L1InstanceSpec.from_dict({"sparsity": 3})
