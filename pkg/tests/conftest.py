# tests/conftest.py
import numpy as np
import pytest

from tests.helpers import make_problem


@pytest.fixture
def rng():
    return np.random.default_rng(20240101)


@pytest.fixture
def l2_problem():
    return make_problem(7)


@pytest.fixture
def l1_problem():
    return make_problem(11, m=8, block_sizes=(4, 4, 4, 4, 4), kind="l1")
