"""Shared fixtures: the seeded model problems and their cached dense oracles."""

import numpy as np
import pytest

from specslice import (ModelSpec1D, ModelSpec2D, dense_eig, generate_1d,
                       generate_2d, partition_structured_1d, partition_structured_2d)

ACCEPTANCE_SEED = 7


@pytest.fixture(scope="session")
def model_1d_1600():
    """The 1D benchmark realization: 8 wells, h=0.1, n=1600, M=8."""
    A = generate_1d(ModelSpec1D(n_w=8, h=0.1, seed=ACCEPTANCE_SEED))
    part = partition_structured_1d(A.n, 8)
    return A, part


@pytest.fixture(scope="session")
def eig_1d_1600(model_1d_1600):
    A, _ = model_1d_1600
    return dense_eig(A)


@pytest.fixture(scope="session")
def model_2d_1600():
    """The 2D benchmark realization: 40x40 grid, h=1, M=16."""
    A = generate_2d(ModelSpec2D(n_x=40, n_y=40, seed=ACCEPTANCE_SEED))
    part = partition_structured_2d(40, 40, 16)
    return A, part


@pytest.fixture(scope="session")
def eig_2d_1600(model_2d_1600):
    A, _ = model_2d_1600
    return dense_eig(A)


@pytest.fixture(scope="session")
def model_1d_400():
    """Small 1D realization for oracle-heavy sweeps: 2 wells, n=400, M=4."""
    A = generate_1d(ModelSpec1D(n_w=2, h=0.1, seed=ACCEPTANCE_SEED))
    part = partition_structured_1d(A.n, 4)
    return A, part


def random_sparse_symmetric(n, density, seed, scale=1.0):
    """Seeded random sparse symmetric matrix with unit-bounded entries."""
    rng = np.random.default_rng(seed)
    mask = rng.random((n, n)) < density
    vals = rng.uniform(-1.0, 1.0, size=(n, n)) * mask
    sym = np.triu(vals) + np.triu(vals, 1).T
    np.fill_diagonal(sym, rng.uniform(-1.0, 1.0, size=n) * np.diagonal(mask))
    return sym * scale
