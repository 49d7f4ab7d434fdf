"""Dense reference computations."""

import numpy as np
import pytest
import scipy.sparse as sp

from specslice import (SparseHermitian, dense_eig, eigs_in_window,
                       exact_lss_operator, match_eigenvalues, max_norm_error)
from specslice.oracle import OracleCapError

from conftest import random_sparse_symmetric


class TestDenseEig:
    def test_diagonal(self):
        eig = dense_eig(np.diag([3.0, 1.0, 2.0]))
        np.testing.assert_allclose(eig.values, [1.0, 2.0, 3.0])
        # eigenvectors are signed coordinate directions
        assert np.allclose(np.abs(eig.vectors), np.eye(3)[:, [1, 2, 0]])

    def test_two_by_two_swap(self):
        eig = dense_eig(np.array([[0.0, 1.0], [1.0, 0.0]]))
        np.testing.assert_allclose(eig.values, [-1.0, 1.0], atol=1e-15)

    def test_analytic_two_by_two(self):
        # [[a, b], [b, a]] has eigenvalues a -/+ b exactly
        eig = dense_eig(np.array([[2.5, 0.75], [0.75, 2.5]]))
        np.testing.assert_allclose(eig.values, [1.75, 3.25], atol=1e-12)

    def test_periodic_laplacian_analytic(self):
        n = 64
        A = sp.diags([np.full(n - 1, -1.0), np.full(n, 2.0), np.full(n - 1, -1.0)],
                     [-1, 0, 1]).tolil()
        A[0, n - 1] = A[n - 1, 0] = -1.0
        eig = dense_eig(SparseHermitian(A, symmetrize=False))
        analytic = np.sort(2.0 - 2.0 * np.cos(2 * np.pi * np.arange(n) / n))
        np.testing.assert_allclose(eig.values, analytic, atol=1e-12)

    def test_residual_and_orthogonality_invariants(self):
        dense = random_sparse_symmetric(60, 0.2, seed=12)
        eig = dense_eig(dense)
        n = dense.shape[0]
        resid = np.abs(dense @ eig.vectors - eig.vectors * eig.values).max()
        assert resid <= 1e-9 * max(np.abs(dense).max(), 1.0) * n
        gram = eig.vectors.T @ eig.vectors
        assert np.abs(gram - np.eye(n)).max() <= 1e-10

    def test_cap(self):
        with pytest.raises(OracleCapError):
            dense_eig(np.eye(10), cap=5)


class TestExactOperator:
    def test_zero_matrix(self):
        F = exact_lss_operator(np.zeros((4, 4)), mu=1.5, sigma=1.0)
        np.testing.assert_allclose(F, np.exp(-1.5 ** 2) * np.eye(4), atol=1e-15)

    def test_huge_sigma_is_identity(self):
        dense = random_sparse_symmetric(20, 0.3, seed=4)
        F = exact_lss_operator(dense, mu=0.0, sigma=1e6)
        np.testing.assert_allclose(F, np.eye(20), atol=1e-6)

    def test_hermitian_psd(self):
        dense = random_sparse_symmetric(30, 0.2, seed=5)
        F = exact_lss_operator(dense, mu=0.2, sigma=0.7)
        np.testing.assert_allclose(F, F.T, atol=1e-14)
        assert np.linalg.eigvalsh((F + F.T) / 2).min() >= -1e-10

    def test_trace_identity(self):
        dense = random_sparse_symmetric(30, 0.2, seed=6)
        eig = dense_eig(dense)
        F = exact_lss_operator(dense, mu=0.1, sigma=0.5, eig=eig)
        expected = np.exp(-(((eig.values - 0.1) / 0.5) ** 2)).sum()
        assert np.trace(F) == pytest.approx(expected, rel=1e-9)

    def test_bad_sigma(self):
        with pytest.raises(ValueError):
            exact_lss_operator(np.eye(3), mu=0.0, sigma=0.0)


class TestMaxNormError:
    def test_identical(self):
        F = np.ones((3, 3))
        assert max_norm_error(F, F) == 0.0

    def test_single_entry(self):
        F = np.zeros((3, 3))
        G = F.copy()
        G[1, 2] = -0.5
        assert max_norm_error(F, G) == 0.5

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            max_norm_error(np.eye(2), np.eye(3))

    def test_accepts_sparse(self):
        F = sp.eye(4)
        assert max_norm_error(F, np.eye(4)) == 0.0


class TestEigsInWindow:
    def test_diagonal_window(self):
        vals, vecs = eigs_in_window(np.diag(np.arange(1.0, 11.0)), (2.5, 5.5))
        np.testing.assert_allclose(vals, [3.0, 4.0, 5.0])
        assert vecs.shape == (10, 3)

    def test_open_interval(self):
        vals, _ = eigs_in_window(np.diag([1.0, 2.0, 3.0]), (1.0, 3.0))
        np.testing.assert_allclose(vals, [2.0])

    def test_self_consistent_with_full_eig(self):
        dense = random_sparse_symmetric(40, 0.2, seed=7)
        eig = dense_eig(dense)
        window = (float(np.percentile(eig.values, 30)), float(np.percentile(eig.values, 70)))
        vals, _ = eigs_in_window(dense, window, eig=eig)
        expected = eig.values[(eig.values > window[0]) & (eig.values < window[1])]
        np.testing.assert_allclose(vals, expected)


class TestMatchEigenvalues:
    def test_handles_clusters(self):
        ref = np.array([1.0, 1.0 + 1e-9, 5.0])
        comp = np.array([5.0 + 1e-8, 1.0 + 2e-9, 1.0 - 1e-10])
        _, _, errors = match_eigenvalues(ref, comp)
        assert errors.max() <= 2e-8

    def test_empty_inputs(self):
        _, _, errors = match_eigenvalues(np.empty(0), np.array([1.0]))
        assert errors.size == 0
