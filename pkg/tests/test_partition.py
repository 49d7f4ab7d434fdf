"""Partitions: structured constructors, the multilevel partitioner, m-hop
extensions, map import/export."""

import itertools

import numpy as np
import pytest
import scipy.sparse as sp

from specslice import (SparseHermitian, effective_agreement_distance,
                       extended_elements_mhop, generate_2d, load_partition_map,
                       ModelSpec2D, partition_from_map, partition_general,
                       partition_mhop, partition_structured_1d,
                       partition_structured_2d, save_partition_map)
from specslice.partition import partition_summary

from conftest import random_sparse_symmetric
from test_core import path_graph_matrix, ring_matrix


def check_invariants(p):
    cover = np.sort(np.concatenate(p.elements))
    assert np.array_equal(cover, np.arange(p.n))
    for k in range(p.M):
        assert k in p.neighbor_lists[k]
        assert np.all(np.isin(p.elements[k], p.extended[k]))
    # neighbor symmetry
    for k in range(p.M):
        for kp in p.neighbor_lists[k]:
            assert k in p.neighbor_lists[kp]


def cut_value(dense, xi):
    n = dense.shape[0]
    cut = 0
    for i in range(n):
        for j in range(i + 1, n):
            if dense[i, j] != 0 and xi[i] != xi[j]:
                cut += 1
    return cut


class TestStructured1D:
    def test_paper_scale_sizes(self):
        p = partition_structured_1d(1600, 8)
        assert np.all(p.element_sizes() == 200)
        assert np.all(p.extended_sizes() == 600)
        assert np.all(p.c_q() == 3.0)
        check_invariants(p)

    def test_single_element(self):
        p = partition_structured_1d(10, 1)
        assert np.array_equal(p.elements[0], np.arange(10))
        assert np.array_equal(p.extended[0], np.arange(10))

    def test_small_wraparound_covers_everything(self):
        p = partition_structured_1d(6, 3)
        for q in p.extended:
            assert np.array_equal(q, np.arange(6))

    def test_indivisible_rejected(self):
        with pytest.raises(ValueError):
            partition_structured_1d(10, 3)


class TestStructured2D:
    def test_paper_scale_sizes(self):
        p = partition_structured_2d(40, 40, 16)
        assert np.all(p.element_sizes() == 100)
        assert np.all(p.extended_sizes() == 900)
        assert np.all(p.c_q() == 9.0)
        check_invariants(p)

    def test_whole_domain(self):
        p = partition_structured_2d(6, 6, 1)
        assert np.array_equal(p.extended[0], np.arange(36))

    def test_six_by_six_four_tiles_wrap_to_everything(self):
        # 3x3 tile neighborhoods on a 2x2 tile grid wrap onto all four tiles
        p = partition_structured_2d(6, 6, 4)
        for q in p.extended:
            assert np.array_equal(q, np.arange(36))

    def test_non_square_m_rejected(self):
        with pytest.raises(ValueError):
            partition_structured_2d(40, 40, 8)

    def test_tile_must_divide_grid(self):
        with pytest.raises(ValueError):
            partition_structured_2d(40, 42, 16)


class TestGeneralPartitioner:
    def test_path_graph_quarters(self):
        A = path_graph_matrix(16)
        p = partition_general(A, 4)
        got = {frozenset(e.tolist()) for e in p.elements}
        want = {frozenset(range(0, 4)), frozenset(range(4, 8)),
                frozenset(range(8, 12)), frozenset(range(12, 16))}
        assert got == want
        # middle element neighbors itself and both sides
        k = next(i for i, e in enumerate(p.elements) if 4 in e)
        assert len(p.neighbor_lists[k]) == 3
        check_invariants(p)

    def test_path_bisection_cut_is_optimal(self):
        """Brute force over balanced bisections: the minimum cut on a path is 1."""
        A = path_graph_matrix(12)
        dense = A.to_dense()
        best = min(cut_value(dense, np.isin(np.arange(12), combo).astype(int))
                   for combo in itertools.combinations(range(12), 6))
        p = partition_general(A, 2)
        assert best == 1
        assert cut_value(dense, p.xi) == best

    def test_single_element(self):
        A = ring_matrix(9)
        p = partition_general(A, 1)
        assert p.M == 1
        assert np.array_equal(p.neighbor_lists[0], [0])
        assert np.array_equal(p.extended[0], np.arange(9))

    def test_disconnected_components_split_with_zero_cut(self):
        blocks = sp.block_diag([ring_matrix(6).to_scipy(), ring_matrix(6).to_scipy()])
        A = SparseHermitian(blocks, symmetrize=False)
        dense = A.to_dense()
        best = min(cut_value(dense, np.isin(np.arange(12), combo).astype(int))
                   for combo in itertools.combinations(range(12), 6))
        assert best == 0
        p = partition_general(A, 2)
        assert cut_value(dense, p.xi) == 0
        check_invariants(p)

    def test_balance_within_five_percent_on_torus(self):
        A = generate_2d(ModelSpec2D(n_x=20, n_y=20, seed=3))
        for M in (4, 5, 8):
            p = partition_general(A, M)
            sizes = p.element_sizes()
            ideal = A.n / M
            assert sizes.max() <= np.ceil(ideal * 1.05)
            assert sizes.min() >= np.floor(ideal * 0.95)
            check_invariants(p)

    def test_m_larger_than_n_rejected(self):
        with pytest.raises(ValueError):
            partition_general(path_graph_matrix(4), 5)

    def test_one_hop_extended_matches_neighbor_union(self):
        A = generate_2d(ModelSpec2D(n_x=12, n_y=12, seed=1))
        p = partition_general(A, 6)
        for k in range(p.M):
            union = np.unique(np.concatenate([p.elements[j] for j in p.neighbor_lists[k]]))
            assert np.array_equal(p.extended[k], union)


class TestMhopExtension:
    def test_ball_on_path(self):
        A = path_graph_matrix(12)
        (q,) = extended_elements_mhop(A, [np.array([5])], 2)
        assert np.array_equal(q, [3, 4, 5, 6, 7])

    def test_zero_hops_returns_elements(self):
        A = path_graph_matrix(6)
        (q,) = extended_elements_mhop(A, [np.array([2, 3])], 0)
        assert np.array_equal(q, [2, 3])

    def test_block_width_hops_match_structured_union(self):
        """On a ring of contiguous width-w blocks, the w-hop ball equals the
        three-block union used by the structured constructor."""
        n, M = 40, 4
        A = ring_matrix(n)
        structured = partition_structured_1d(n, M)
        balls = extended_elements_mhop(A, structured.elements, n // M)
        for q_ball, q_struct in zip(balls, structured.extended):
            assert np.array_equal(q_ball, q_struct)

    def test_monotone_in_m(self):
        A = SparseHermitian(random_sparse_symmetric(30, 0.1, seed=2), symmetrize=False)
        elements = [np.arange(0, 10), np.arange(10, 30)]
        prev = None
        for m in (0, 1, 2, 4):
            qs = extended_elements_mhop(A, elements, m)
            if prev is not None:
                for small, big in zip(prev, qs):
                    assert np.all(np.isin(small, big))
            prev = qs

    def test_infinite_hops_reach_component(self):
        A = path_graph_matrix(7)
        (q,) = extended_elements_mhop(A, [np.array([0])], None)
        assert np.array_equal(q, np.arange(7))

    def test_partition_mhop_neighbor_lists(self):
        A = ring_matrix(12)
        structured = partition_structured_1d(12, 4)
        p = partition_mhop(A, structured.elements, 3)
        check_invariants(p)
        assert p.hops == 3


class TestAgreementDistance:
    def test_structured_1d_equals_block_width(self):
        A = ring_matrix(400)
        p = partition_structured_1d(400, 4)
        assert effective_agreement_distance(A, p) == 100

    def test_odd_width_floors_to_even(self):
        A = ring_matrix(50)
        p = partition_structured_1d(50, 5)  # width 10 -> m = 10
        assert effective_agreement_distance(A, p) == 10

    def test_full_coverage_returns_none(self):
        A = ring_matrix(8)
        p = partition_structured_1d(8, 1)
        assert effective_agreement_distance(A, p) is None


class TestMapImportExport:
    def test_round_trip(self, tmp_path):
        A = ring_matrix(10)
        p = partition_structured_1d(10, 2)
        path = tmp_path / "map.txt"
        save_partition_map(path, p.xi)
        xi = load_partition_map(path)
        assert np.array_equal(xi, p.xi)
        q = partition_from_map(A, xi)
        for a, b in zip(q.elements, p.elements):
            assert np.array_equal(a, b)

    def test_permutation_equivariance(self):
        """Partitioning the permuted matrix with the permuted map permutes
        elements and extended elements."""
        A = generate_2d(ModelSpec2D(n_x=10, n_y=10, seed=4))
        p = partition_general(A, 4)
        rng = np.random.default_rng(0)
        perm = rng.permutation(A.n)
        A2 = SparseHermitian(A.to_scipy()[perm][:, perm], symmetrize=False)
        inv = np.argsort(perm)
        p2 = partition_from_map(A2, p.xi[perm])
        for k in range(p.M):
            assert np.array_equal(p2.elements[k], np.sort(inv[p.elements[k]]))
            assert np.array_equal(p2.extended[k], np.sort(inv[p.extended[k]]))

    def test_empty_element_rejected(self):
        A = ring_matrix(6)
        with pytest.raises(ValueError, match="empty"):
            partition_from_map(A, np.array([0, 0, 0, 2, 2, 2]))

    def test_wrong_length_rejected(self):
        A = ring_matrix(6)
        with pytest.raises(ValueError):
            partition_from_map(A, np.zeros(5, dtype=int))

    def test_summary_fields(self):
        p = partition_structured_1d(12, 3)
        s = partition_summary(p)
        assert s["M"] == 3
        assert s["c_q"]["max"] == 3.0
        assert s["element_sizes"] == [4, 4, 4]
