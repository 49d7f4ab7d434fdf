"""Matrix Market ingestion: expansion, validation, errors, round trips."""

import numpy as np
import pytest

from specslice import (MatrixMarketError, ModelSpec1D, generate_1d,
                       read_matrix_market, write_matrix_market)
from specslice.core import HermitianError


def write_lines(tmp_path, lines, name="m.mtx"):
    path = tmp_path / name
    path.write_text("\n".join(lines) + "\n")
    return path


class TestRead:
    def test_symmetric_expansion(self, tmp_path):
        path = write_lines(tmp_path, [
            "%%MatrixMarket matrix coordinate real symmetric",
            "% a comment",
            "3 3 4",
            "1 1 2.0",
            "2 1 -1.0",
            "3 2 -1.0",
            "3 3 2.0",
        ])
        A = read_matrix_market(path)
        assert A.n == 3
        assert A.nnz == 6
        expected = np.array([[2.0, -1.0, 0.0], [-1.0, 0.0, -1.0], [0.0, -1.0, 2.0]])
        assert np.array_equal(A.to_dense(), expected)

    def test_hermitian_conjugate_expansion(self, tmp_path):
        path = write_lines(tmp_path, [
            "%%MatrixMarket matrix coordinate complex hermitian",
            "2 2 2",
            "1 1 1.0 0.0",
            "2 1 0.5 0.25",
        ])
        A = read_matrix_market(path)
        dense = A.to_dense()
        assert dense[0, 1] == np.conj(dense[1, 0]) == 0.5 - 0.25j

    def test_general_symmetric_content_accepted(self, tmp_path):
        path = write_lines(tmp_path, [
            "%%MatrixMarket matrix coordinate real general",
            "2 2 4",
            "1 1 1.0",
            "1 2 3.0",
            "2 1 3.0",
            "2 2 1.0",
        ])
        A = read_matrix_market(path)
        assert A.to_dense()[0, 1] == 3.0

    def test_large_header_dimension(self, tmp_path):
        # header of the largest matrix exercised by the source experiments
        path = write_lines(tmp_path, [
            "%%MatrixMarket matrix coordinate real symmetric",
            "189924 189924 2",
            "1 1 4.0",
            "189924 189924 4.0",
        ])
        A = read_matrix_market(path)
        assert A.n == 189924
        assert A.nnz == 2

    def test_pattern_rejected(self, tmp_path):
        path = write_lines(tmp_path, [
            "%%MatrixMarket matrix coordinate pattern symmetric",
            "2 2 1",
            "1 1",
        ])
        with pytest.raises(MatrixMarketError, match="values are required"):
            read_matrix_market(path)

    def test_array_format_rejected(self, tmp_path):
        path = write_lines(tmp_path, [
            "%%MatrixMarket matrix array real general",
            "2 2",
            "1.0", "0.0", "0.0", "1.0",
        ])
        with pytest.raises(MatrixMarketError, match="coordinate required"):
            read_matrix_market(path)

    def test_non_hermitian_rejected_with_offender(self, tmp_path):
        path = write_lines(tmp_path, [
            "%%MatrixMarket matrix coordinate real general",
            "2 2 4",
            "1 1 1.0",
            "1 2 3.0",
            "2 1 -3.0",
            "2 2 1.0",
        ])
        with pytest.raises(HermitianError, match="not Hermitian"):
            read_matrix_market(path)

    def test_parse_error_carries_line_number(self, tmp_path):
        path = write_lines(tmp_path, [
            "%%MatrixMarket matrix coordinate real symmetric",
            "2 2 2",
            "1 1 1.0",
            "2 jam 1.0",
        ])
        with pytest.raises(MatrixMarketError, match="line 4"):
            read_matrix_market(path)

    def test_index_out_of_range(self, tmp_path):
        path = write_lines(tmp_path, [
            "%%MatrixMarket matrix coordinate real symmetric",
            "2 2 1",
            "3 1 1.0",
        ])
        with pytest.raises(MatrixMarketError, match="line 3"):
            read_matrix_market(path)

    def test_entry_count_mismatch(self, tmp_path):
        path = write_lines(tmp_path, [
            "%%MatrixMarket matrix coordinate real symmetric",
            "2 2 3",
            "1 1 1.0",
        ])
        with pytest.raises(MatrixMarketError, match="declared 3"):
            read_matrix_market(path)

    def test_skew_symmetric_rejected(self, tmp_path):
        path = write_lines(tmp_path, [
            "%%MatrixMarket matrix coordinate real skew-symmetric",
            "2 2 1",
            "2 1 1.0",
        ])
        with pytest.raises(MatrixMarketError, match="skew"):
            read_matrix_market(path)


class TestRoundTrip:
    def test_model_matrix_survives_exactly(self, tmp_path):
        A = generate_1d(ModelSpec1D(n_w=1, h=0.5, seed=11))
        path = tmp_path / "model.mtx"
        write_matrix_market(path, A, comment="round trip")
        B = read_matrix_market(path)
        assert B.n == A.n
        assert np.array_equal(A.to_dense(), B.to_dense())

    def test_complex_round_trip(self, tmp_path):
        rng = np.random.default_rng(1)
        raw = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
        from specslice import SparseHermitian
        A = SparseHermitian((raw + raw.conj().T) / 2)
        path = tmp_path / "c.mtx"
        write_matrix_market(path, A)
        B = read_matrix_market(path)
        assert np.array_equal(A.to_dense(), B.to_dense())

    def test_deterministic_bytes(self, tmp_path):
        A = generate_1d(ModelSpec1D(n_w=1, h=0.5, seed=11))
        p1, p2 = tmp_path / "a.mtx", tmp_path / "b.mtx"
        write_matrix_market(p1, A)
        write_matrix_market(p2, A)
        assert p1.read_bytes() == p2.read_bytes()
