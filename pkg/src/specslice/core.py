"""Sparse Hermitian matrices in CSR form plus the graph utilities built on them.

The matrix type validates (and if necessary repairs) Hermitian symmetry on
ingestion, exposes raw CSR arrays, and backs the submatrix extraction,
sparse-times-dense products and breadth-first geodesic distances that the
slicing pipeline is built from.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

__all__ = [
    "UNREACHABLE",
    "SparseHermitian",
    "DistanceMap",
    "index_set",
    "geodesic_distances",
    "extract_submatrix",
    "spmm",
    "spectral_interval",
]

# Sentinel distance for vertices not reached within the BFS cutoff.
UNREACHABLE = np.uint32(np.iinfo(np.uint32).max)

HERMITIAN_RTOL = 1e-12


class HermitianError(ValueError):
    """Raised when a matrix is not Hermitian within the ingestion tolerance."""


def index_set(indices, n: int) -> np.ndarray:
    """Validate and canonicalize a vertex index set.

    Returns a sorted array of unique int64 indices, all within [0, n).
    """
    idx = np.unique(np.asarray(indices, dtype=np.int64))
    if idx.size and (idx[0] < 0 or idx[-1] >= n):
        bad = idx[0] if idx[0] < 0 else idx[-1]
        raise IndexError(f"index {bad} out of range for n={n}")
    return idx


class SparseHermitian:
    """An n-by-n Hermitian matrix stored in CSR form with sorted indices.

    Construction symmetrizes the input as (A + A*)/2 and records the largest
    asymmetry found; input whose asymmetry exceeds ``tol`` (relative to the
    largest magnitude entry) is rejected with the worst offending entry in
    the message.  After construction values satisfy A[i,j] == conj(A[j,i])
    exactly and the instance is immutable.
    """

    def __init__(self, matrix, symmetrize: bool = True, tol: float = HERMITIAN_RTOL,
                 symmetric_storage: bool = False):
        csr = sp.csr_matrix(matrix)
        if csr.shape[0] != csr.shape[1]:
            raise ValueError(f"matrix must be square, got {csr.shape}")
        csr.sum_duplicates()
        csr.sort_indices()
        if np.iscomplexobj(csr.data):
            csr = csr.astype(np.complex128)
        else:
            csr = csr.astype(np.float64)

        self.max_asymmetry = 0.0
        if symmetrize:
            adjoint = csr.conj().T.tocsr()
            diff = csr - adjoint
            if diff.nnz:
                k = int(np.argmax(np.abs(diff.data)))
                worst = float(np.abs(diff.data[k]))
                scale = float(np.max(np.abs(csr.data))) if csr.nnz else 1.0
                self.max_asymmetry = worst / scale if scale > 0 else worst
                if self.max_asymmetry > tol:
                    i, j = _coo_position(diff, k)
                    raise HermitianError(
                        f"matrix is not Hermitian: |A[{i},{j}] - conj(A[{j},{i}])| "
                        f"= {worst:.3e} (relative {self.max_asymmetry:.3e} > {tol:.1e})"
                    )
            csr = ((csr + adjoint) * 0.5).tocsr()
            csr.sum_duplicates()
            csr.sort_indices()

        csr.eliminate_zeros()
        self._csr = csr
        self.n = csr.shape[0]
        self.symmetric_storage = symmetric_storage
        for arr in (csr.indptr, csr.indices, csr.data):
            arr.setflags(write=False)

    # -- raw CSR views -----------------------------------------------------

    @property
    def indptr(self) -> np.ndarray:
        return self._csr.indptr

    @property
    def indices(self) -> np.ndarray:
        return self._csr.indices

    @property
    def data(self) -> np.ndarray:
        return self._csr.data

    @property
    def nnz(self) -> int:
        return self._csr.nnz

    @property
    def dtype(self):
        return self._csr.dtype

    @property
    def shape(self):
        return self._csr.shape

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self._csr.data)

    def to_scipy(self) -> sp.csr_matrix:
        return self._csr

    def to_dense(self) -> np.ndarray:
        return self._csr.toarray()

    def diagonal(self) -> np.ndarray:
        return self._csr.diagonal()

    def __matmul__(self, other):
        return self._csr @ other

    def __repr__(self):
        kind = "complex Hermitian" if self.is_complex else "real symmetric"
        return f"SparseHermitian(n={self.n}, nnz={self.nnz}, {kind})"


def _coo_position(mat, data_index: int) -> tuple[int, int]:
    coo = mat.tocoo()
    return int(coo.row[data_index]), int(coo.col[data_index])


@dataclass(frozen=True)
class DistanceMap:
    """Per-vertex geodesic distances from a source set.

    ``distances[v]`` is the BFS distance from the nearest source, or
    ``UNREACHABLE`` when no path of length <= cutoff exists.
    """

    sources: np.ndarray
    distances: np.ndarray
    cutoff: int

    @property
    def reachable(self) -> np.ndarray:
        return self.distances != UNREACHABLE

    def within(self, radius: int) -> np.ndarray:
        """Vertices at distance <= radius, sorted ascending."""
        mask = (self.distances != UNREACHABLE) & (self.distances <= radius)
        return np.flatnonzero(mask).astype(np.int64)


def geodesic_distances(A: SparseHermitian, sources, cutoff: int | None = None) -> DistanceMap:
    """Multi-source BFS distances on the graph induced by the sparsity of A.

    Distance is the minimum over the source set; vertices farther than
    ``cutoff`` edges (or disconnected) are marked UNREACHABLE.  Self
    distance is 0 on the source set.
    """
    src = index_set(sources, A.n)
    if src.size == 0:
        raise ValueError("source set must be non-empty")
    if cutoff is None:
        cutoff = A.n
    if cutoff < 0:
        raise ValueError("cutoff must be >= 0")

    dist = np.full(A.n, UNREACHABLE, dtype=np.uint32)
    dist[src] = 0
    frontier = src
    indptr, indices = A.indptr, A.indices
    level = 0
    while frontier.size and level < cutoff:
        level += 1
        neigh = np.concatenate([indices[indptr[v]:indptr[v + 1]] for v in frontier]) \
            if frontier.size else np.empty(0, dtype=indices.dtype)
        neigh = np.unique(neigh)
        new = neigh[dist[neigh] == UNREACHABLE]
        dist[new] = level
        frontier = new
    return DistanceMap(sources=src, distances=dist, cutoff=int(cutoff))


def extract_submatrix(A: SparseHermitian, Q) -> SparseHermitian:
    """Principal submatrix A[Q, Q] for a sorted vertex set Q.

    Entries of A outside Q are dropped, never stored as explicit zeros.  The
    result is Hermitian exactly (no re-symmetrization is applied).
    """
    q = index_set(Q, A.n)
    sub = A.to_scipy()[q][:, q].tocsr()
    return SparseHermitian(sub, symmetrize=False)


def spmm(A: SparseHermitian, B: np.ndarray) -> np.ndarray:
    """Sparse-matrix times dense-block product A @ B."""
    B = np.asarray(B)
    if B.shape[0] != A.n:
        raise ValueError(f"dimension mismatch: A is {A.n}x{A.n}, B has {B.shape[0]} rows")
    return A.to_scipy() @ B


def _lanczos_extremes(A: SparseHermitian, iters: int) -> tuple[float, float]:
    """Extremal Ritz values from a plain Lanczos run with a fixed start vector."""
    n = A.n
    v = np.ones(n) / np.sqrt(n)
    if A.is_complex:
        v = v.astype(np.complex128)
    alphas, betas = [], []
    v_prev = np.zeros_like(v)
    beta = 0.0
    csr = A.to_scipy()
    for _ in range(min(iters, n)):
        w = csr @ v
        alpha = float(np.real(np.vdot(v, w)))
        w = w - alpha * v - beta * v_prev
        alphas.append(alpha)
        beta = float(np.linalg.norm(w))
        if beta < 1e-14:
            break
        betas.append(beta)
        v_prev, v = v, w / beta
    T = np.diag(alphas)
    if betas:
        off = np.array(betas[: len(alphas) - 1])
        T += np.diag(off, 1) + np.diag(off, -1)
    ritz = np.linalg.eigvalsh(T)
    return float(ritz[0]), float(ritz[-1])


def spectral_interval(A: SparseHermitian, lanczos_iters: int = 0) -> tuple[float, float]:
    """An interval guaranteed to contain the spectrum of A.

    The default is the Gershgorin enclosure, which is deterministic and
    always valid.  With ``lanczos_iters`` >= 1 the enclosure is tightened by
    extremal Lanczos estimates, re-inflated by 1% of their spread, and
    clipped to the Gershgorin bounds.
    """
    diag = np.real(A.diagonal())
    radii = np.zeros(A.n)
    csr = A.to_scipy()
    absdata = np.abs(csr.data)
    row = np.repeat(np.arange(A.n), np.diff(csr.indptr))
    offdiag = csr.indices != row
    np.add.at(radii, row[offdiag], absdata[offdiag])
    lo = float(np.min(diag - radii))
    hi = float(np.max(diag + radii))
    if lanczos_iters >= 1:
        l_lo, l_hi = _lanczos_extremes(A, lanczos_iters)
        width = max(l_hi - l_lo, 0.0)
        lo = max(lo, l_lo - 0.01 * width)
        hi = min(hi, l_hi + 0.01 * width)
    return lo, hi
