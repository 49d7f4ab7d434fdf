"""Divide-and-conquer construction of the localized slicing basis.

Per element: a partial eigendecomposition of the Dirichlet submatrix on the
extended element, Gaussian weighting of the local eigenvalues, an SVD of the
weighted spectral factor with relative truncation, and the assembly
U_k = X_k Utilde_k (orthonormal columns supported on Q_k) together with
V_k = Stilde_k Vtilde_k* restricted to the element columns.  Concatenating
the U_k blocks gives the global basis; U_k V_k scattered over (Q_k, E_k)
gives the sparse approximation to the slicing operator, kept for
diagnostics.
"""

from __future__ import annotations

import json
import struct
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.linalg import ArpackNoConvergence, eigsh

from .core import SparseHermitian, extract_submatrix, spectral_interval
from .partition import Partition

__all__ = [
    "SliceParams",
    "ElementBasis",
    "LssBasis",
    "BasisBuildError",
    "LocalSolverError",
    "local_partial_eig",
    "gaussian_filter",
    "local_svd_truncate",
    "build_element_basis",
    "build_lss_basis",
    "assemble_approx_operator",
    "save_lss_basis",
    "load_lss_basis",
]


@dataclass(frozen=True)
class SliceParams:
    """Filter and truncation parameters for one slicing run.

    The local eigenwindow is (mu - c_window*sigma, mu + c_window*sigma);
    tau is the relative singular-value cutoff.  ``local_solver`` picks the
    per-element eigensolver: "dense", "iterative", or "auto" (dense up to
    ``dense_limit`` vertices).
    """

    mu: float
    sigma: float
    tau: float = 0.1
    c_window: float = 3.0
    local_solver: str = "auto"
    dense_limit: int = 2000
    eig_block: int = 50
    iter_tol: float = 1e-10

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if not 0.0 <= self.tau < 1.0:
            raise ValueError("tau must lie in [0, 1)")
        if self.c_window < 1.0:
            raise ValueError("c_window must be >= 1")
        if self.local_solver not in ("auto", "dense", "iterative"):
            raise ValueError(f"unknown local solver {self.local_solver!r}")

    @property
    def window(self) -> tuple[float, float]:
        half = self.c_window * self.sigma
        return self.mu - half, self.mu + half


class LocalSolverError(RuntimeError):
    """The iterative local eigensolver failed to converge or certify coverage."""


class BasisBuildError(RuntimeError):
    """One or more element builds failed; carries per-element messages."""

    def __init__(self, failures):
        self.failures = failures
        detail = "; ".join(f"element {k}: {msg}" for k, msg in failures)
        super().__init__(f"basis construction failed for {len(failures)} element(s): {detail}")


@dataclass
class ElementBasis:
    """Per-element slice of the basis.

    ``basis`` has orthonormal columns supported on the extended element (its
    rows are indexed by Q_k); ``coeffs`` carries the singular-value-weighted
    right factor restricted to the element columns; ``top_singular_value``
    is the largest singular value of the weighted spectral factor before
    truncation, the reference for the relative cutoff.
    """

    kappa: int
    eigvals: np.ndarray | None
    eigvecs: np.ndarray | None
    basis: np.ndarray
    coeffs: np.ndarray
    singular_values: np.ndarray
    top_singular_value: float

    @property
    def s_count(self) -> int:
        return 0 if self.eigvals is None else int(self.eigvals.shape[0])

    @property
    def t_count(self) -> int:
        return int(self.basis.shape[1])


@dataclass
class LssBasis:
    """Ordered per-element bases with global column offsets."""

    element_bases: list
    offsets: np.ndarray
    timings: dict = field(default_factory=dict)

    @property
    def n_b(self) -> int:
        return int(self.offsets[-1])

    @property
    def M(self) -> int:
        return len(self.element_bases)

    def columns_of(self, kappa: int) -> slice:
        return slice(int(self.offsets[kappa]), int(self.offsets[kappa + 1]))

    def empty_elements(self) -> list:
        return [eb.kappa for eb in self.element_bases if eb.t_count == 0]

    def max_tau_abs(self, tau: float) -> float:
        """Largest absolute truncation level tau * top singular value over elements."""
        tops = [eb.top_singular_value for eb in self.element_bases]
        return tau * max(tops) if tops else 0.0


def gaussian_filter(eigvals, mu: float, sigma: float) -> np.ndarray:
    """Elementwise filter weights exp(-((lambda - mu)/sigma)^2), in (0, 1]."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    lam = np.asarray(eigvals, dtype=float)
    return np.exp(-(((lam - mu) / sigma) ** 2))


def _dense_window_eig(A_kappa: SparseHermitian, window):
    values, vectors = scipy.linalg.eigh(A_kappa.to_dense())
    lo, hi = window
    mask = (values > lo) & (values < hi)
    return values[mask], vectors[:, mask]


def _iterative_window_eig(A_kappa: SparseHermitian, window, params: SliceParams):
    """Shift-invert Lanczos around mu, growing the request until the window
    boundary is certified covered.

    Certification: the returned pairs are the k nearest eigenvalues to mu, so
    any returned value outside the window proves all window eigenvalues are
    among them; a Gershgorin bound ending inside the window proves the same
    on that side.
    """
    n = A_kappa.n
    lo, hi = window
    mu = params.mu
    glo, ghi = spectral_interval(A_kappa)
    csr = A_kappa.to_scipy().tocsc()
    v0 = np.ones(n) / np.sqrt(n)
    scale = max(abs(glo), abs(ghi), 1.0)

    k = min(params.eig_block, n - 1)
    while True:
        try:
            values, vectors = eigsh(csr, k=k, sigma=mu, which="LM", v0=v0,
                                    tol=params.iter_tol)
        except ArpackNoConvergence as exc:
            achieved = np.asarray(exc.eigenvalues)
            raise LocalSolverError(
                f"shift-invert Lanczos did not converge at k={k}: "
                f"{achieved.size} of {k} pairs converged") from exc
        except RuntimeError as exc:  # singular shift: mu is an eigenvalue
            mu = mu + 1e-8 * scale
            try:
                values, vectors = eigsh(csr, k=k, sigma=mu, which="LM", v0=v0,
                                        tol=params.iter_tol)
            except Exception:
                raise LocalSolverError(f"shift-invert factorization failed: {exc}") from exc

        resid = np.linalg.norm(csr @ vectors - vectors * values, axis=0)
        worst = float(resid.max()) if resid.size else 0.0
        if worst > 1e3 * params.iter_tol * scale:
            raise LocalSolverError(
                f"iterative eigenpairs exceed residual tolerance: worst "
                f"{worst:.3e} vs {1e3 * params.iter_tol * scale:.3e}")

        covered_left = bool(np.any(values < lo)) or glo >= lo
        covered_right = bool(np.any(values > hi)) or ghi <= hi
        if covered_left and covered_right:
            order = np.argsort(values)
            values, vectors = values[order], vectors[:, order]
            mask = (values > lo) & (values < hi)
            return values[mask], vectors[:, mask]
        if k >= n - 1:
            # count stagnated at the full problem size: fall back to dense
            return _dense_window_eig(A_kappa, window)
        k = min(k + params.eig_block, n - 1)


def local_partial_eig(A_kappa: SparseHermitian, params: SliceParams):
    """All eigenpairs of the element submatrix inside the slice window.

    Returns (values, vectors) sorted ascending; both are empty when the
    window misses the Gershgorin interval of the submatrix.
    """
    lo, hi = params.window
    glo, ghi = spectral_interval(A_kappa)
    if hi <= glo or lo >= ghi:
        empty_vecs = np.zeros((A_kappa.n, 0), dtype=A_kappa.dtype)
        return np.empty(0), empty_vecs
    solver = params.local_solver
    if solver == "auto":
        solver = "dense" if A_kappa.n <= params.dense_limit else "iterative"
    if solver == "dense":
        return _dense_window_eig(A_kappa, params.window)
    return _iterative_window_eig(A_kappa, params.window, params)


def local_svd_truncate(W: np.ndarray, tau: float):
    """Thin SVD of the weighted spectral factor with relative truncation.

    Keeps singular values strictly above tau times the largest one, so the
    discarded part has 2-norm at most tau * s_max.  The first significant
    component of each kept left singular vector is made real and positive
    for deterministic output.
    """
    if not 0.0 <= tau < 1.0:
        raise ValueError("tau must lie in [0, 1)")
    if W.size == 0:
        raise ValueError("empty SVD operand")
    U, svals, Vh = scipy.linalg.svd(W, full_matrices=False)
    top = float(svals[0]) if svals.size else 0.0
    keep = svals > tau * top
    t = int(keep.sum())
    U, svals, Vh = U[:, :t].copy(), svals[:t].copy(), Vh[:t].copy()
    for j in range(t):
        col = U[:, j]
        nz = np.flatnonzero(np.abs(col) > 1e-12 * np.abs(col).max())
        pivot = col[nz[0]] if nz.size else 1.0
        phase = pivot / abs(pivot) if abs(pivot) > 0 else 1.0
        U[:, j] = col / phase
        Vh[j] = Vh[j] * phase
    return U, svals, Vh, top


def build_element_basis(A_kappa: SparseHermitian, element_positions: np.ndarray,
                        params: SliceParams, kappa: int = 0) -> ElementBasis:
    """Run the per-element chain: windowed eigenpairs, Gaussian weighting,
    truncated SVD, and the U_k / V_k assembly.

    ``element_positions`` are the positions of the element vertices within
    the extended element ordering (the columns V_k is restricted to).
    """
    values, vectors = local_partial_eig(A_kappa, params)
    n_loc = A_kappa.n
    dtype = vectors.dtype
    if values.size == 0:
        return ElementBasis(
            kappa=kappa, eigvals=values, eigvecs=vectors,
            basis=np.zeros((n_loc, 0), dtype=dtype),
            coeffs=np.zeros((0, element_positions.size), dtype=dtype),
            singular_values=np.empty(0), top_singular_value=0.0)

    weights = gaussian_filter(values, params.mu, params.sigma)
    W = weights[:, None] * vectors.conj().T
    U_t, svals, Vh, top = local_svd_truncate(W, params.tau)
    basis = vectors @ U_t
    coeffs = (svals[:, None] * Vh)[:, element_positions]
    return ElementBasis(kappa=kappa, eigvals=values, eigvecs=vectors,
                        basis=basis, coeffs=coeffs,
                        singular_values=svals, top_singular_value=top)


def _element_positions(element: np.ndarray, extended: np.ndarray) -> np.ndarray:
    pos = np.searchsorted(extended, element)
    if np.any(pos >= extended.size) or np.any(extended[np.minimum(pos, extended.size - 1)] != element):
        raise ValueError("element is not contained in its extended element")
    return pos


def build_lss_basis(A: SparseHermitian, partition: Partition, params: SliceParams,
                    threads: int | None = None) -> LssBasis:
    """Build every element basis (optionally in a thread pool) and merge them
    in element order."""
    t0 = time.perf_counter()

    def one(kappa: int) -> ElementBasis:
        q = partition.extended[kappa]
        e = partition.elements[kappa]
        A_kappa = extract_submatrix(A, q)
        return build_element_basis(A_kappa, _element_positions(e, q), params, kappa=kappa)

    results: list = [None] * partition.M
    failures = []
    if threads and threads > 1 and partition.M > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = {pool.submit(one, k): k for k in range(partition.M)}
            for fut, k in futures.items():
                try:
                    results[k] = fut.result()
                except Exception as exc:
                    failures.append((k, str(exc)))
    else:
        for k in range(partition.M):
            try:
                results[k] = one(k)
            except Exception as exc:
                failures.append((k, str(exc)))
    if failures:
        raise BasisBuildError(sorted(failures))

    offsets = np.zeros(partition.M + 1, dtype=np.int64)
    for k, eb in enumerate(results):
        offsets[k + 1] = offsets[k] + eb.t_count
    return LssBasis(element_bases=results, offsets=offsets,
                    timings={"basis_seconds": time.perf_counter() - t0})


def assemble_approx_operator(basis: LssBasis, partition: Partition) -> sp.csr_matrix:
    """Sparse n-by-n approximation to the slicing operator: U_k V_k scattered
    over rows Q_k and columns E_k.  Diagnostic use only."""
    n = partition.n
    any_complex = any(np.iscomplexobj(eb.basis) for eb in basis.element_bases)
    dtype = np.complex128 if any_complex else np.float64
    rows, cols, vals = [], [], []
    for k, eb in enumerate(basis.element_bases):
        if eb.t_count == 0:
            continue
        block = eb.basis @ eb.coeffs
        q = partition.extended[k]
        e = partition.elements[k]
        rows.append(np.repeat(q, e.size))
        cols.append(np.tile(e, q.size))
        vals.append(block.ravel().astype(dtype))
    if not rows:
        return sp.csr_matrix((n, n), dtype=dtype)
    return sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n)).tocsr()


# ---------------------------------------------------------------------------
# binary container
# ---------------------------------------------------------------------------

_MAGIC = b"SSLB"
_VERSION = 1


def save_lss_basis(path, basis: LssBasis, partition: Partition, extra_meta: dict | None = None):
    """Write the basis to a binary container plus a JSON metadata sidecar.

    Layout (little endian): magic, version u32, n u64, M u64, dtype code u8
    (0 real, 1 complex); then M+1 u64 column offsets; then per element:
    kappa u64, q_size u64, e_size u64, t u64, the Q index array (u64),
    the basis block column-major, and the coefficient block column-major.
    """
    any_complex = any(np.iscomplexobj(eb.basis) for eb in basis.element_bases)
    dtype = np.complex128 if any_complex else np.float64
    meta = {
        "n": int(partition.n),
        "M": int(partition.M),
        "n_b": basis.n_b,
        "offsets": basis.offsets.tolist(),
        "s_counts": [eb.s_count for eb in basis.element_bases],
        "t_counts": [eb.t_count for eb in basis.element_bases],
        "singular_value_extremes": [
            [float(eb.singular_values.max()), float(eb.singular_values.min())]
            if eb.singular_values.size else [0.0, 0.0]
            for eb in basis.element_bases
        ],
        "timings": basis.timings,
    }
    if extra_meta:
        meta.update(extra_meta)
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<IQQB", _VERSION, partition.n, partition.M,
                             1 if any_complex else 0))
        basis.offsets.astype("<u8").tofile(fh)
        for k, eb in enumerate(basis.element_bases):
            q = partition.extended[k]
            e = partition.elements[k]
            fh.write(struct.pack("<QQQQ", k, q.size, e.size, eb.t_count))
            q.astype("<u8").tofile(fh)
            np.asfortranarray(eb.basis.astype(dtype)).T.tofile(fh)
            np.asfortranarray(eb.coeffs.astype(dtype)).T.tofile(fh)
    with open(str(path) + ".json", "w", encoding="ascii") as fh:
        json.dump(meta, fh, indent=2)


def load_lss_basis(path):
    """Read a basis container; returns (LssBasis, extended_sets, element_sizes).

    Eigen-data is not stored in the container, so the loaded element bases
    carry only the U/V factors needed downstream.
    """
    with open(path, "rb") as fh:
        if fh.read(4) != _MAGIC:
            raise ValueError("not a basis container")
        version, n, M, is_complex = struct.unpack("<IQQB", fh.read(21))
        if version != _VERSION:
            raise ValueError(f"unsupported container version {version}")
        dtype = np.complex128 if is_complex else np.float64
        offsets = np.fromfile(fh, dtype="<u8", count=M + 1).astype(np.int64)
        element_bases, extended, elem_sizes = [], [], []
        for _ in range(M):
            kappa, q_size, e_size, t = struct.unpack("<QQQQ", fh.read(32))
            q = np.fromfile(fh, dtype="<u8", count=q_size).astype(np.int64)
            u = np.fromfile(fh, dtype=dtype, count=q_size * t).reshape(t, q_size).T.copy()
            v = np.fromfile(fh, dtype=dtype, count=t * e_size).reshape(e_size, t).T.copy()
            extended.append(q)
            elem_sizes.append(e_size)
            element_bases.append(ElementBasis(
                kappa=int(kappa), eigvals=None, eigvecs=None, basis=u, coeffs=v,
                singular_values=np.empty(0), top_singular_value=0.0))
    return LssBasis(element_bases=element_bases, offsets=offsets), extended, elem_sizes
