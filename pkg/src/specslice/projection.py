"""Projected pencil assembly and the reduced interior eigenproblem.

The basis blocks are contracted against the element submatrices to give the
block-sparse pencil (A_U, B_U); the generalized problem is solved through a
whitened standard problem with small B-modes dropped; Ritz pairs in the
reporting window are kept, residuals computed (locally from the retained
Z_k blocks and globally from the full matrix), and Ritz values whose
residual stands out are flagged as spurious.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .core import SparseHermitian, geodesic_distances
from .basis import LssBasis
from .partition import Partition

__all__ = [
    "ProjectedPencil",
    "PencilError",
    "SliceResult",
    "assemble_pencil",
    "solve_pencil",
    "select_window",
    "residual_norms_local",
    "residual_norms_global",
    "filter_spurious",
    "reconstruct_eigenvectors",
]


class PencilError(RuntimeError):
    """The projected pencil is numerically unusable (indefinite B)."""


@dataclass
class ProjectedPencil:
    """Hermitian block-sparse pencil with block (k', k) present iff the
    extended elements overlap; Z_k = A_k U_k blocks are retained for local
    residual evaluation."""

    offsets: np.ndarray
    a_blocks: dict
    b_blocks: dict
    z_blocks: list
    dtype: np.dtype

    @property
    def n_b(self) -> int:
        return int(self.offsets[-1])

    @property
    def M(self) -> int:
        return len(self.offsets) - 1

    def block_index(self) -> list:
        return sorted(self.a_blocks.keys())

    def to_dense(self) -> tuple[np.ndarray, np.ndarray]:
        nb = self.n_b
        A_U = np.zeros((nb, nb), dtype=self.dtype)
        B_U = np.zeros((nb, nb), dtype=self.dtype)
        for (kp, k), blk in self.a_blocks.items():
            rows = slice(self.offsets[kp], self.offsets[kp + 1])
            cols = slice(self.offsets[k], self.offsets[k + 1])
            A_U[rows, cols] = blk
            B_U[rows, cols] = self.b_blocks[kp, k]
        return A_U, B_U

    def nnz_fraction(self) -> float:
        """Fraction of pencil entries covered by stored blocks."""
        nb = self.n_b
        if nb == 0:
            return 0.0
        covered = sum(
            (self.offsets[kp + 1] - self.offsets[kp]) * (self.offsets[k + 1] - self.offsets[k])
            for kp, k in self.a_blocks)
        return covered / (nb * nb)


def _overlap_pairs(partition: Partition) -> list:
    """All ordered element pairs whose extended elements intersect."""
    owners = [[] for _ in range(partition.n)]
    for k, q in enumerate(partition.extended):
        for v in q:
            owners[v].append(k)
    pairs = set()
    for lst in owners:
        for a in lst:
            for b in lst:
                pairs.add((a, b))
    return sorted(pairs)


def assemble_pencil(A: SparseHermitian, partition: Partition, basis: LssBasis) -> ProjectedPencil:
    """Contract the basis into the block-sparse pencil (A_U, B_U).

    The product A U_k is computed exactly but locally: its nonzero rows live
    on the extended element plus a one-hop fringe, so only those rows of A
    are touched.  Stored blocks keep the extended-element overlap pattern;
    the final blockwise symmetrization makes both matrices exactly
    Hermitian.  The retained z_blocks are the Dirichlet products A_k U_k
    (rows restricted to Q_k) used by the local residual estimate.
    """
    if basis.M != partition.M:
        raise ValueError("basis and partition disagree on the element count")
    any_complex = any(np.iscomplexobj(eb.basis) for eb in basis.element_bases)
    dtype = np.dtype(np.complex128 if any_complex else np.float64)
    csr = A.to_scipy()

    z_blocks, z_fringe, fringe_sets = [], [], []
    for k, eb in enumerate(basis.element_bases):
        q = partition.extended[k]
        dm = geodesic_distances(A, q, cutoff=1)
        q_ext = dm.within(1)  # Q_k plus its one-hop fringe: support of A U_k
        z_ext = csr[q_ext][:, q] @ eb.basis
        pos_q = np.searchsorted(q_ext, q)
        z_blocks.append(z_ext[pos_q])
        z_fringe.append(z_ext)
        fringe_sets.append(q_ext)

    a_blocks, b_blocks = {}, {}
    for kp, k in _overlap_pairs(partition):
        q_p, q_k = partition.extended[kp], partition.extended[k]
        common, idx_p, idx_k = np.intersect1d(q_p, fringe_sets[k], assume_unique=True,
                                              return_indices=True)
        u_p = basis.element_bases[kp].basis[idx_p]
        a_blocks[kp, k] = u_p.conj().T @ z_fringe[k][idx_k]
        _, idx_p2, idx_k2 = np.intersect1d(q_p, q_k, assume_unique=True,
                                           return_indices=True)
        b_blocks[kp, k] = basis.element_bases[kp].basis[idx_p2].conj().T \
            @ basis.element_bases[k].basis[idx_k2]

    for key in list(a_blocks):
        kp, k = key
        if kp > k:
            continue
        sym_a = (a_blocks[kp, k] + a_blocks[k, kp].conj().T) * 0.5
        sym_b = (b_blocks[kp, k] + b_blocks[k, kp].conj().T) * 0.5
        a_blocks[kp, k] = sym_a
        a_blocks[k, kp] = sym_a.conj().T
        b_blocks[kp, k] = sym_b
        b_blocks[k, kp] = sym_b.conj().T

    return ProjectedPencil(offsets=basis.offsets.copy(), a_blocks=a_blocks,
                           b_blocks=b_blocks, z_blocks=z_blocks, dtype=dtype)


def solve_pencil(pencil: ProjectedPencil, eps_b: float = 1e-10):
    """Solve A_U C = B_U C Theta through the whitened retained subspace of B_U.

    Modes of B_U below eps_b times its largest eigenvalue are dropped; a
    B_U eigenvalue below -1e-10 relative is an error.  Returns
    (theta, C, diagnostics) with C B_U-orthonormal on the retained space.
    """
    A_U, B_U = pencil.to_dense()
    if A_U.shape[0] == 0:
        return np.empty(0), np.zeros((0, 0), dtype=pencil.dtype), {
            "b_min": 0.0, "b_max": 0.0, "n_retained": 0}
    lam, Q = scipy.linalg.eigh(B_U)
    b_min, b_max = float(lam[0]), float(lam[-1])
    if b_min < -1e-10 * max(b_max, 1.0):
        raise PencilError(
            f"B_U is numerically indefinite: min eigenvalue {b_min:.3e} "
            f"(max {b_max:.3e})")
    keep = lam >= eps_b * b_max
    n_ret = int(keep.sum())
    diagnostics = {"b_min": b_min, "b_max": b_max, "n_retained": n_ret,
                   "n_dropped": int(lam.size - n_ret)}
    if n_ret == 0:
        return np.empty(0), np.zeros((A_U.shape[0], 0), dtype=pencil.dtype), diagnostics
    S = Q[:, keep] / np.sqrt(lam[keep])[None, :]
    T = S.conj().T @ A_U @ S
    T = (T + T.conj().T) * 0.5
    theta, Y = scipy.linalg.eigh(T)
    return theta, S @ Y, diagnostics


def select_window(theta: np.ndarray, C: np.ndarray, window: tuple[float, float]):
    """Keep Ritz pairs with value in the open interval, preserving order."""
    lo, hi = window
    if hi <= lo:
        raise ValueError(f"empty reporting window ({lo}, {hi})")
    mask = (theta > lo) & (theta < hi)
    return theta[mask], C[:, mask]


def _c_rows(basis: LssBasis, C: np.ndarray, kappa: int) -> np.ndarray:
    return C[basis.columns_of(kappa)]


def residual_norms_local(basis: LssBasis, partition: Partition, z_blocks: list,
                         C: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Residual 2-norms accumulated from the retained Z_k = A_k U_k blocks."""
    n = partition.n
    dtype = np.complex128 if any(np.iscomplexobj(z) for z in z_blocks) or \
        np.iscomplexobj(C) else np.float64
    R = np.zeros((n, theta.shape[0]), dtype=dtype)
    for k, eb in enumerate(basis.element_bases):
        if eb.t_count == 0:
            continue
        c_k = _c_rows(basis, C, k)
        q = partition.extended[k]
        R[q] += z_blocks[k] @ c_k - (eb.basis @ c_k) * theta[None, :]
    return np.linalg.norm(R, axis=0)


def _reconstruct_raw(basis: LssBasis, partition: Partition, C: np.ndarray) -> np.ndarray:
    n = partition.n
    dtype = np.complex128 if any(np.iscomplexobj(eb.basis) for eb in basis.element_bases) \
        or np.iscomplexobj(C) else np.float64
    X = np.zeros((n, C.shape[1]), dtype=dtype)
    for k, eb in enumerate(basis.element_bases):
        if eb.t_count == 0:
            continue
        X[partition.extended[k]] += eb.basis @ _c_rows(basis, C, k)
    return X


def residual_norms_global(A: SparseHermitian, basis: LssBasis, partition: Partition,
                          C: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Exact residual 2-norms ||A x - theta x|| of the reconstructed vectors."""
    X = _reconstruct_raw(basis, partition, C)
    R = A.to_scipy() @ X - X * theta[None, :]
    return np.linalg.norm(R, axis=0)


def filter_spurious(theta: np.ndarray, residuals: np.ndarray, eta_abs: float,
                    eta_rel: float = 20.0) -> np.ndarray:
    """Flag Ritz values whose residual stands out.

    A value is spurious when its residual exceeds
    max(eta_abs, eta_rel * median(residuals)).  The full residual list stays
    available to callers for re-filtering with different thresholds.
    """
    residuals = np.asarray(residuals, dtype=float)
    if residuals.shape != np.shape(theta):
        raise ValueError("residual array must align with the Ritz values")
    if residuals.size == 0:
        return np.zeros(0, dtype=bool)
    threshold = max(eta_abs, eta_rel * float(np.median(residuals)))
    return residuals > threshold


def reconstruct_eigenvectors(basis: LssBasis, partition: Partition,
                             C: np.ndarray) -> np.ndarray:
    """Assemble global eigenvector approximations, unit-normalized with the
    first significant entry made real and positive."""
    X = _reconstruct_raw(basis, partition, C)
    for j in range(X.shape[1]):
        norm = np.linalg.norm(X[:, j])
        if norm == 0:
            continue
        X[:, j] /= norm
        col = X[:, j]
        peak = np.abs(col).max()
        nz = np.flatnonzero(np.abs(col) > 1e-6 * peak)
        pivot = col[nz[0]]
        X[:, j] = col * (abs(pivot) / pivot)
    return X


@dataclass
class SliceResult:
    """Ritz data for one slicing run.

    ``theta`` holds every Ritz value found in the reporting window, sorted
    ascending, with aligned coefficient columns, residual norms (local and
    global) and spurious flags; accepted values are ``theta[~spurious]``.
    """

    theta: np.ndarray
    coefficients: np.ndarray
    residuals_local: np.ndarray
    residuals_global: np.ndarray
    spurious: np.ndarray
    window: tuple
    n_b: int
    pencil_diagnostics: dict
    timings: dict = field(default_factory=dict)
    eigenvectors: np.ndarray | None = None
    metadata: dict = field(default_factory=dict)

    @property
    def accepted(self) -> np.ndarray:
        return self.theta[~self.spurious]

    def to_dict(self) -> dict:
        return {
            "window": list(self.window),
            "n_b": int(self.n_b),
            "theta": self.theta.tolist(),
            "residuals_local": self.residuals_local.tolist(),
            "residuals_global": self.residuals_global.tolist(),
            "spurious": self.spurious.tolist(),
            "accepted": self.accepted.tolist(),
            "pencil_diagnostics": self.pencil_diagnostics,
            "timings": self.timings,
            "metadata": self.metadata,
        }

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), indent=2)
        if path is not None:
            with open(path, "w", encoding="ascii") as fh:
                fh.write(text)
        return text

    def to_csv(self, path=None) -> str:
        lines = ["index,theta,residual_local,residual_global,spurious"]
        for j, th in enumerate(self.theta):
            lines.append(f"{j},{th:.17g},{self.residuals_local[j]:.17g},"
                         f"{self.residuals_global[j]:.17g},{int(self.spurious[j])}")
        text = "\n".join(lines) + "\n"
        if path is not None:
            with open(path, "w", encoding="ascii") as fh:
                fh.write(text)
        return text
