"""Dense reference computations used to validate the sparse pipeline.

All routines are deterministic, capped at a configurable matrix size, and
delegate the eigendecomposition itself to LAPACK's Hermitian solver behind
the documented contract.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.optimize import linear_sum_assignment

from .core import SparseHermitian

__all__ = [
    "OracleCapError",
    "DenseEig",
    "dense_eig",
    "exact_lss_operator",
    "max_norm_error",
    "eigs_in_window",
    "match_eigenvalues",
]

DEFAULT_CAP = 5000


class OracleCapError(ValueError):
    """Matrix too large for the dense oracle."""


def _as_dense(A) -> np.ndarray:
    if isinstance(A, SparseHermitian):
        return A.to_dense()
    if hasattr(A, "toarray"):
        return A.toarray()
    return np.asarray(A)


@dataclass(frozen=True)
class DenseEig:
    """Full eigendecomposition A X = X diag(values), values ascending."""

    values: np.ndarray
    vectors: np.ndarray


def dense_eig(A, cap: int = DEFAULT_CAP) -> DenseEig:
    dense = _as_dense(A)
    n = dense.shape[0]
    if dense.shape != (n, n):
        raise ValueError(f"expected a square matrix, got {dense.shape}")
    if n > cap:
        raise OracleCapError(f"n={n} exceeds the dense oracle cap {cap}")
    values, vectors = scipy.linalg.eigh(dense)
    return DenseEig(values=values, vectors=vectors)


def exact_lss_operator(A, mu: float, sigma: float, cap: int = DEFAULT_CAP,
                       eig: DenseEig | None = None) -> np.ndarray:
    """The dense spectrum-slicing operator X f(Lambda) X* with the Gaussian
    filter f(z) = exp(-((z - mu)/sigma)^2).

    A precomputed eigendecomposition can be passed to amortize sweeps over
    (mu, sigma).
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    if eig is None:
        eig = dense_eig(A, cap=cap)
    weights = np.exp(-(((eig.values - mu) / sigma) ** 2))
    return (eig.vectors * weights) @ eig.vectors.conj().T


def max_norm_error(F, G) -> float:
    """Largest absolute entrywise difference between two equal-shape matrices."""
    F = _as_dense(F)
    G = _as_dense(G)
    if F.shape != G.shape:
        raise ValueError(f"shape mismatch: {F.shape} vs {G.shape}")
    return float(np.max(np.abs(F - G))) if F.size else 0.0


def eigs_in_window(A, window: tuple[float, float], cap: int = DEFAULT_CAP,
                   eig: DenseEig | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (and eigenvectors) of A inside the open interval."""
    lo, hi = window
    if eig is None:
        eig = dense_eig(A, cap=cap)
    mask = (eig.values > lo) & (eig.values < hi)
    return eig.values[mask], eig.vectors[:, mask]


def match_eigenvalues(reference: np.ndarray, computed: np.ndarray):
    """Optimal assignment of computed values to reference values on |difference|.

    Returns (ref_idx, comp_idx, errors) for the min(len, len) matched pairs;
    clustered or degenerate eigenvalues are handled by the assignment rather
    than positional pairing.
    """
    reference = np.asarray(reference, dtype=float)
    computed = np.asarray(computed, dtype=float)
    if reference.size == 0 or computed.size == 0:
        return (np.empty(0, dtype=int), np.empty(0, dtype=int), np.empty(0))
    cost = np.abs(reference[:, None] - computed[None, :])
    ref_idx, comp_idx = linear_sum_assignment(cost)
    return ref_idx, comp_idx, cost[ref_idx, comp_idx]
