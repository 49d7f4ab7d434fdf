"""Finite-difference model problems on periodic 1D and 2D grids.

Both generators discretize -Laplacian + V with a randomized potential made of
exponential wells.  All randomness comes from a seeded PCG64 stream through a
Box-Muller transform so that fixtures reproduce bit-for-bit across platforms.
Draw order is fixed: well heights, then widths, then (2D only) position
offsets x, then y.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .core import SparseHermitian

__all__ = [
    "ModelSpec1D",
    "ModelSpec2D",
    "periodic_distance",
    "generate_1d",
    "generate_2d",
]

WELL_SPACING = 20.0  # domain length per well in 1D; well-lattice pitch target in 2D


def _box_muller_normals(rng: np.random.Generator, size: int, mean: float, std: float) -> np.ndarray:
    """Normal variates via Box-Muller on the uniform stream (draw count = size, rounded up to even)."""
    if size == 0:
        return np.empty(0)
    half = (size + 1) // 2
    u1 = 1.0 - rng.random(half)  # in (0, 1], keeps log() finite
    u2 = rng.random(half)
    r = np.sqrt(-2.0 * np.log(u1))
    z = np.concatenate([r * np.cos(2 * np.pi * u2), r * np.sin(2 * np.pi * u2)])[:size]
    return mean + std * z


def periodic_distance(x, x_prime, L: float):
    """Minimum distance between x and any periodic image of x_prime on [0, L).

    The result lies in [0, L/2].  Works elementwise on arrays.
    """
    if L <= 0:
        raise ValueError("period L must be positive")
    d = np.abs(np.asarray(x) - np.asarray(x_prime)) % L
    return np.minimum(d, L - d)


@dataclass(frozen=True)
class ModelSpec1D:
    """Periodic 1D -d2/dx2 + V(x) with n_w randomized exponential wells.

    The domain length is L = 20 * n_w, discretized with spacing h; well
    centers are equally spaced at (i + 1/2) * L / n_w.  Heights a_i ~
    N(height_mean, height_std), widths delta_i ~ N(width_mean, width_std),
    and V(x) = -sum_i a_i exp(-dist(x, R_i) / delta_i) with periodic dist.
    """

    n_w: int
    h: float = 0.1
    height_mean: float = 5.0
    height_std: float = 1.0
    width_mean: float = 2.0
    width_std: float = 0.2
    seed: int = 0

    @property
    def L(self) -> float:
        return WELL_SPACING * self.n_w

    @property
    def n(self) -> int:
        n = self.L / self.h
        if abs(n - round(n)) > 1e-9 * max(1.0, n):
            raise ValueError(f"L/h = {n} is not an integer grid size")
        return int(round(n))

    def validate(self):
        if self.n_w < 1:
            raise ValueError("n_w must be >= 1")
        if self.h <= 0:
            raise ValueError("grid spacing h must be positive")
        _ = self.n


@dataclass(frozen=True)
class ModelSpec2D:
    """Periodic 2D 5-point -Laplacian + V(x, y) with a perturbed well lattice.

    Wells sit on a wells_per_dim x wells_per_dim lattice (default pitch close
    to 20 length units), each perturbed in height, width and position:
    heights N(height_mean, height_std), widths N(width_mean, width_std),
    per-axis position offsets N(0, position_std).
    """

    n_x: int
    n_y: int
    h: float = 1.0
    wells_per_dim: int | None = None
    height_mean: float = 5.0
    height_std: float = 1.0
    width_mean: float = 2.0
    width_std: float = 0.2
    position_std: float = 0.5
    seed: int = 0

    @property
    def n(self) -> int:
        return self.n_x * self.n_y

    @property
    def lengths(self) -> tuple[float, float]:
        return self.n_x * self.h, self.n_y * self.h

    def well_grid(self) -> int:
        if self.wells_per_dim is not None:
            return self.wells_per_dim
        side = min(self.lengths)
        return max(1, int(round(side / WELL_SPACING)))

    def validate(self):
        if self.n_x < 3 or self.n_y < 3:
            raise ValueError("grid must be at least 3x3 for a periodic stencil")
        if self.h <= 0:
            raise ValueError("grid spacing h must be positive")
        if self.well_grid() < 1:
            raise ValueError("wells_per_dim must be >= 1")


def _potential_1d(spec: ModelSpec1D) -> np.ndarray:
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    heights = _box_muller_normals(rng, spec.n_w, spec.height_mean, spec.height_std)
    widths = _box_muller_normals(rng, spec.n_w, spec.width_mean, spec.width_std)
    centers = (np.arange(spec.n_w) + 0.5) * spec.L / spec.n_w
    x = np.arange(spec.n) * spec.h
    v = np.zeros(spec.n)
    for a, delta, r in zip(heights, widths, centers):
        v -= a * np.exp(-periodic_distance(x, r, spec.L) / delta)
    return v


def generate_1d(spec: ModelSpec1D) -> SparseHermitian:
    """Assemble the periodic 3-point stencil plus the randomized well potential."""
    spec.validate()
    n, h = spec.n, spec.h
    if n < 3:
        raise ValueError("need at least 3 grid points")
    v = _potential_1d(spec)
    inv_h2 = 1.0 / (h * h)
    idx = np.arange(n)
    rows = np.concatenate([idx, idx, idx])
    cols = np.concatenate([idx, (idx + 1) % n, (idx - 1) % n])
    vals = np.concatenate([2.0 * inv_h2 + v, np.full(n, -inv_h2), np.full(n, -inv_h2)])
    A = sp.coo_matrix((vals, (rows, cols)), shape=(n, n))
    return SparseHermitian(A, symmetrize=False)


def _potential_2d(spec: ModelSpec2D) -> np.ndarray:
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    w = spec.well_grid()
    n_wells = w * w
    heights = _box_muller_normals(rng, n_wells, spec.height_mean, spec.height_std)
    widths = _box_muller_normals(rng, n_wells, spec.width_mean, spec.width_std)
    off_x = _box_muller_normals(rng, n_wells, 0.0, spec.position_std)
    off_y = _box_muller_normals(rng, n_wells, 0.0, spec.position_std)

    L_x, L_y = spec.lengths
    gx, gy = np.meshgrid(np.arange(w), np.arange(w), indexing="ij")
    base_x = (gx.ravel() + 0.5) * L_x / w
    base_y = (gy.ravel() + 0.5) * L_y / w
    cx = (base_x + off_x) % L_x
    cy = (base_y + off_y) % L_y

    x = np.arange(spec.n_x) * spec.h
    y = np.arange(spec.n_y) * spec.h
    # vertex index = iy * n_x + ix (x fastest)
    X, Y = np.meshgrid(x, y, indexing="xy")
    v = np.zeros((spec.n_y, spec.n_x))
    for a, delta, rx, ry in zip(heights, widths, cx, cy):
        dist = np.hypot(periodic_distance(X, rx, L_x), periodic_distance(Y, ry, L_y))
        v -= a * np.exp(-dist / delta)
    return v.ravel()


def generate_2d(spec: ModelSpec2D) -> SparseHermitian:
    """Assemble the periodic 5-point stencil plus the randomized well potential.

    Vertices are numbered row-by-row: index = iy * n_x + ix.
    """
    spec.validate()
    n_x, n_y, h = spec.n_x, spec.n_y, spec.h
    n = spec.n
    v = _potential_2d(spec)
    inv_h2 = 1.0 / (h * h)

    ix = np.tile(np.arange(n_x), n_y)
    iy = np.repeat(np.arange(n_y), n_x)
    idx = np.arange(n)
    east = iy * n_x + (ix + 1) % n_x
    west = iy * n_x + (ix - 1) % n_x
    north = ((iy + 1) % n_y) * n_x + ix
    south = ((iy - 1) % n_y) * n_x + ix

    rows = np.concatenate([idx, idx, idx, idx, idx])
    cols = np.concatenate([idx, east, west, north, south])
    vals = np.concatenate([4.0 * inv_h2 + v] + [np.full(n, -inv_h2)] * 4)
    A = sp.coo_matrix((vals, (rows, cols)), shape=(n, n))
    return SparseHermitian(A, symmetrize=False)
