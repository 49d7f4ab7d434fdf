"""Vertex partitions into elements, neighbor lists and extended elements.

Structured constructors cover periodic 1D chains (element plus two
neighbors) and 2D tile grids (element plus eight neighbors).  General
matrices go through an in-repo multilevel partitioner: heavy-edge-matching
coarsening, deterministic region-growing bisection, greedy boundary
refinement, and recursion to M parts with size balancing within 5%.
Externally computed partition maps can be imported from plain text files.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .core import SparseHermitian, UNREACHABLE, geodesic_distances, index_set

__all__ = [
    "Partition",
    "partition_structured_1d",
    "partition_structured_2d",
    "partition_general",
    "partition_from_map",
    "extended_elements_mhop",
    "partition_mhop",
    "effective_agreement_distance",
    "save_partition_map",
    "load_partition_map",
    "partition_summary",
]


@dataclass
class Partition:
    """Disjoint elements E_k covering all vertices, with extended elements Q_k.

    ``xi`` maps each vertex to its element; ``neighbor_lists[k]`` holds the
    element indices whose union forms Q_k in the one-hop construction (it
    always contains k itself); ``hops`` records the enlargement rule used
    (element hops for structured/general, vertex hops for the m-hop builder).
    """

    M: int
    elements: list
    xi: np.ndarray
    neighbor_lists: list
    extended: list
    hops: int

    def __post_init__(self):
        n = self.xi.shape[0]
        cover = np.concatenate([np.asarray(e) for e in self.elements]) if self.M else np.empty(0)
        if not np.array_equal(np.sort(cover), np.arange(n)):
            raise ValueError("elements must disjointly cover all vertices")
        for k in range(self.M):
            if k not in self.neighbor_lists[k]:
                raise ValueError(f"neighbor list of element {k} must contain {k}")
            if np.setdiff1d(self.elements[k], self.extended[k]).size:
                raise ValueError(f"element {k} is not contained in its extended element")

    @property
    def n(self) -> int:
        return self.xi.shape[0]

    def element_sizes(self) -> np.ndarray:
        return np.array([len(e) for e in self.elements])

    def extended_sizes(self) -> np.ndarray:
        return np.array([len(q) for q in self.extended])

    def c_q(self) -> np.ndarray:
        """Per-element ratio |Q_k| / |E_k|."""
        return self.extended_sizes() / self.element_sizes()


# ---------------------------------------------------------------------------
# structured constructors
# ---------------------------------------------------------------------------


def partition_structured_1d(n: int, M: int) -> Partition:
    """Contiguous equal blocks on a periodic chain; Q_k = block plus both neighbors."""
    if M < 1:
        raise ValueError("M must be >= 1")
    if n % M:
        raise ValueError(f"M={M} does not divide n={n}")
    w = n // M
    elements = [np.arange(k * w, (k + 1) * w, dtype=np.int64) for k in range(M)]
    xi = np.repeat(np.arange(M, dtype=np.int64), w)
    neighbor_lists, extended = [], []
    for k in range(M):
        neigh = np.unique([(k - 1) % M, k, (k + 1) % M]).astype(np.int64)
        neighbor_lists.append(neigh)
        extended.append(np.unique(np.concatenate([elements[j] for j in neigh])))
    return Partition(M, elements, xi, neighbor_lists, extended, hops=1)


def partition_structured_2d(n_x: int, n_y: int, M: int) -> Partition:
    """sqrt(M) x sqrt(M) tiles on a periodic grid; Q_k = tile plus its 8 neighbors.

    Vertex numbering matches the 2D generator: index = iy * n_x + ix.
    """
    s = int(round(np.sqrt(M)))
    if s * s != M:
        raise ValueError(f"M={M} must be a square number")
    if n_x % s or n_y % s:
        raise ValueError(f"sqrt(M)={s} must divide both n_x={n_x} and n_y={n_y}")
    w_x, w_y = n_x // s, n_y // s
    n = n_x * n_y

    ix = np.tile(np.arange(n_x), n_y)
    iy = np.repeat(np.arange(n_y), n_x)
    xi = (iy // w_y) * s + (ix // w_x)
    elements = [np.flatnonzero(xi == k).astype(np.int64) for k in range(s * s)]

    neighbor_lists, extended = [], []
    for ty in range(s):
        for tx in range(s):
            neigh = {((ty + dy) % s) * s + ((tx + dx) % s)
                     for dy in (-1, 0, 1) for dx in (-1, 0, 1)}
            neigh = np.array(sorted(neigh), dtype=np.int64)
            neighbor_lists.append(neigh)
            extended.append(np.unique(np.concatenate([elements[j] for j in neigh])))
    return Partition(s * s, elements, xi, neighbor_lists, extended, hops=1)


# ---------------------------------------------------------------------------
# partition map plumbing
# ---------------------------------------------------------------------------


def _structural_adjacency(A: SparseHermitian):
    """CSR adjacency of the off-diagonal sparsity pattern with unit edge weights."""
    csr = A.to_scipy().copy()
    csr.setdiag(0)
    csr.eliminate_zeros()
    pattern = csr.tocsr()
    return pattern.indptr.astype(np.int64), pattern.indices.astype(np.int64), \
        np.ones(pattern.nnz)


def partition_from_map(A: SparseHermitian, xi, hops: int = 1) -> Partition:
    """Build elements, neighbor lists and extended elements from a vertex map.

    Neighbor lists follow the one-hop rule: k' is a neighbor of k when some
    nonzero of A couples E_k' to E_k; Q_k is the union of E_k' over the
    neighbor list.  This is also the import path for externally computed
    partition maps.
    """
    xi = np.asarray(xi, dtype=np.int64)
    if xi.shape != (A.n,):
        raise ValueError(f"partition map must have length n={A.n}, got {xi.shape}")
    M = int(xi.max()) + 1 if xi.size else 0
    if xi.min() < 0:
        raise ValueError("partition map labels must be >= 0")
    elements = [np.flatnonzero(xi == k).astype(np.int64) for k in range(M)]
    for k, e in enumerate(elements):
        if not e.size:
            raise ValueError(f"element {k} is empty")

    indptr, indices, _ = _structural_adjacency(A)
    row = np.repeat(np.arange(A.n), np.diff(indptr))
    li, lj = xi[row], xi[indices]
    cross = li != lj
    pairs = np.unique(np.stack([li[cross], lj[cross]], axis=1), axis=0) if cross.any() \
        else np.empty((0, 2), dtype=np.int64)

    neighbor_lists = [{k} for k in range(M)]
    for a, b in pairs:
        neighbor_lists[int(b)].add(int(a))
    neighbor_lists = [np.array(sorted(nl), dtype=np.int64) for nl in neighbor_lists]
    extended = [np.unique(np.concatenate([elements[j] for j in nl]))
                for nl in neighbor_lists]
    return Partition(M, elements, xi, neighbor_lists, extended, hops=hops)


def save_partition_map(path, xi):
    with open(path, "w", encoding="ascii") as fh:
        for label in np.asarray(xi, dtype=np.int64):
            fh.write(f"{label}\n")


def load_partition_map(path) -> np.ndarray:
    with open(path, "r", encoding="ascii") as fh:
        labels = [int(line) for line in fh.read().split()]
    return np.asarray(labels, dtype=np.int64)


def partition_summary(p: Partition) -> dict:
    sizes = p.element_sizes()
    ext = p.extended_sizes()
    cq = p.c_q()
    return {
        "n": int(p.n),
        "M": int(p.M),
        "hops": int(p.hops),
        "element_sizes": sizes.tolist(),
        "extended_sizes": ext.tolist(),
        "c_q": {"min": float(cq.min()), "mean": float(cq.mean()), "max": float(cq.max())},
    }


def write_partition_summary(path, p: Partition):
    with open(path, "w", encoding="ascii") as fh:
        json.dump(partition_summary(p), fh, indent=2)


# ---------------------------------------------------------------------------
# m-hop extended elements
# ---------------------------------------------------------------------------


def extended_elements_mhop(A: SparseHermitian, elements, m) -> list:
    """Extended element per element: all vertices within BFS distance m of it.

    ``m`` may be None or inf for "all reachable vertices"; m = 0 returns the
    elements themselves.
    """
    cutoff = None if m is None or m == np.inf else int(m)
    if cutoff is not None and cutoff < 0:
        raise ValueError("m must be >= 0")
    out = []
    for e in elements:
        e = index_set(e, A.n)
        if cutoff == 0:
            out.append(e)
            continue
        dm = geodesic_distances(A, e, cutoff=cutoff)
        out.append(dm.within(A.n if cutoff is None else cutoff))
    return out


def partition_mhop(A: SparseHermitian, elements, m) -> Partition:
    """Partition whose extended elements are m-hop BFS balls around each element."""
    n = A.n
    elements = [index_set(e, n) for e in elements]
    xi = np.full(n, -1, dtype=np.int64)
    for k, e in enumerate(elements):
        xi[e] = k
    extended = extended_elements_mhop(A, elements, m)
    neighbor_lists = []
    for q in extended:
        touched = np.unique(xi[q])
        neighbor_lists.append(touched.astype(np.int64))
    hops = A.n if m is None or m == np.inf else int(m)
    return Partition(len(elements), elements, xi, neighbor_lists, extended, hops=hops)


def effective_agreement_distance(A: SparseHermitian, p: Partition) -> int | None:
    """Largest even m such that every vertex of every element keeps its full
    m-ball inside the extended element.

    This is the geodesic agreement distance at which the Dirichlet submatrix
    on Q_k coincides with A around each element vertex, i.e. the m entering
    the truncation error bound.  Returns None when every extended element
    covers its whole connected component (no truncation at all).
    """
    best = None
    full = np.arange(A.n)
    for k in range(p.M):
        comp = np.setdiff1d(full, p.extended[k], assume_unique=False)
        if comp.size == 0:
            continue
        dm = geodesic_distances(A, comp)
        d_elem = dm.distances[p.elements[k]]
        if np.any(d_elem == UNREACHABLE):
            continue
        m_k = int(d_elem.min()) - 1
        best = m_k if best is None else min(best, m_k)
    if best is None:
        return None
    return best - (best % 2)


# ---------------------------------------------------------------------------
# multilevel general-matrix partitioner
# ---------------------------------------------------------------------------

_COARSEST = 48


def _subgraph(indptr, indices, ewts, keep_mask):
    """Extract the induced subgraph of the masked vertices (relabelled 0..k-1)."""
    old_ids = np.flatnonzero(keep_mask)
    remap = np.full(keep_mask.shape[0], -1, dtype=np.int64)
    remap[old_ids] = np.arange(old_ids.size)
    new_indptr = [0]
    new_indices, new_ewts = [], []
    for v in old_ids:
        lo, hi = indptr[v], indptr[v + 1]
        nbrs = indices[lo:hi]
        ok = keep_mask[nbrs]
        new_indices.append(remap[nbrs[ok]])
        new_ewts.append(ewts[lo:hi][ok])
        new_indptr.append(new_indptr[-1] + int(ok.sum()))
    new_indices = np.concatenate(new_indices) if new_indices else np.empty(0, dtype=np.int64)
    new_ewts = np.concatenate(new_ewts) if new_ewts else np.empty(0)
    return np.asarray(new_indptr, dtype=np.int64), new_indices, new_ewts, old_ids


def _heavy_edge_matching(indptr, indices, ewts, vwts):
    """One coarsening step: match vertices to their heaviest unmatched neighbor.

    Vertices are visited in index order; ties in edge weight break to the
    lowest neighbor index, which keeps the whole construction deterministic.
    """
    n = vwts.shape[0]
    match = np.full(n, -1, dtype=np.int64)
    for v in range(n):
        if match[v] != -1:
            continue
        best, best_w = v, -1.0
        for p in range(indptr[v], indptr[v + 1]):
            u = indices[p]
            if u == v or match[u] != -1:
                continue
            w = ewts[p]
            if w > best_w or (w == best_w and u < best):
                best, best_w = u, w
        match[v] = best
        match[best] = v

    coarse_id = np.full(n, -1, dtype=np.int64)
    next_id = 0
    for v in range(n):
        if coarse_id[v] == -1:
            coarse_id[v] = next_id
            coarse_id[match[v]] = next_id
            next_id += 1
    nc = next_id

    cvwts = np.zeros(nc)
    np.add.at(cvwts, coarse_id, vwts)

    row = np.repeat(np.arange(n), np.diff(indptr))
    crow, ccol = coarse_id[row], coarse_id[indices]
    off = crow != ccol
    if off.any():
        key = crow[off] * nc + ccol[off]
        order = np.argsort(key, kind="stable")
        key_s = key[order]
        w_s = ewts[off][order]
        uniq, start = np.unique(key_s, return_index=True)
        sums = np.add.reduceat(w_s, start)
        urow, ucol = uniq // nc, uniq % nc
        order2 = np.lexsort((ucol, urow))
        urow, ucol, sums = urow[order2], ucol[order2], sums[order2]
        cindptr = np.zeros(nc + 1, dtype=np.int64)
        np.add.at(cindptr, urow + 1, 1)
        cindptr = np.cumsum(cindptr)
        return cindptr, ucol, sums, cvwts, coarse_id
    return np.zeros(nc + 1, dtype=np.int64), np.empty(0, dtype=np.int64), np.empty(0), cvwts, coarse_id


def _peripheral_vertex(indptr, indices, n) -> int:
    """Approximate peripheral vertex by two BFS sweeps from vertex 0."""
    def farthest(start):
        dist = np.full(n, -1, dtype=np.int64)
        dist[start] = 0
        frontier = [start]
        last = start
        while frontier:
            nxt = []
            for v in frontier:
                for p in range(indptr[v], indptr[v + 1]):
                    u = indices[p]
                    if dist[u] == -1:
                        dist[u] = dist[v] + 1
                        nxt.append(u)
            if nxt:
                last = min(nxt)  # deterministic representative of the deepest level
            frontier = nxt
        return last

    return farthest(farthest(0))


def _grow_bisection(indptr, indices, ewts, vwts, target0):
    """Region-growing initial bisection from a peripheral seed."""
    n = vwts.shape[0]
    side = np.ones(n, dtype=np.int8)
    seed = _peripheral_vertex(indptr, indices, n)
    conn = np.zeros(n)
    in_set = np.zeros(n, dtype=bool)

    w0 = 0.0
    current = seed
    while True:
        in_set[current] = True
        side[current] = 0
        w0 += vwts[current]
        if w0 >= target0:
            break
        for p in range(indptr[current], indptr[current + 1]):
            u = indices[p]
            if not in_set[u]:
                conn[u] += ewts[p]
        cand = np.flatnonzero(~in_set & (conn > 0))
        if cand.size:
            current = int(cand[np.lexsort((cand, -conn[cand]))[0]])
        else:
            rest = np.flatnonzero(~in_set)
            if rest.size == 0:
                break
            current = int(rest[0])  # disconnected: jump to lowest unassigned vertex
    return side


def _gain(indptr, indices, ewts, side, v) -> float:
    g = 0.0
    for p in range(indptr[v], indptr[v + 1]):
        u = indices[p]
        if u == v:
            continue
        g += ewts[p] if side[u] != side[v] else -ewts[p]
    return g


def _refine_bisection(indptr, indices, ewts, vwts, side, target0, tol_frac=0.005,
                      max_passes=10):
    """Greedy boundary refinement plus rebalancing.

    Positive-gain moves that keep the split within tolerance are applied
    until none remain; if the split is out of tolerance, minimum-loss moves
    from the heavy side restore balance.  Both loops strictly decrease their
    objective, so termination is guaranteed.
    """
    total = float(vwts.sum())
    tol = max(float(vwts.max()) if vwts.size else 0.0, tol_frac * total)
    w0 = float(vwts[side == 0].sum())

    for _ in range(max_passes):
        moved = False
        boundary = []
        row = np.repeat(np.arange(len(vwts)), np.diff(indptr))
        cross = side[row] != side[indices]
        boundary = np.unique(row[cross])
        for v in boundary:
            g = _gain(indptr, indices, ewts, side, v)
            if g <= 0:
                continue
            new_w0 = w0 - vwts[v] if side[v] == 0 else w0 + vwts[v]
            if abs(new_w0 - target0) <= max(tol, abs(w0 - target0)):
                side[v] = 1 - side[v]
                w0 = new_w0
                moved = True
        if not moved:
            break

    # rebalance: move min-loss vertices from the heavy side
    guard = len(vwts) + 1
    while abs(w0 - target0) > tol and guard:
        guard -= 1
        heavy = 0 if w0 > target0 else 1
        cand = np.flatnonzero(side == heavy)
        if cand.size <= 1:
            break
        gains = np.array([_gain(indptr, indices, ewts, side, v) for v in cand])
        order = np.lexsort((cand, -gains))
        v = int(cand[order[0]])
        new_w0 = w0 - vwts[v] if heavy == 0 else w0 + vwts[v]
        if abs(new_w0 - target0) >= abs(w0 - target0):
            break
        side[v] = 1 - side[v]
        w0 = new_w0
    return side


def _multilevel_bisect(indptr, indices, ewts, vwts, frac):
    total = float(vwts.sum())
    target0 = frac * total
    n = vwts.shape[0]
    if n <= _COARSEST:
        side = _grow_bisection(indptr, indices, ewts, vwts, target0)
        return _refine_bisection(indptr, indices, ewts, vwts, side, target0)

    cindptr, cindices, cewts, cvwts, coarse_id = _heavy_edge_matching(
        indptr, indices, ewts, vwts)
    if cvwts.shape[0] > 0.95 * n:  # matching stalled; stop coarsening here
        side = _grow_bisection(indptr, indices, ewts, vwts, target0)
        return _refine_bisection(indptr, indices, ewts, vwts, side, target0)

    coarse_side = _multilevel_bisect(cindptr, cindices, cewts, cvwts, frac)
    side = coarse_side[coarse_id].astype(np.int8)
    return _refine_bisection(indptr, indices, ewts, vwts, side, target0)


def _partition_recursive(indptr, indices, ewts, vertex_ids, M, xi, first_label):
    n = vertex_ids.shape[0]
    if M == 1:
        xi[vertex_ids] = first_label
        return
    M0 = (M + 1) // 2
    M1 = M - M0
    vwts = np.ones(n)
    side = _multilevel_bisect(indptr, indices, ewts, vwts, M0 / M)

    # each side must be able to host its share of parts
    for heavy, light, need in ((0, 1, M1), (1, 0, M0)):
        while int((side == light).sum()) < need:
            cand = np.flatnonzero(side == heavy)
            gains = np.array([_gain(indptr, indices, ewts, side, v) for v in cand])
            v = int(cand[np.lexsort((cand, -gains))[0]])
            side[v] = light

    for s, m_side, label0 in ((0, M0, first_label), (1, M1, first_label + M0)):
        mask = side == s
        sub_indptr, sub_indices, sub_ewts, local_old = _subgraph(indptr, indices, ewts, mask)
        _partition_recursive(sub_indptr, sub_indices, sub_ewts,
                             vertex_ids[local_old], m_side, xi, label0)


def _repair_balance(indptr, indices, ewts, xi, M, tol=0.05):
    """Move boundary vertices from oversized to adjacent parts until all part
    sizes are within tol of n/M (best effort, min cut-loss first)."""
    n = xi.shape[0]
    ideal = n / M
    hi = int(np.floor(ideal * (1 + tol)))
    lo = int(np.ceil(ideal * (1 - tol)))
    sizes = np.bincount(xi, minlength=M)
    guard = 2 * n
    while guard and (sizes.max() > hi or sizes.min() < lo):
        guard -= 1
        src = int(np.argmax(sizes))
        best = None  # (loss, vertex, destination)
        for v in np.flatnonzero(xi == src):
            for p in range(indptr[v], indptr[v + 1]):
                dest = xi[indices[p]]
                if dest == src or sizes[dest] >= hi:
                    continue
                loss = -_gain_to(indptr, indices, ewts, xi, v, dest)
                cand = (loss, int(v), int(dest))
                if best is None or cand < best:
                    best = cand
        if best is None:
            break
        _, v, dest = best
        xi[v] = dest
        sizes[src] -= 1
        sizes[dest] += 1
    return xi


def _gain_to(indptr, indices, ewts, xi, v, dest) -> float:
    g = 0.0
    for p in range(indptr[v], indptr[v + 1]):
        u = indices[p]
        if u == v:
            continue
        if xi[u] == dest:
            g += ewts[p]
        elif xi[u] == xi[v]:
            g -= ewts[p]
    return g


def partition_general(A: SparseHermitian, M: int) -> Partition:
    """Partition a general sparse Hermitian matrix into M elements.

    The vertex map comes from multilevel recursive bisection of the
    structural adjacency graph (unit edge weights); neighbor lists and
    extended elements follow the one-hop adjacency rule.
    """
    if M < 1:
        raise ValueError("M must be >= 1")
    if M > A.n:
        raise ValueError(f"M={M} exceeds the number of vertices n={A.n}")
    indptr, indices, ewts = _structural_adjacency(A)
    xi = np.full(A.n, -1, dtype=np.int64)
    _partition_recursive(indptr, indices, ewts, np.arange(A.n), M, xi, 0)
    xi = _repair_balance(indptr, indices, ewts, xi, M)
    return partition_from_map(A, xi, hops=1)
