"""Oct-tree over a point set with per-node summary statistics.

Points are inserted one at a time. Descending from the root, each node on the
insertion path has its count, running-mean centroid, total momentum and
actual (tight) bounds updated. Then one of three cases applies at the node
reached:

1. internal node: continue into the child octant (created on demand);
2. empty leaf: store the point and stop;
3. occupied leaf: split it, push the previous occupant into its octant and
   continue with the new point.

Octant index bits: bit 0 = x high, bit 1 = y high, bit 2 = z high; a point on
a splitting plane goes to the high side. Identical coordinates cannot be
separated, so at ``max_depth`` a leaf keeps a bucket of points instead.

Adjoint sums (alpha, beta) live on the same nodes and are filled by
:meth:`Octree.accumulate_adjoints` for the backward pass.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from ._kernels import MAX_DEPTH
from .core import GeoshootError, as_points, check_aligned, DimensionMismatch

_OK, _FULL, _OVERFLOW, _OUTSIDE = 0, 1, 2, 3

ROOT_PAD = 1e-9
DEFAULT_MAX_BUCKET = 64


class OutOfBounds(GeoshootError, ValueError):
    pass


class DuplicatePointOverflow(GeoshootError, ValueError):
    pass


@dataclass(frozen=True)
class OctreeNode:
    """Read-only snapshot of one node."""

    index: int
    cell_min: np.ndarray
    cell_max: np.ndarray
    actual_min: np.ndarray
    actual_max: np.ndarray
    count: int
    centroid: np.ndarray
    total_momentum: np.ndarray
    adjoint_pos_sum: np.ndarray
    adjoint_mom_sum: np.ndarray
    children: tuple
    depth: int
    points: tuple  # indices stored here (leaves only)

    @property
    def is_leaf(self) -> bool:
        return all(c < 0 for c in self.children)


@njit(cache=True)
def _new_node(parent, octant, cell_min, cell_max, actual_min, actual_max, count, centroid,
              mom, children, parent_arr, depth, point, n_nodes):
    k = n_nodes[0]
    n_nodes[0] = k + 1
    for d in range(3):
        lo = cell_min[parent, d]
        hi = cell_max[parent, d]
        mid = 0.5 * (lo + hi)
        if (octant >> d) & 1:
            cell_min[k, d] = mid
            cell_max[k, d] = hi
        else:
            cell_min[k, d] = lo
            cell_max[k, d] = mid
        actual_min[k, d] = np.inf
        actual_max[k, d] = -np.inf
        centroid[k, d] = 0.0
        mom[k, d] = 0.0
    for o in range(8):
        children[k, o] = -1
    count[k] = 0
    parent_arr[k] = parent
    depth[k] = depth[parent] + 1
    point[k] = -1
    children[parent, octant] = k
    return k


@njit(inline="always")
def _octant(cell_min, cell_max, k, x):
    o = 0
    for d in range(3):
        if x[d] >= 0.5 * (cell_min[k, d] + cell_max[k, d]):
            o |= 1 << d
    return o


@njit(inline="always")
def _add_stats(k, x, pm, actual_min, actual_max, count, centroid, mom):
    n = count[k]
    for d in range(3):
        centroid[k, d] = (centroid[k, d] * n + x[d]) / (n + 1)
        mom[k, d] += pm[d]
        if x[d] < actual_min[k, d]:
            actual_min[k, d] = x[d]
        if x[d] > actual_max[k, d]:
            actual_max[k, d] = x[d]
    count[k] = n + 1


@njit(cache=True)
def _insert(idx, q, p, cell_min, cell_max, actual_min, actual_max, count, centroid, mom,
            children, parent, depth, point, next_in_leaf, leaf_of, n_nodes, max_depth,
            max_bucket):
    x = q[idx]
    pm = p[idx]
    if n_nodes[0] + max_depth + 2 > count.shape[0]:
        return _FULL
    for d in range(3):
        if not (cell_min[0, d] <= x[d] <= cell_max[0, d]):
            return _OUTSIDE
    k = 0
    while True:
        n_before = count[k]
        _add_stats(k, x, pm, actual_min, actual_max, count, centroid, mom)
        if point[k] < 0:
            if n_before == 0:
                # empty leaf
                point[k] = idx
                next_in_leaf[idx] = -1
                leaf_of[idx] = k
                return _OK
            # internal node
            o = _octant(cell_min, cell_max, k, x)
            c = children[k, o]
            if c < 0:
                c = _new_node(k, o, cell_min, cell_max, actual_min, actual_max, count,
                              centroid, mom, children, parent, depth, point, n_nodes)
            k = c
            continue
        # occupied leaf
        if depth[k] >= max_depth:
            next_in_leaf[idx] = point[k]
            point[k] = idx
            leaf_of[idx] = k
            if count[k] > max_bucket:
                return _OVERFLOW
            return _OK
        old = point[k]
        point[k] = -1
        oo = _octant(cell_min, cell_max, k, q[old])
        c = _new_node(k, oo, cell_min, cell_max, actual_min, actual_max, count, centroid,
                      mom, children, parent, depth, point, n_nodes)
        _add_stats(c, q[old], p[old], actual_min, actual_max, count, centroid, mom)
        point[c] = old
        next_in_leaf[old] = -1
        leaf_of[old] = c
        o = _octant(cell_min, cell_max, k, x)
        c = children[k, o]
        if c < 0:
            c = _new_node(k, o, cell_min, cell_max, actual_min, actual_max, count, centroid,
                          mom, children, parent, depth, point, n_nodes)
        k = c


@njit(cache=True)
def _insert_range(start, q, p, cell_min, cell_max, actual_min, actual_max, count, centroid,
                  mom, children, parent, depth, point, next_in_leaf, leaf_of, n_nodes,
                  max_depth, max_bucket):
    """Insert points start..N-1; returns (status, first index not inserted)."""
    for i in range(start, q.shape[0]):
        s = _insert(i, q, p, cell_min, cell_max, actual_min, actual_max, count, centroid, mom,
                    children, parent, depth, point, next_in_leaf, leaf_of, n_nodes, max_depth,
                    max_bucket)
        if s != _OK:
            return s, i
    return _OK, q.shape[0]


@njit(cache=True)
def _accumulate(alpha, beta, leaf_of, parent, asum, bsum):
    asum[:] = 0.0
    bsum[:] = 0.0
    for i in range(alpha.shape[0]):
        k = leaf_of[i]
        while k >= 0:
            for d in range(3):
                asum[k, d] += alpha[i, d]
                bsum[k, d] += beta[i, d]
            k = parent[k]


def box_distance(box_min, box_max, x) -> float:
    """Euclidean distance from ``x`` to the box ``[box_min, box_max]``."""
    x = np.asarray(x, dtype=np.float64)
    gap = np.maximum(np.maximum(box_min - x, x - box_max), 0.0)
    return float(np.sqrt(gap @ gap))


_NODE_FLOAT = ("cell_min", "cell_max", "actual_min", "actual_max", "centroid", "mom",
               "asum", "bsum")
_NODE_INT = ("count", "parent", "depth", "point")


class Octree:
    """Array-backed oct-tree; node 0 is the root.

    Per-node arrays are sized to a capacity that grows on demand; only the
    first ``n_nodes`` rows are meaningful.
    """

    def __init__(self, cell_min, cell_max, n_points: int, capacity: int | None = None,
                 max_depth: int = MAX_DEPTH, max_bucket: int = DEFAULT_MAX_BUCKET):
        if max_depth > MAX_DEPTH:
            raise ValueError(f"max_depth is limited to {MAX_DEPTH}")
        self.max_depth = int(max_depth)
        self.max_bucket = int(max_bucket)
        cap = max(capacity or (4 * n_points + 2 * MAX_DEPTH + 8), 2 * MAX_DEPTH + 8)
        self.cell_min = np.empty((cap, 3))
        self.cell_max = np.empty((cap, 3))
        self.actual_min = np.empty((cap, 3))
        self.actual_max = np.empty((cap, 3))
        self.centroid = np.empty((cap, 3))
        self.mom = np.empty((cap, 3))
        self.asum = np.zeros((cap, 3))
        self.bsum = np.zeros((cap, 3))
        self.count = np.zeros(cap, np.int64)
        self.parent = np.empty(cap, np.int64)
        self.depth = np.empty(cap, np.int64)
        self.point = np.empty(cap, np.int64)
        self.children = np.full((cap, 8), -1, np.int64)
        self._n_nodes = np.zeros(1, np.int64)
        self.q = np.zeros((n_points, 3))
        self.p = np.zeros((n_points, 3))
        self.inserted = np.zeros(n_points, bool)
        self.next_in_leaf = np.full(n_points, -1, np.int64)
        self.leaf_of = np.full(n_points, -1, np.int64)
        # root: empty leaf covering the given cell
        self.cell_min[0] = cell_min
        self.cell_max[0] = cell_max
        self.actual_min[0] = np.inf
        self.actual_max[0] = -np.inf
        self.centroid[0] = 0.0
        self.mom[0] = 0.0
        self.parent[0] = -1
        self.depth[0] = 0
        self.point[0] = -1
        self._n_nodes[0] = 1

    # ---------------------------------------------------------------- build
    @staticmethod
    def root_bounds(q: np.ndarray):
        lo = q.min(axis=0)
        hi = q.max(axis=0)
        extent = float((hi - lo).max())
        scale = extent if extent > 0 else max(float(np.abs(q).max()), 1.0)
        pad = ROOT_PAD * scale
        return lo - pad, hi + pad

    @classmethod
    def build(cls, q, p, max_depth: int = MAX_DEPTH,
              max_bucket: int = DEFAULT_MAX_BUCKET) -> "Octree":
        q = as_points(q, "q")
        p = as_points(p, "p")
        check_aligned(q, p)
        lo, hi = cls.root_bounds(q)
        tree = cls(lo, hi, q.shape[0], max_depth=max_depth, max_bucket=max_bucket)
        tree.q[:] = q
        tree.p[:] = p
        start = 0
        while start < q.shape[0]:
            status, start = _insert_range(start, tree.q, tree.p, *tree._insert_args())
            tree._check(status, start)
        tree.inserted[:] = True
        return tree

    def _insert_args(self):
        return (self.cell_min, self.cell_max, self.actual_min, self.actual_max, self.count,
                self.centroid, self.mom, self.children, self.parent, self.depth, self.point,
                self.next_in_leaf, self.leaf_of, self._n_nodes, self.max_depth, self.max_bucket)

    def _check(self, status, index):
        if status == _FULL:
            self._grow()
        elif status == _OVERFLOW:
            raise DuplicatePointOverflow(
                f"more than {self.max_bucket} coincident points at depth {self.max_depth} "
                f"(point {index}); the tree is invalid")
        elif status == _OUTSIDE:
            raise OutOfBounds(f"point {index} lies outside the root cell")

    def _grow(self):
        cap = self.count.shape[0]
        new = 2 * cap
        for name in _NODE_FLOAT + _NODE_INT:
            old = getattr(self, name)
            arr = np.zeros((new,) + old.shape[1:], old.dtype)
            arr[:cap] = old
            setattr(self, name, arr)
        ch = np.full((new, 8), -1, np.int64)
        ch[:cap] = self.children
        self.children = ch

    def insert(self, index: int, q_j, p_j) -> "Octree":
        """Insert point ``index`` at ``q_j`` carrying momentum ``p_j``."""
        if not 0 <= index < self.q.shape[0]:
            raise DimensionMismatch(f"index {index} outside 0..{self.q.shape[0] - 1}")
        if self.inserted[index]:
            raise ValueError(f"point {index} already inserted")
        q_j = as_points(q_j, "q_j")[0]
        p_j = as_points(p_j, "p_j")[0]
        if np.any(q_j < self.cell_min[0]) or np.any(q_j > self.cell_max[0]):
            raise OutOfBounds(f"point {index} at {q_j} lies outside the root cell")
        self.q[index] = q_j
        self.p[index] = p_j
        while True:
            status = _insert(index, self.q, self.p, *self._insert_args())
            if status != _FULL:
                break
            self._grow()
        self._check(status, index)
        self.inserted[index] = True
        return self

    # ---------------------------------------------------------- adjoints
    def accumulate_adjoints(self, alpha, beta) -> "Octree":
        """Set every node's adjoint sums to the totals over its points."""
        alpha = np.ascontiguousarray(alpha, dtype=np.float64)
        beta = np.ascontiguousarray(beta, dtype=np.float64)
        if alpha.shape != self.q.shape or beta.shape != self.q.shape:
            raise DimensionMismatch(
                f"adjoints must have shape {self.q.shape}, got {alpha.shape} / {beta.shape}")
        _accumulate(alpha, beta, self.leaf_of, self.parent, self.asum, self.bsum)
        return self

    # ------------------------------------------------------------ queries
    @property
    def n_nodes(self) -> int:
        return int(self._n_nodes[0])

    @property
    def n_points(self) -> int:
        return self.q.shape[0]

    def min_distance(self, node: int, x) -> float:
        """Lower bound on the distance from ``x`` to any point in ``node``."""
        return box_distance(self.actual_min[node], self.actual_max[node], x)

    def leaf_points(self, node: int) -> tuple:
        out = []
        j = self.point[node]
        while j >= 0:
            out.append(int(j))
            j = self.next_in_leaf[j]
        return tuple(out)

    def node(self, k: int) -> OctreeNode:
        if not 0 <= k < self.n_nodes:
            raise IndexError(k)
        return OctreeNode(
            index=k,
            cell_min=self.cell_min[k].copy(),
            cell_max=self.cell_max[k].copy(),
            actual_min=self.actual_min[k].copy(),
            actual_max=self.actual_max[k].copy(),
            count=int(self.count[k]),
            centroid=self.centroid[k].copy(),
            total_momentum=self.mom[k].copy(),
            adjoint_pos_sum=self.asum[k].copy(),
            adjoint_mom_sum=self.bsum[k].copy(),
            children=tuple(int(c) for c in self.children[k]),
            depth=int(self.depth[k]),
            points=self.leaf_points(k),
        )

    @property
    def root(self) -> OctreeNode:
        return self.node(0)

    def nodes(self):
        for k in range(self.n_nodes):
            yield self.node(k)

    def members(self, k: int) -> list[int]:
        """All point indices below node ``k`` (walks the subtree)."""
        out = []
        stack = [k]
        while stack:
            m = stack.pop()
            out.extend(self.leaf_points(m))
            stack.extend(int(c) for c in self.children[m] if c >= 0)
        return out

    def max_node_depth(self) -> int:
        return int(self.depth[: self.n_nodes].max())

    def kernel_args(self):
        """Arrays consumed by the compiled traversal kernels."""
        n = self.n_nodes
        return (self.children[:n], self.point[:n], self.next_in_leaf, self.count[:n],
                self.centroid[:n], self.mom[:n])
