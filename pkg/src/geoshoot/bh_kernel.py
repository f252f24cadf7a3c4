"""Barnes-Hut evaluation of the kernel sums by octree traversal.

For a query x, nodes are visited from the root:

1. a leaf holding a single point contributes its exact term;
2. a node with several points whose actual bounding box lies farther than
   ``threshold`` from x contributes one term built from its centroid and
   total momentum (and, in the backward pass, its adjoint sums and means);
3. any other node is opened.

The box test is conservative: if it passes, every point in the node is
farther than ``threshold``. A query point that belongs to the tree is never
approximated away, because every node containing it has distance 0.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .core import DimensionMismatch, GeoshootError, as_points, check_aligned
from .kernel_exact import VELOCITY_FACTOR, HamiltonianGradients, combine_adjoint
from .octree import Octree


class EmptyTree(GeoshootError, ValueError):
    pass


@dataclass
class TraversalStats:
    direct_interactions: int = 0
    approximated_interactions: int = 0
    nodes_visited: int = 0
    queries: int = 0

    @classmethod
    def from_array(cls, stats: np.ndarray) -> "TraversalStats":
        s = stats.sum(axis=0)
        return cls(int(s[0]), int(s[1]), int(s[2]), stats.shape[0])

    def merge(self, other: "TraversalStats") -> "TraversalStats":
        return TraversalStats(
            self.direct_interactions + other.direct_interactions,
            self.approximated_interactions + other.approximated_interactions,
            self.nodes_visited + other.nodes_visited,
            self.queries + other.queries,
        )

    __add__ = merge

    @property
    def mean_direct(self) -> float:
        return self.direct_interactions / self.queries if self.queries else 0.0

    @property
    def mean_approximated(self) -> float:
        return self.approximated_interactions / self.queries if self.queries else 0.0


def _check_tree(tree: Octree):
    if tree.n_points == 0 or tree.count[0] == 0:
        raise EmptyTree("octree holds no points")


def _thr2(threshold: float) -> float:
    if not threshold > 0:
        raise ValueError("threshold must be positive")
    return float(threshold) ** 2


def forward_sums(tree: Octree, xq, xp, sigma, threshold, literal=False):
    """Raw traversal: (sum G P, sum c G d, sum c G, per-query stats array)."""
    _check_tree(tree)
    m = xq.shape[0]
    vel = np.empty((m, 3))
    gq = np.empty((m, 3))
    h = np.empty(m)
    stats = np.empty((m, 3), np.int64)
    n = tree.n_nodes
    _kernels.bh_forward(xq, xp, tree.q, tree.p, tree.children[:n], tree.point[:n],
                        tree.next_in_leaf, tree.count[:n], tree.centroid[:n], tree.mom[:n],
                        tree.actual_min[:n], tree.actual_max[:n], 1.0 / (sigma * sigma),
                        _thr2(threshold), bool(literal), vel, gq, h, stats)
    return vel, gq, h, stats


def bh_velocity(tree: Octree, x, sigma: float, threshold: float):
    """Approximate v(x) = sum_i G(|x - q_i|) p_i.

    ``x`` may be a single coordinate (returns a 3-vector) or an ``(M, 3)``
    array. Returns ``(velocity, TraversalStats)``.
    """
    single = np.ndim(x) == 1
    xq = as_points(x, "x")
    vel, _, _, stats = forward_sums(tree, xq, np.zeros_like(xq), sigma, threshold)
    return (vel[0] if single else vel), TraversalStats.from_array(stats)


def bh_hamiltonian(tree: Octree, q, p, sigma: float, threshold: float,
                   literal: bool = False) -> float:
    q = as_points(q, "q")
    p = as_points(p, "p")
    check_aligned(q, p)
    if q.shape[0] != tree.n_points:
        raise DimensionMismatch("tree and point set sizes differ")
    _, _, h, _ = forward_sums(tree, q, p, sigma, threshold, literal)
    return float(h.sum())


def bh_forward_terms(tree: Octree, q, p, sigma, threshold, literal=False):
    """``(dH/dp, dH/dq, H, TraversalStats)`` for the points the tree was built on."""
    vel, gq, h, stats = forward_sums(tree, q, p, sigma, threshold, literal)
    return (VELOCITY_FACTOR * vel, (-2.0 / sigma**2) * gq, float(h.sum()),
            TraversalStats.from_array(stats))


def bh_hamiltonian_gradients(tree: Octree, q, p, sigma: float, threshold: float,
                             literal: bool = False) -> HamiltonianGradients:
    q = as_points(q, "q")
    p = as_points(p, "p")
    check_aligned(q, p)
    if q.shape[0] != tree.n_points:
        raise DimensionMismatch("tree and point set sizes differ")
    dp, dq, _, _ = bh_forward_terms(tree, q, p, sigma, threshold, literal)
    return HamiltonianGradients(dH_dp=dp, dH_dq=dq)


def bh_adjoint_products(tree: Octree, alpha, beta, sigma: float, threshold: float,
                        literal: bool = False):
    """Tree version of :func:`geoshoot.kernel_exact.adjoint_products`.

    Annotates ``tree`` with the adjoint sums first. Far nodes stand in for
    their points with node totals where the exact formula sums a per-point
    quantity and node means (sum / count) where it needs one representative
    per-point value. Returns ``(grad_q, grad_p, TraversalStats)``.
    """
    _check_tree(tree)
    alpha = as_points(alpha, "alpha")
    beta = as_points(beta, "beta")
    check_aligned(tree.q, alpha, beta)
    tree.accumulate_adjoints(alpha, beta)
    n = tree.n_points
    sq1, sq2, sp1, sp2 = (np.empty((n, 3)) for _ in range(4))
    stats = np.empty((n, 3), np.int64)
    m = tree.n_nodes
    _kernels.bh_backward(tree.q, tree.p, alpha, beta, tree.children[:m], tree.point[:m],
                         tree.next_in_leaf, tree.count[:m], tree.centroid[:m], tree.mom[:m],
                         tree.asum[:m], tree.bsum[:m], tree.actual_min[:m], tree.actual_max[:m],
                         1.0 / (sigma * sigma), _thr2(threshold), bool(literal),
                         sq1, sq2, sp1, sp2, stats)
    gq, gp = combine_adjoint(sq1, sq2, sp1, sp2, sigma)
    return gq, gp, TraversalStats.from_array(stats)
