import numpy as np
import pytest
from hypothesis import given, strategies as st

from geoshoot.core import DimensionMismatch
from geoshoot.octree import DuplicatePointOverflow, Octree, OutOfBounds, box_distance
from geoshoot.synthetic import ShapeKind, ShapeSpec, generate

from octree_checks import check_octree


def test_single_point():
    q = np.array([[1.0, 2.0, 3.0]])
    p = np.array([[0.5, 0.0, -1.0]])
    tree = Octree.build(q, p)
    root = tree.root
    assert root.is_leaf and root.count == 1 and root.points == (0,)
    np.testing.assert_array_equal(root.centroid, q[0])
    np.testing.assert_array_equal(root.total_momentum, p[0])


def test_eight_corners_one_split():
    q = np.array([[x, y, z] for z in (0, 1) for y in (0, 1) for x in (0, 1)], float)
    tree = Octree.build(q, np.ones_like(q))
    root = tree.root
    assert root.count == 8 and not root.is_leaf
    assert tree.n_nodes == 9
    for o, c in enumerate(root.children):
        child = tree.node(c)
        assert child.is_leaf and child.count == 1
        # octant bit d set means the high half along axis d
        (i,) = child.points
        assert o == int(q[i, 0] > 0.5) | int(q[i, 1] > 0.5) << 1 | int(q[i, 2] > 0.5) << 2


def test_root_is_padded_bounding_box(rng):
    q = rng.uniform(-3, 5, size=(50, 3))
    tree = Octree.build(q, np.zeros_like(q))
    lo, hi = q.min(0), q.max(0)
    assert np.all(tree.cell_min[0] < lo) and np.all(tree.cell_max[0] > hi)
    np.testing.assert_allclose(tree.cell_min[0], lo, atol=1e-8 * (hi - lo).max())


def test_uniform_100_brute_force(rng):
    q = rng.uniform(-1, 1, size=(100, 3))
    p = rng.normal(size=(100, 3))
    check_octree(Octree.build(q, p), q, p)


def test_incremental_insert():
    q = np.array([[0.0, 0, 0], [1.0, 1.0, 1.0], [0.9, 0.1, 0.2]])
    p = np.eye(3)
    tree = Octree(np.full(3, -0.5), np.full(3, 1.5), 3)
    tree.insert(0, q[0], p[0])
    assert tree.root.is_leaf and tree.root.points == (0,)
    np.testing.assert_array_equal(tree.root.centroid, q[0])
    tree.insert(1, q[1], p[1])
    root = tree.root
    assert not root.is_leaf
    assert sorted(tree.node(c).points for c in root.children if c >= 0) == [(0,), (1,)]
    tree.insert(2, q[2], p[2])
    check_octree(tree, q, p)


def test_insert_sequence_of_ten(rng):
    q = rng.uniform(0, 1, size=(10, 3))
    p = rng.normal(size=(10, 3))
    tree = Octree(np.zeros(3), np.ones(3), 10, capacity=2)  # forces growth
    for i in rng.permutation(10):
        tree.insert(int(i), q[i], p[i])
    check_octree(tree, q, p)


def test_insert_errors():
    tree = Octree(np.zeros(3), np.ones(3), 2)
    with pytest.raises(OutOfBounds):
        tree.insert(0, [2.0, 0.5, 0.5], [0, 0, 0])
    with pytest.raises(DimensionMismatch):
        tree.insert(5, [0.5, 0.5, 0.5], [0, 0, 0])


def test_tie_goes_high():
    tree = Octree(np.zeros(3), np.full(3, 2.0), 2)
    tree.insert(0, [0.5, 0.5, 0.5], [0, 0, 0])
    tree.insert(1, [1.0, 1.0, 1.0], [0, 0, 0])  # exactly on all three splitting planes
    assert tree.node(tree.root.children[7]).points == (1,)
    assert tree.node(tree.root.children[0]).points == (0,)


def test_accumulate_adjoints(rng):
    q = rng.normal(size=(50, 3))
    p = rng.normal(size=(50, 3))
    a = rng.normal(size=(50, 3))
    b = rng.normal(size=(50, 3))
    tree = Octree.build(q, p)
    geometry = (tree.centroid.copy(), tree.mom.copy(), tree.count.copy())
    tree.accumulate_adjoints(a, b)
    check_octree(tree, q, p, a, b)
    np.testing.assert_array_equal(tree.centroid, geometry[0])
    np.testing.assert_array_equal(tree.mom, geometry[1])
    tree.accumulate_adjoints(np.zeros_like(a), np.zeros_like(b))
    assert not tree.asum[:tree.n_nodes].any() and not tree.bsum[:tree.n_nodes].any()
    single = Octree.build(q[:1], p[:1]).accumulate_adjoints(a[:1], b[:1])
    np.testing.assert_array_equal(single.root.adjoint_pos_sum, a[0])
    np.testing.assert_array_equal(single.root.adjoint_mom_sum, b[0])
    with pytest.raises(DimensionMismatch):
        tree.accumulate_adjoints(a[:10], b)


def test_min_distance_examples():
    assert box_distance(-np.ones(3), np.ones(3), np.array([5.0, 0, 0])) == 4.0
    assert box_distance(-np.ones(3), np.ones(3), np.array([0.3, -0.2, 0.9])) == 0.0


def test_min_distance_is_lower_bound(rng):
    q = rng.normal(size=(30, 3))
    tree = Octree.build(q, np.zeros_like(q))
    for x in rng.normal(scale=3, size=(100, 3)):
        assert tree.min_distance(0, x) <= np.linalg.norm(q - x, axis=1).min()


def test_coincident_points_bucket():
    q = np.vstack([np.zeros((5, 3)), np.ones((1, 3))])
    p = np.arange(18, dtype=float).reshape(6, 3)
    tree = Octree.build(q, p)
    check_octree(tree, q, p)
    assert tree.max_node_depth() == tree.max_depth
    with pytest.raises(DuplicatePointOverflow):
        Octree.build(np.zeros((10, 3)), np.zeros((10, 3)), max_bucket=4)


def test_depth_bound_for_separated_points():
    q = generate(ShapeSpec(ShapeKind.FLAT_RECTANGLE, 600))
    tree = Octree.build(q, np.zeros_like(q))
    assert tree.max_node_depth() < tree.max_depth
    assert all(n.count == 1 for n in tree.nodes() if n.is_leaf)


def _cells(tree):
    return {(tuple(tree.cell_min[k]), int(tree.depth[k])): k for k in range(tree.n_nodes)}


@given(st.integers(1, 200), st.integers(0, 2 ** 31))
def test_insertion_order_independence(n, seed):
    rng = np.random.default_rng(seed)
    q = rng.normal(size=(n, 3))
    p = rng.normal(size=(n, 3))
    perm = rng.permutation(n)
    t1 = Octree.build(q, p)
    t2 = Octree.build(q[perm], p[perm])
    c1, c2 = _cells(t1), _cells(t2)
    assert c1.keys() == c2.keys()
    for key, k1 in c1.items():
        k2 = c2[key]
        assert t1.count[k1] == t2.count[k2]
        np.testing.assert_allclose(t1.centroid[k1], t2.centroid[k2], rtol=1e-12, atol=1e-12)
        np.testing.assert_allclose(t1.mom[k1], t2.mom[k2], rtol=1e-12, atol=1e-12)


@given(st.integers(1, 300), st.integers(0, 2 ** 31),
       st.sampled_from(["uniform", "clustered", "lattice"]))
def test_invariants_random(n, seed, kind):
    rng = np.random.default_rng(seed)
    if kind == "uniform":
        q = rng.uniform(-10, 10, size=(n, 3))
    elif kind == "clustered":
        q = generate(ShapeSpec(ShapeKind.CLUSTERED_PAIRS, n, cluster_spread=1e-3,
                               rng_seed=seed % 1000))
    else:
        # integer lattice: many points exactly on splitting planes
        q = rng.integers(-3, 4, size=(n, 3)).astype(float)
        q = np.unique(q, axis=0)
    p = rng.normal(size=q.shape)
    a = rng.normal(size=q.shape)
    b = rng.normal(size=q.shape)
    check_octree(Octree.build(q, p).accumulate_adjoints(a, b), q, p, a, b, n_queries=5,
                 rng=rng)
