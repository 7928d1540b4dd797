import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mdich.errors import BadParameters, NotLacunary, TooFewLeaves
from mdich.instances import complete_tree, random_hst
from mdich.metric import aspect_ratio, restrict
from mdich.trees import (
    HstTree,
    LacunarySequence,
    binary_subtree,
    binary_subtree_bound,
    caterpillar,
    hst,
    hst_metric,
    hst_separation,
    is_binary,
    is_k_increasing,
    lacunary_metric,
    lacunary_subsequence,
    leaf,
    max_outdegree,
    node,
)

from conftest import hst_trees


def star(n, label=1.0):
    return hst(node(label, *[leaf(i) for i in range(n)]))


def test_hst_metric_examples():
    M = hst_metric(hst(node(2, leaf("a"), leaf("b"))))
    assert M.n == 2 and M.d(0, 1) == 2
    T = hst(node(4, leaf("a"), node(1, leaf("b"), leaf("c"))))
    M = hst_metric(T, order=["a", "b", "c"])
    assert M.d(1, 2) == 1 and M.d(0, 1) == 4 and M.d(0, 2) == 4


def test_caterpillar_matches_lacunary_metric():
    seq = (4, 2, 1)
    assert np.array_equal(hst_metric(caterpillar(seq), order=range(4)).dist, lacunary_metric(seq).dist)


def test_hst_metric_too_few_leaves():
    with pytest.raises(TooFewLeaves):
        hst_metric(hst(node(1, leaf(0))))


def test_separation_examples():
    assert hst_separation(star(4)) == math.inf
    assert hst_separation(hst(node(8, leaf(0), node(4, leaf(1), leaf(2))))) == 2
    assert hst_separation(hst(node(4, leaf(0), node(1, leaf(1), leaf(2))))) == 4


def test_outdegree_examples():
    assert max_outdegree(star(5)) == 5 and not is_binary(star(5))
    cb = complete_tree(2, 3, 2.0)
    assert max_outdegree(cb) == 2 and is_binary(cb)
    assert max_outdegree(star(2)) == 2 and is_binary(star(2))


def test_k_increasing_examples():
    assert is_k_increasing(star(4))
    assert not is_k_increasing(complete_tree(2, 2, 2.0))
    assert is_k_increasing(caterpillar((8, 4, 2, 1)))


def test_canonicalization_collapses_unary_chains():
    T = hst(node(8, node(4, node(2, leaf(0), leaf(1))), leaf(2)))
    assert T.n_leaves == 3
    assert sorted(T.labels[u] for u in T.internal) == [2, 8]


def test_lacunary_metric_examples():
    M = lacunary_metric((1,))
    assert M.n == 2 and M.d(0, 1) == 1
    M = lacunary_metric((4, 1))
    assert M.d(0, 1) == M.d(0, 2) == 4 and M.d(1, 2) == 1
    assert aspect_ratio(lacunary_metric(LacunarySequence((8, 4, 2), 2))) == 4


def test_lacunary_sequence_rejects_violation():
    with pytest.raises(NotLacunary):
        LacunarySequence((4, 3), 2)
    with pytest.raises(NotLacunary):
        lacunary_metric((1, 2))


def test_lacunary_subsequence_examples():
    out = lacunary_subsequence(LacunarySequence((16, 8, 4, 2, 1), 2), 4)
    assert out.values == (16, 2) and out.k == 4
    assert len(out) >= math.ceil(5 / 3)
    assert lacunary_subsequence(LacunarySequence((5,), 2), 4).values == (5,)
    out = lacunary_subsequence(LacunarySequence((9, 3, 1), 3), 9)
    assert out.values == (9,)
    with pytest.raises(BadParameters):
        lacunary_subsequence(LacunarySequence((4, 2), 2), 2)
    with pytest.raises(BadParameters):
        lacunary_subsequence(LacunarySequence((4, 2), 1), 3)


def test_binary_subtree_examples():
    cb = complete_tree(2, 3, 2.0)
    assert binary_subtree(cb) == cb
    t3 = complete_tree(3, 2, 3.0)
    sub = binary_subtree(t3)
    assert sub.n_leaves == 4 == round(binary_subtree_bound(9, 3))
    assert binary_subtree(star(5)).n_leaves == 2
    assert binary_subtree(star(5)).leaf_points() == [0, 1]


def exhaustive_binary(tree: HstTree) -> int:
    """Largest leaf set whose induced subtree is binary, by brute force over leaf subsets."""
    pts = tree.leaf_points()
    for size in range(len(pts), 1, -1):
        for S in itertools.combinations(pts, size):
            if is_binary(tree.restrict(S)):
                return size
    return 1


@given(hst_trees(max_leaves=10, max_children=4))
def test_binary_subtree_optimal_and_bounded(T):
    sub = binary_subtree(T)
    assert is_binary(sub)
    assert sub.n_leaves == exhaustive_binary(T)
    h = max_outdegree(T)
    if h >= 2:
        assert sub.n_leaves >= binary_subtree_bound(T.n_leaves, h) * (1 - 1e-9)


@given(st.integers(2, 64), st.floats(1.5, 6), st.integers(0, 10**6))
def test_binary_khst_triangles_have_large_aspect_ratio(n, k, seed):
    T = random_hst(n, k, seed, max_children=2)
    assert hst_separation(T) >= k * (1 - 1e-9)
    M = hst_metric(T)
    D = M.dist
    for i, j, l in itertools.combinations(range(M.n), 3):
        d = (D[i, j], D[i, l], D[j, l])
        assert max(d) / min(d) >= k * (1 - 1e-9)
    assert aspect_ratio(M) >= k ** (math.log2(M.n) - 1) * (1 - 1e-9)


@given(st.lists(st.floats(0.1, 10), min_size=1, max_size=8), st.floats(1, 4))
def test_lacunary_aspect_ratio_bound(ratios, k):
    vals = [1000.0]
    for r in ratios:
        vals.append(vals[-1] / (k * (1 + r / 10)))
    M = lacunary_metric(LacunarySequence(vals, k))
    assert aspect_ratio(M) >= k ** (M.n - 2) * (1 - 1e-9)
    for S in [list(range(0, M.n, 2)), [0, M.n - 1]]:
        if len(S) >= 2:
            Y = restrict(M, S).induced
            assert aspect_ratio(Y) >= k ** (Y.n - 2) * (1 - 1e-9)


@given(st.integers(1, 12), st.floats(1.1, 3), st.floats(1.01, 4))
def test_lacunary_subsequence_invariant(m, a, factor):
    b = a * factor
    vals = [a ** (m - i) for i in range(m)]
    seq = LacunarySequence(vals, a)
    out = lacunary_subsequence(seq, b)
    s = math.ceil(1 + math.log(b, a) - 1e-9)
    assert len(out) >= math.ceil(m / s)
    for x, y in zip(out.values, out.values[1:]):
        assert y <= x / b * (1 + 1e-9)


def test_json_roundtrip_and_canonical_order():
    T = hst(node(4, node(1, leaf("c"), leaf("b")), leaf("a")))
    obj = T.to_json()
    assert obj["format"] == "hst-v1"
    assert HstTree.from_json(obj) == T
    assert T.to_dict()["children"][0] == {"point": "a"}
