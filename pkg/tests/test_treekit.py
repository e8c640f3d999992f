from itertools import combinations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zfx import treekit as tk
from zfx.errors import InvalidArgumentError, ResourceLimitError


def test_complete_tree_sizes():
    assert len(tk.complete_tree(0)) == 1
    t1 = tk.complete_tree(1)
    assert tk.to_string(t1) == "(1,2)"
    t3 = tk.complete_tree(3)
    assert len(t3) == 8 and len(t3.internal_nodes()) == 7
    assert t3.edge_count() == 2 * 8 - 2


def test_complete_tree_guard():
    with pytest.raises(ResourceLimitError):
        tk.complete_tree(31)


def test_leaf_generated_examples():
    T = tk.complete_tree(2)
    assert tk.leaf_generated_subtree(T, T.leaf_labels()) == T
    assert tk.to_string(tk.leaf_generated_subtree(T, [3])) == "3"
    assert tk.to_string(tk.leaf_generated_subtree(T, [1, 3])) == "(1,3)"
    with pytest.raises(InvalidArgumentError):
        tk.leaf_generated_subtree(T, [])


def _ancestors(T):
    par = T.parents()

    def up(ident):
        out = [ident]
        while out[-1] in par:
            out.append(par[out[-1]][0].ident)
        return out
    return up


def brute_closure(T, X):
    """Idents of the LCA closure of X, from ancestor lists."""
    up = _ancestors(T)
    by_label = T.leaf_by_label()
    nodes = {by_label[x].ident for x in X}
    while True:
        new = set(nodes)
        for a, b in combinations(sorted(nodes), 2):
            ua, ub = up(a), set(up(b))
            new.add(next(v for v in ua if v in ub))
        if new == nodes:
            return nodes
        nodes = new


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 4), st.data())
def test_leaf_generated_matches_closure(depth, data):
    T = tk.complete_tree(depth)
    X = data.draw(st.sets(st.sampled_from(T.leaf_labels()), min_size=1))
    sub = tk.leaf_generated_subtree(T, X)
    assert {nd.ident for nd in sub.nodes()} == brute_closure(T, X)
    assert sub.leaf_labels() == tuple(sorted(X))


def test_restricted_tree_examples():
    T = tk.complete_tree(2)
    assert tk.restricted_tree(T, "****") == T
    assert len(tk.restricted_tree(T, "0010")) == 1
    assert tk.to_string(tk.restricted_tree(T, "10*0")) == "(1,3)"
    with pytest.raises(InvalidArgumentError):
        tk.restricted_tree(T, "0000")


def test_classification_examples():
    c = tk.classify_leaves(tk.complete_tree(1))
    assert len(c.twins) == 2 and not c.lone_leaves
    cat = tk.from_string("(1,(2,3))")
    c = tk.classify_leaves(cat)
    assert c.lone_leaves == {1} and c.twins == {2, 3} and c.twin_pairs == ((2, 3),)
    c = tk.classify_leaves(tk.complete_tree(2))
    assert len(c.twins) == 4 and not c.lone_leaves


def test_skeleton_examples():
    T = tk.complete_tree(3)
    assert tk.skeleton(T) == T
    for k in range(2, 7):
        sk = tk.skeleton(tk.caterpillar(k))
        assert len(sk) == 2
    with pytest.raises(InvalidArgumentError):
        tk.skeleton(tk.complete_tree(0))


def test_decomposition_examples():
    dec = tk.skeleton_decomposition(tk.caterpillar(4))
    assert len(dec.skeleton) == 2
    assert len(dec.root_chain) == 2 and dec.edge_attachments == {}
    # a lone leaf hanging off the inner edge above the left twin pair
    T = tk.from_string("((1,(2,3)),(4,5))")
    dec = tk.skeleton_decomposition(T)
    assert dec.attachment_count() == 1
    assert sorted(len(v) for v in dec.edge_attachments.values()) == [0, 1]
    assert tk.reassemble(dec) == T


def test_inner_edges_count():
    # edges between internal nodes: (2|T| - 2) - |T|
    sk = tk.complete_tree(3)
    assert len(tk.inner_edges(sk)) == len(sk) - 2


def random_tree(draw, k):
    shapes = list(tk.all_shapes(k))
    return draw(st.sampled_from(shapes))


@settings(max_examples=80, deadline=None)
@given(st.integers(2, 7), st.data())
def test_classification_invariants(k, data):
    T = random_tree(data.draw, k)
    c = tk.classify_leaves(T)
    leaves = set(T.leaf_labels())
    assert c.twins | c.lone_leaves == leaves and not (c.twins & c.lone_leaves)
    assert len(c.lone_leaves) <= k - 2
    par = T.parents()
    by_label = T.leaf_by_label()
    for a, b in c.twin_pairs:
        assert par[by_label[a].ident][0] is par[by_label[b].ident][0]


@settings(max_examples=80, deadline=None)
@given(st.integers(2, 8), st.data())
def test_reassembly_roundtrip(k, data):
    T = random_tree(data.draw, k)
    dec = tk.skeleton_decomposition(T)
    assert tk.reassemble(dec) == T
    assert dec.attachment_count() == len(tk.classify_leaves(T).lone_leaves)


def test_string_roundtrip_and_shape_count():
    # Catalan numbers count the shapes
    assert [sum(1 for _ in tk.all_shapes(k)) for k in range(1, 7)] == [1, 1, 2, 5, 14, 42]
    for T in tk.all_shapes(5):
        assert tk.from_string(tk.to_string(T)) == T


def test_from_string_rejects_bad_input():
    with pytest.raises(InvalidArgumentError):
        tk.from_string("(1,1)")
    with pytest.raises(InvalidArgumentError):
        tk.from_string("(1,2")
