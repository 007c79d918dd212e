from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings

from strategies import trees
from treedet.config import CapExceeded
from treedet.trees import (
    Bipartition,
    Graph,
    Tree,
    TreeError,
    ball,
    bipartition_by_parity,
    gen_alternating,
    gen_kary,
    gen_path,
    gen_regular_ball,
    gen_star,
    parse_graph,
    parse_tree,
    root_at,
    tree_catalog,
)


def test_parse_roundtrip_p3():
    t = parse_tree("3\n0 1\n1 2\n")
    assert t.n == 3 and t.edges == ((0, 1), (1, 2))
    assert parse_tree(t.to_text()) == t


def test_parse_ignores_comments_and_blank_lines():
    t = parse_tree("# a star\n4\n\n0 1  # first\n0 2\n0 3\n")
    assert t.degree(0) == 3


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("", "empty input"),
        ("x\n", "line 1"),
        ("0\n", "vertex count"),
        ("3\n0 1\n1 2\n0 2\n", "line 4: edge count exceeds"),
        ("4\n0 1\n1 2\n2 0\n", "line 4: edge 2 0 closes a cycle"),
        ("3\n0 1\n0 1\n", "line 3: duplicate edge"),
        ("3\n0 1\n1 5\n", "line 3: vertex id out of range"),
        ("4\n0 1\n2 3\n", "disconnected"),
        ("3\n0 1\n1 1\n", "self-loop"),
        ("3\n0 1 2\n", "expected 'u v'"),
    ],
)
def test_parse_errors_name_the_line(text, fragment):
    with pytest.raises(TreeError, match=fragment):
        parse_tree(text)


def test_parse_graph_accepts_cycles_and_returns_tree_when_possible():
    g = parse_graph("3\n0 1\n1 2\n2 0\n")
    assert type(g) is Graph and len(g.edges) == 3
    assert isinstance(parse_graph("2\n0 1\n"), Tree)
    with pytest.raises(TreeError):
        parse_graph("3\n0 7\n")


def test_tree_rejects_wrong_edge_count():
    with pytest.raises(TreeError):
        Tree.from_edges(3, [(0, 1)])


@pytest.mark.parametrize("k, depth, n", [(2, 0, 1), (2, 1, 3), (2, 3, 15), (3, 2, 13)])
def test_kary_sizes(k, depth, n):
    rt = gen_kary(k, depth)
    assert rt.n == n
    assert max(rt.depth) == depth
    assert all(len(rt.children[x]) in (0, k) for x in range(n))


def test_regular_ball_degrees():
    rt = gen_regular_ball(3, 3)
    assert rt.n == 1 + 3 + 6 + 12
    inner = [v for v in range(rt.n) if rt.depth[v] < 3]
    assert all(rt.tree.degree(v) == 3 for v in inner)


def test_alternating_branching():
    rt = gen_alternating(5)
    assert [len(rt.children[rt.order[0]])] == [1]
    widths = [sum(1 for v in range(rt.n) if rt.depth[v] == d) for d in range(6)]
    assert widths == [1, 1, 2, 2, 4, 4]


def test_path_and_star():
    assert gen_path(1).n == 1
    with pytest.raises(TreeError):
        gen_path(0)
    s = gen_star(4)
    assert s.max_degree == 4 and s.n == 5


def test_generator_cap(monkeypatch):
    with pytest.raises(CapExceeded):
        gen_kary(2, 10, cap=100)
    monkeypatch.setenv("TREEDET_CAP", "50")
    with pytest.raises(CapExceeded):
        gen_path(51)
    assert gen_path(50).n == 50


def test_catalog_counts():
    # numbers of unlabelled trees, OEIS A000055
    counts = [0] * 11
    for t in tree_catalog(10):
        counts[t.n] += 1
    assert counts[1:] == [1, 1, 1, 2, 3, 6, 11, 23, 47, 106]


def test_ball_and_bipartition_on_path():
    p = gen_path(7)
    sub, ids = ball(p, 3, 2)
    assert ids[0] == 3 and sorted(ids) == [1, 2, 3, 4, 5]
    assert sub.n == 5 and len(sub.edges) == 4
    bip = bipartition_by_parity(root_at(p, 3), "S")
    assert bip.S == frozenset({1, 3, 5}) and bip.T == frozenset({0, 2, 4, 6})
    assert bip.swapped().S == bip.T
    with pytest.raises(ValueError):
        Bipartition(frozenset({0, 1}), frozenset({2})).check(gen_path(3))


@settings(max_examples=60, deadline=None)
@given(trees(max_n=30))
def test_random_tree_properties(t):
    assert len(t.edges) == t.n - 1 and t.is_connected()
    assert parse_tree(t.to_text()) == t
    A = t.adjacency()
    assert np.array_equal(A, A.T) and A.sum() == 2 * (t.n - 1)


@settings(max_examples=60, deadline=None)
@given(trees(max_n=20))
def test_rooting_is_consistent(t):
    for o in range(t.n):
        rt = root_at(t, o)
        d = t.distances(o)
        assert list(rt.depth) == d
        for x in range(t.n):
            path = rt.path_from_root(x)
            assert path[0] == o and path[-1] == x and len(path) == d[x] + 1
        bip = bipartition_by_parity(rt)
        bip.check(t)
        assert o in bip.S
