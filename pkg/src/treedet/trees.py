"""Finite trees and graphs: construction, parsing, rooted views, balls, generators.

Vertices are dense integers ``0..n-1``.  Sub-windows (balls) carry an ``ids``
table mapping local ids back to the host graph.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

from .config import CapExceeded, current_caps


class TreeError(ValueError):
    """Invalid tree/graph input."""


@dataclass(frozen=True)
class Graph:
    n: int
    edges: tuple[tuple[int, int], ...]
    adj: tuple[tuple[int, ...], ...] = field(repr=False, compare=False)

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Sequence[int]]):
        if n < 1:
            raise TreeError("a graph needs at least one vertex")
        nbrs: list[list[int]] = [[] for _ in range(n)]
        seen: set[tuple[int, int]] = set()
        norm = []
        for u, v in edges:
            u, v = int(u), int(v)
            if not (0 <= u < n and 0 <= v < n):
                raise TreeError(f"edge ({u}, {v}) has an id outside 0..{n - 1}")
            if u == v:
                raise TreeError(f"self-loop at {u}")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise TreeError(f"duplicate edge {key}")
            seen.add(key)
            norm.append(key)
            nbrs[u].append(v)
            nbrs[v].append(u)
        g = cls(n, tuple(norm), tuple(tuple(sorted(a)) for a in nbrs))
        g._validate()
        return g

    def _validate(self) -> None:
        pass

    def degree(self, v: int) -> int:
        return len(self.adj[v])

    @property
    def degrees(self) -> list[int]:
        return [len(a) for a in self.adj]

    @property
    def max_degree(self) -> int:
        return max(self.degrees)

    def distances(self, o: int) -> list[int]:
        """BFS distances from ``o``; unreachable vertices get -1."""
        dist = [-1] * self.n
        dist[o] = 0
        q = deque([o])
        while q:
            x = q.popleft()
            for y in self.adj[x]:
                if dist[y] < 0:
                    dist[y] = dist[x] + 1
                    q.append(y)
        return dist

    def is_connected(self) -> bool:
        return min(self.distances(0)) >= 0

    def diameter(self) -> int:
        if isinstance(self, Tree):
            # double sweep is exact on trees
            d0 = self.distances(0)
            far = int(np.argmax(d0))
            return max(self.distances(far))
        return max(max(self.distances(o)) for o in range(self.n))

    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.n, self.n))
        for u, v in self.edges:
            a[u, v] = a[v, u] = 1.0
        return a

    def to_text(self) -> str:
        lines = [str(self.n)] + [f"{u} {v}" for u, v in self.edges]
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class Tree(Graph):
    """A finite tree; construction rejects cycles and disconnected input."""

    def _validate(self) -> None:
        if len(self.edges) != self.n - 1:
            raise TreeError(f"a tree on {self.n} vertices needs {self.n - 1} edges, got {len(self.edges)}")
        if not self.is_connected():
            raise TreeError("edge set is not connected")


@dataclass(frozen=True)
class RootedTree:
    tree: Tree
    root: int
    parent: tuple[int | None, ...]
    depth: tuple[int, ...]
    order: tuple[int, ...]  # BFS order, root first
    children: tuple[tuple[int, ...], ...] = field(repr=False)

    @property
    def n(self) -> int:
        return self.tree.n

    def path_from_root(self, x: int) -> list[int]:
        path = [x]
        while self.parent[path[-1]] is not None:
            path.append(self.parent[path[-1]])
        return path[::-1]


@dataclass(frozen=True)
class Bipartition:
    S: frozenset[int]
    T: frozenset[int]

    def side(self, v: int) -> str:
        return "S" if v in self.S else "T"

    def swapped(self) -> "Bipartition":
        return Bipartition(self.T, self.S)

    def check(self, graph: Graph) -> None:
        if self.S & self.T or len(self.S) + len(self.T) != graph.n:
            raise TreeError("S and T must partition the vertex set")
        for u, v in graph.edges:
            if (u in self.S) == (v in self.S):
                raise TreeError(f"edge ({u}, {v}) is not properly coloured")


def parse_tree(text: str) -> Tree:
    """Parse the edge-list format: ``n`` on the first line, then ``u v`` per edge.

    Blank lines and ``#`` comments are ignored.  Errors name the offending line.
    """
    rows = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        s = raw.split("#", 1)[0].strip()
        if s:
            rows.append((lineno, s))
    if not rows:
        raise TreeError("empty input: expected vertex count on the first line")
    lineno, head = rows[0]
    try:
        n = int(head)
    except ValueError:
        raise TreeError(f"line {lineno}: expected vertex count, got {head!r}") from None
    if n < 1:
        raise TreeError(f"line {lineno}: vertex count must be >= 1")

    # union-find to locate the first cycle-closing edge
    root = list(range(n))

    def find(x):
        while root[x] != x:
            root[x] = root[root[x]]
            x = root[x]
        return x

    edges = []
    seen = set()
    for lineno, s in rows[1:]:
        parts = s.split()
        if len(parts) != 2:
            raise TreeError(f"line {lineno}: expected 'u v', got {s!r}")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise TreeError(f"line {lineno}: non-integer vertex id in {s!r}") from None
        if not (0 <= u < n and 0 <= v < n):
            raise TreeError(f"line {lineno}: vertex id out of range 0..{n - 1}")
        if u == v:
            raise TreeError(f"line {lineno}: self-loop at {u}")
        key = (min(u, v), max(u, v))
        if key in seen:
            raise TreeError(f"line {lineno}: duplicate edge {u} {v}")
        if len(edges) >= n - 1:
            raise TreeError(f"line {lineno}: edge count exceeds n-1 = {n - 1}")
        ru, rv = find(u), find(v)
        if ru == rv:
            raise TreeError(f"line {lineno}: edge {u} {v} closes a cycle")
        root[ru] = rv
        seen.add(key)
        edges.append((u, v))
    if len(edges) < n - 1:
        raise TreeError(f"line {rows[-1][0]}: only {len(edges)} edges for n = {n}; graph is disconnected")
    return Tree.from_edges(n, edges)


def parse_graph(text: str) -> Graph:
    """Edge-list parser that accepts cycles; used for windowed projections.

    A connected input with n-1 edges comes back as a ``Tree``.
    """
    rows = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        s = raw.split("#", 1)[0].strip()
        if s:
            rows.append((lineno, s))
    if not rows:
        raise TreeError("empty input: expected vertex count on the first line")
    lineno, head = rows[0]
    try:
        n = int(head)
    except ValueError:
        raise TreeError(f"line {lineno}: expected vertex count, got {head!r}") from None
    if n < 1:
        raise TreeError(f"line {lineno}: vertex count must be >= 1")
    edges = []
    for lineno, s in rows[1:]:
        parts = s.split()
        try:
            u, v = (int(t) for t in parts)
        except ValueError:
            raise TreeError(f"line {lineno}: expected 'u v', got {s!r}") from None
        if not (0 <= u < n and 0 <= v < n) or u == v:
            raise TreeError(f"line {lineno}: bad edge {u} {v} for n = {n}")
        edges.append((u, v))
    g = Graph.from_edges(n, edges)
    if len(g.edges) == n - 1 and g.is_connected():
        return Tree.from_edges(n, g.edges)
    return g


def root_at(tree: Tree, o: int) -> RootedTree:
    if not 0 <= o < tree.n:
        raise TreeError(f"root {o} outside 0..{tree.n - 1}")
    parent: list[int | None] = [None] * tree.n
    depth = [-1] * tree.n
    depth[o] = 0
    order = [o]
    kids: list[list[int]] = [[] for _ in range(tree.n)]
    head = 0
    while head < len(order):
        x = order[head]
        head += 1
        for y in tree.adj[x]:
            if depth[y] < 0:
                depth[y] = depth[x] + 1
                parent[y] = x
                kids[x].append(y)
                order.append(y)
    return RootedTree(tree, o, tuple(parent), tuple(depth), tuple(order), tuple(tuple(k) for k in kids))


def bipartition_by_parity(rooted: RootedTree, root_class: str = "S") -> Bipartition:
    """Two-colouring by depth parity; the root lands in ``root_class``."""
    if root_class not in ("S", "T"):
        raise ValueError("root_class must be 'S' or 'T'")
    even = frozenset(v for v in range(rooted.n) if rooted.depth[v] % 2 == 0)
    odd = frozenset(range(rooted.n)) - even
    return Bipartition(even, odd) if root_class == "S" else Bipartition(odd, even)


def ball(graph: Graph, o: int, r: int) -> tuple[Graph, tuple[int, ...]]:
    """Induced subgraph on vertices within distance ``r`` of ``o``.

    Returns ``(sub, ids)`` with ``ids[local] = host id``; ``o`` is local vertex 0
    and the remaining ids are in BFS order.
    """
    if r < 0:
        raise ValueError("radius must be >= 0")
    dist = {o: 0}
    order = [o]
    head = 0
    while head < len(order):
        x = order[head]
        head += 1
        if dist[x] == r:
            continue
        for y in graph.adj[x]:
            if y not in dist:
                dist[y] = dist[x] + 1
                order.append(y)
    local = {v: i for i, v in enumerate(order)}
    sub_edges = [(local[u], local[v]) for u, v in graph.edges if u in local and v in local]
    cls = Tree if isinstance(graph, Tree) else Graph
    return cls.from_edges(len(order), sub_edges), tuple(order)


# ---------------------------------------------------------------- generators

def _guard(count: int, cap: int | None) -> None:
    cap = current_caps().max_vertices if cap is None else cap
    if count > cap:
        raise CapExceeded(f"tree would have {count} vertices, above cap {cap}")


def _grow(n_children, depth_max: int, cap: int | None) -> RootedTree:
    """Build a rooted tree level by level; ``n_children(depth)`` fixes the branching."""
    total, width = 1, 1
    for dpt in range(depth_max):
        width *= n_children(dpt)
        total += width
    _guard(total, cap)
    edges = []
    frontier = [0]
    nxt_id = 1
    for dpt in range(depth_max):
        k = n_children(dpt)
        new = []
        for x in frontier:
            for _ in range(k):
                edges.append((x, nxt_id))
                new.append(nxt_id)
                nxt_id += 1
        frontier = new
    return root_at(Tree.from_edges(nxt_id, edges), 0)


def gen_kary(k: int, n: int, cap: int | None = None) -> RootedTree:
    """Complete k-ary tree of depth n (root has k children, leaves at depth n)."""
    if k < 2 or n < 0:
        raise ValueError("need k >= 2 and depth >= 0")
    return _grow(lambda d: k, n, cap)


def gen_regular_ball(d: int, n: int, cap: int | None = None) -> RootedTree:
    """Ball of radius n in the d-regular tree."""
    if d < 3 or n < 0:
        raise ValueError("need d >= 3 and radius >= 0")
    return _grow(lambda dpt: d if dpt == 0 else d - 1, n, cap)


def gen_alternating(n: int, cap: int | None = None) -> RootedTree:
    """Even-depth vertices get one child, odd-depth vertices two; truncated at depth n."""
    if n < 0:
        raise ValueError("depth must be >= 0")
    return _grow(lambda dpt: 1 if dpt % 2 == 0 else 2, n, cap)


def gen_path(n: int, cap: int | None = None) -> Tree:
    if n < 1:
        raise TreeError("a path needs at least one vertex")
    _guard(n, cap)
    return Tree.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def gen_star(leaves: int) -> Tree:
    return Tree.from_edges(leaves + 1, [(0, i) for i in range(1, leaves + 1)])


def random_tree(n: int, rng: np.random.Generator) -> Tree:
    """Uniform labelled tree via a random Pruefer sequence."""
    if n <= 2:
        return gen_path(n)
    seq = rng.integers(0, n, size=n - 2)
    degree = np.ones(n, dtype=int)
    for x in seq:
        degree[x] += 1
    import heapq
    leaves = [i for i in range(n) if degree[i] == 1]
    heapq.heapify(leaves)
    edges = []
    for x in seq:
        leaf = heapq.heappop(leaves)
        edges.append((leaf, int(x)))
        degree[x] -= 1
        if degree[x] == 1:
            heapq.heappush(leaves, int(x))
    u, v = heapq.heappop(leaves), heapq.heappop(leaves)
    edges.append((u, v))
    return Tree.from_edges(n, edges)


def random_graph(n: int, extra_edges: int, rng: np.random.Generator) -> Graph:
    """Random connected graph: a random tree plus ``extra_edges`` random chords."""
    base = random_tree(n, rng)
    have = set(base.edges)
    edges = list(base.edges)
    max_extra = n * (n - 1) // 2 - len(edges)
    want = min(extra_edges, max_extra)
    while want > 0:
        u, v = (int(t) for t in rng.integers(0, n, size=2))
        key = (min(u, v), max(u, v))
        if u != v and key not in have:
            have.add(key)
            edges.append(key)
            want -= 1
    return Graph.from_edges(n, edges)


def free_trees(n: int) -> Iterator[Tree]:
    """All unlabelled trees on n vertices, one representative each."""
    if n == 1:
        yield Tree.from_edges(1, [])
        return
    if n == 2:
        yield gen_path(2)
        return
    import networkx as nx
    for g in nx.nonisomorphic_trees(n):
        yield Tree.from_edges(n, list(g.edges()))


def tree_catalog(n_max: int) -> list[Tree]:
    return [t for n in range(1, n_max + 1) for t in free_trees(n)]
