"""Exact matching combinatorics on trees.

Counting is done by the usual two-state tree DP (root free / unconstrained).
Above ``Caps.exact_count_threshold`` vertices, counts are carried as natural
logs instead of Python integers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator

import numpy as np

from .config import CapExceeded, current_caps
from .laws import SubsetLaw
from .trees import Bipartition, RootedTree, Tree, root_at


class ReconstructionError(ValueError):
    """No matching has the requested uncovered set."""

    def __init__(self, vertex: int, reason: str):
        super().__init__(f"vertex {vertex}: {reason}")
        self.vertex = vertex


@dataclass(frozen=True)
class Matching:
    partner: tuple[int | None, ...]

    @classmethod
    def from_edges(cls, n: int, edges) -> "Matching":
        partner: list[int | None] = [None] * n
        for u, v in edges:
            if partner[u] is not None or partner[v] is not None:
                raise ValueError(f"edge ({u}, {v}) reuses a matched vertex")
            partner[u], partner[v] = v, u
        return cls(tuple(partner))

    @property
    def n(self) -> int:
        return len(self.partner)

    @property
    def edges(self) -> tuple[tuple[int, int], ...]:
        return tuple((u, v) for u, v in enumerate(self.partner) if v is not None and u < v)

    @property
    def size(self) -> int:
        return sum(p is not None for p in self.partner) // 2

    def is_valid_for(self, tree: Tree) -> bool:
        if self.n != tree.n:
            return False
        for u, v in enumerate(self.partner):
            if v is not None and (self.partner[v] != u or v not in tree.adj[u]):
                return False
        return True


def uncovered(matching: Matching) -> frozenset[int]:
    return frozenset(v for v, p in enumerate(matching.partner) if p is None)


def delta(matching: Matching, bip: Bipartition) -> frozenset[int]:
    """Symmetric difference of the uncovered set with the T class."""
    return uncovered(matching) ^ bip.T


def enumerate_matchings(tree: Tree, cap: int | None = None) -> Iterator[Matching]:
    """Every matching of ``tree`` exactly once (exponential; capped)."""
    cap = current_caps().enum_cap if cap is None else cap
    if tree.n > cap:
        raise CapExceeded(f"enumeration needs n <= {cap}, got {tree.n}")
    n = tree.n
    partner: list[int | None] = [None] * n

    def rec(v: int):
        while v < n and partner[v] is not None:
            v += 1
        if v == n:
            yield Matching(tuple(partner))
            return
        yield from rec(v + 1)
        for w in tree.adj[v]:
            if w > v and partner[w] is None:
                partner[v], partner[w] = w, v
                yield from rec(v + 1)
                partner[v] = partner[w] = None

    yield from rec(0)


# ------------------------------------------------------------ polynomial

@dataclass(frozen=True)
class MatchingPolynomial:
    """``coeff[j]`` = number of matchings leaving exactly j vertices uncovered.

    In log mode ``coeff`` is None and ``log_coeff[j]`` holds log c_j
    (``-inf`` for zero coefficients).
    """

    n: int
    coeff: tuple[int, ...] | None
    log_coeff: tuple[float, ...] | None = None

    @property
    def exact(self) -> bool:
        return self.coeff is not None

    def _nonzero(self) -> list[int]:
        if self.exact:
            return [j for j, c in enumerate(self.coeff) if c]
        return [j for j, c in enumerate(self.log_coeff) if c > -math.inf]

    @property
    def nu(self) -> int:
        return (self.n - min(self._nonzero())) // 2

    @property
    def mm(self) -> int:
        if not self.exact:
            raise ValueError("log-mode polynomial has no exact coefficients")
        return self.coeff[self.n - 2 * self.nu]

    @property
    def log_mm(self) -> float:
        j = self.n - 2 * self.nu
        return math.log(self.coeff[j]) if self.exact else self.log_coeff[j]

    def total(self) -> int:
        """Number of matchings, P(1)."""
        return sum(self.coeff)

    def evaluate(self, z):
        if self.exact:
            return sum(c * z**j for j, c in enumerate(self.coeff) if c)
        lz = math.log(z)
        return math.exp(_logsumexp([c + j * lz for j, c in enumerate(self.log_coeff)]))

    def log_evaluate(self, z: float) -> float:
        lz = math.log(z)
        if self.exact:
            return _logsumexp([_log_int(c) + j * lz for j, c in enumerate(self.coeff) if c])
        return _logsumexp([c + j * lz for j, c in enumerate(self.log_coeff)])


def _log_int(x: int) -> float:
    # math.log handles arbitrarily large ints
    return math.log(x)


def _logsumexp(vals) -> float:
    vals = [v for v in vals if v > -math.inf]
    if not vals:
        return -math.inf
    m = max(vals)
    return m + math.log(sum(math.exp(v - m) for v in vals))


def _log_convolve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if len(a) > len(b):
        a, b = b, a
    out = np.full(len(a) + len(b) - 1, -np.inf)
    q = len(b)
    for i, ai in enumerate(a):
        if ai > -np.inf:
            out[i:i + q] = np.logaddexp(out[i:i + q], ai + b)
    return out


def matching_polynomial(tree: Tree, exact: bool | None = None) -> MatchingPolynomial:
    """Matching polynomial by a bottom-up DP over (root free, root covered) pairs."""
    if exact is None:
        exact = tree.n <= current_caps().exact_count_threshold
    rt = root_at(tree, 0)
    free: list = [None] * tree.n  # poly of subtree with v uncovered
    covered: list = [None] * tree.n
    if exact:
        one, zero = np.array([1], dtype=object), np.array([0], dtype=object)
        conv, add = np.convolve, _poly_add
    else:
        one, zero = np.array([0.0]), np.array([-np.inf])
        conv, add = _log_convolve, _log_poly_add
    for v in reversed(rt.order):
        prod_all, cov = one, zero
        for c in rt.children[v]:
            f_c = add(free[c], covered[c])
            # v matched to c: c's own factor of z drops out
            cov = add(conv(cov, f_c), conv(prod_all, free[c][1:]))
            prod_all = conv(prod_all, f_c)
            free[c] = covered[c] = None
        free[v] = np.concatenate([zero, prod_all])
        covered[v] = cov
    poly = add(free[0], covered[0])
    poly = np.concatenate([poly, zero.repeat(tree.n + 1 - len(poly))])[: tree.n + 1]
    if exact:
        return MatchingPolynomial(tree.n, tuple(int(c) for c in poly))
    return MatchingPolynomial(tree.n, None, tuple(float(c) for c in poly))


def _poly_add(a, b):
    if len(a) < len(b):
        a, b = b, a
    out = a.copy()
    out[: len(b)] += b
    return out


def _log_poly_add(a, b):
    if len(a) < len(b):
        a, b = b, a
    out = a.copy()
    out[: len(b)] = np.logaddexp(out[: len(b)], b)
    return out


# ------------------------------------------------------ maximum matchings

@dataclass(frozen=True)
class MaxMatchingStats:
    nu: int
    mm: int | None
    log_mm: float


class _Exact:
    one = 1

    @staticmethod
    def mul(a, b):
        return a * b

    @staticmethod
    def div(a, b):
        return a // b

    @staticmethod
    def add(a, b):
        return a + b

    @staticmethod
    def ratio(a, b) -> float:
        return a / b


class _Log:
    one = 0.0

    @staticmethod
    def mul(a, b):
        return a + b

    @staticmethod
    def div(a, b):
        return a - b

    @staticmethod
    def add(a, b):
        return float(np.logaddexp(a, b))

    @staticmethod
    def ratio(a, b) -> float:
        return math.exp(a - b)


def _count_tables(rt: RootedTree, exact: bool):
    """Per vertex: (size, count) of max matchings with v free, overall best,
    and the list of optimal choices (``-1`` = free, else the matched child)."""
    ar = _Exact if exact else _Log
    n = rt.n
    free = [None] * n
    best = [None] * n
    choices = [None] * n
    for v in reversed(rt.order):
        kids = rt.children[v]
        s_all = sum(best[c][0] for c in kids)
        p_all = ar.one
        for c in kids:
            p_all = ar.mul(p_all, best[c][1])
        opts = [(-1, s_all, p_all)]
        for c in kids:
            size = 1 + free[c][0] + s_all - best[c][0]
            cnt = ar.mul(free[c][1], ar.div(p_all, best[c][1]))
            opts.append((c, size, cnt))
        top = max(o[1] for o in opts)
        keep = [o for o in opts if o[1] == top]
        tot = keep[0][2]
        for o in keep[1:]:
            tot = ar.add(tot, o[2])
        free[v] = (s_all, p_all)
        best[v] = (top, tot)
        choices[v] = [(o[0], ar.ratio(o[2], tot)) for o in keep]
    return free, best, choices


def max_matching_stats(tree: Tree, exact: bool | None = None) -> MaxMatchingStats:
    """Maximum matching size and the number of maximum matchings (linear-time DP)."""
    if exact is None:
        exact = tree.n <= current_caps().exact_count_threshold
    _, best, _ = _count_tables(root_at(tree, 0), exact)
    nu, cnt = best[0]
    if exact:
        return MaxMatchingStats(nu, cnt, math.log(cnt))
    return MaxMatchingStats(nu, None, cnt)


def uncovered_probability(tree: Tree, v: int) -> Fraction:
    """P(v uncovered) under the uniform maximum matching, as an exact ratio of counts."""
    free, best, _ = _count_tables(root_at(tree, v), exact=True)
    if free[v][0] < best[v][0]:
        return Fraction(0)
    return Fraction(free[v][1], best[v][1])


# ----------------------------------------------------------------- samplers

class _TopDownSampler:
    """Shared top-down draw: each vertex not matched from above picks an option."""

    def __init__(self, rt: RootedTree, options):
        self.rt = rt
        self.targets = []
        self.cum = []
        for v in range(rt.n):
            tg = [t for t, _ in options[v]]
            pr = np.array([p for _, p in options[v]], dtype=float)
            c = np.cumsum(pr / pr.sum())
            c[-1] = 1.0
            self.targets.append(tg)
            self.cum.append(c)

    def sample(self, rng: np.random.Generator) -> Matching:
        n = self.rt.n
        partner: list[int | None] = [None] * n
        taken = [False] * n
        u = rng.random(n)
        for v in self.rt.order:
            if taken[v]:
                continue
            tg = self.targets[v]
            k = 0 if len(tg) == 1 else int(np.searchsorted(self.cum[v], u[v], side="right"))
            t = tg[min(k, len(tg) - 1)]
            if t >= 0:
                partner[v], partner[t] = t, v
                taken[t] = True
        return Matching(tuple(partner))

    def sample_many(self, count: int, seed: int | None = None) -> list[Matching]:
        rng = np.random.default_rng(seed)
        return [self.sample(rng) for _ in range(count)]


class UniformMaxMatchingSampler(_TopDownSampler):
    def __init__(self, tree: Tree, exact: bool | None = None):
        if exact is None:
            exact = tree.n <= current_caps().exact_count_threshold
        rt = root_at(tree, 0)
        _, _, choices = _count_tables(rt, exact)
        super().__init__(rt, choices)


class BoltzmannSampler(_TopDownSampler):
    """Monomer-dimer sampler, P(M) proportional to z^{#uncovered}.

    Works with the ratios m_v = P(v free in its subtree), so no partition
    function is ever formed and nothing under/overflows.
    """

    def __init__(self, tree: Tree, z: float):
        if not z > 0:
            raise ValueError(f"temperature must be positive, got {z}")
        rt = root_at(tree, 0)
        z2 = float(z) ** 2
        m = [0.0] * tree.n
        options = [None] * tree.n
        for v in reversed(rt.order):
            kids = rt.children[v]
            den = z2 + sum(m[c] for c in kids)
            m[v] = z2 / den
            options[v] = [(-1, z2 / den)] + [(c, m[c] / den) for c in kids]
        self.m = m
        super().__init__(rt, options)


def sample_uniform_max_matching(tree: Tree, seed: int | None = None) -> Matching:
    return UniformMaxMatchingSampler(tree).sample(np.random.default_rng(seed))


def sample_boltzmann(tree: Tree, z: float, seed: int | None = None) -> Matching:
    return BoltzmannSampler(tree, z).sample(np.random.default_rng(seed))


# ------------------------------------------------------------ reconstruction

def reconstruct_matching(tree: Tree, U) -> Matching:
    """The unique matching with uncovered set ``U``, by leaf peeling.

    Leaves are processed in ascending id.  A leaf in U is deleted; a leaf
    outside U must be matched to its remaining neighbour.
    """
    import heapq

    U = set(U)
    n = tree.n
    bad = [u for u in U if not 0 <= u < n]
    if bad:
        raise ReconstructionError(min(bad), "not a vertex of the tree")
    alive = [True] * n
    deg = [len(a) for a in tree.adj]
    partner: list[int | None] = [None] * n
    heap = [v for v in range(n) if deg[v] <= 1]
    heapq.heapify(heap)

    def remove(x):
        alive[x] = False
        for y in tree.adj[x]:
            if alive[y]:
                deg[y] -= 1
                if deg[y] == 1:
                    heapq.heappush(heap, y)
                elif deg[y] == 0:
                    heapq.heappush(heap, y)

    while heap:
        x = heapq.heappop(heap)
        if not alive[x]:
            continue
        if x in U:
            remove(x)
            continue
        nb = [y for y in tree.adj[x] if alive[y]]
        if not nb:
            raise ReconstructionError(x, "must be covered but has no free neighbour")
        y = nb[0]
        if y in U:
            raise ReconstructionError(x, f"must be matched to {y}, which is required to be uncovered")
        partner[x], partner[y] = y, x
        remove(x)
        remove(y)
    return Matching(tuple(partner))


# ------------------------------------------------------------- exact laws

def _exactify(z):
    if isinstance(z, (int, Fraction)):
        return Fraction(z)
    return Fraction(str(z))


def exact_uncovered_law(tree: Tree, exact: bool = False, cap: int | None = None) -> SubsetLaw:
    """Law of U(M) for a uniform maximum matching M, by full enumeration."""
    ms = list(enumerate_matchings(tree, cap))
    nu = max(m.size for m in ms)
    w = Fraction(1) if exact else 1.0
    return SubsetLaw.from_weights(range(tree.n), {uncovered(m): w for m in ms if m.size == nu})


def exact_delta_law(tree: Tree, bip: Bipartition, z, exact: bool = False, cap: int | None = None) -> SubsetLaw:
    """Law of Delta(M) for the Boltzmann matching at temperature z, by enumeration."""
    if not z > 0:
        raise ValueError("temperature must be positive")
    cap = current_caps().boltzmann_enum_cap if cap is None else cap
    zz = _exactify(z) if exact else float(z)
    weights = {}
    for m in enumerate_matchings(tree, cap):
        k = delta(m, bip)
        weights[k] = weights.get(k, 0) + zz ** (tree.n - 2 * m.size)
    return SubsetLaw.from_weights(range(tree.n), weights)


def exact_matching_law(tree: Tree, z=None, cap: int | None = None) -> dict[Matching, float]:
    """Law of the matching itself: uniform maximum (z=None) or Boltzmann at z."""
    ms = list(enumerate_matchings(tree, cap))
    if z is None:
        nu = max(m.size for m in ms)
        ms = [m for m in ms if m.size == nu]
        return {m: 1.0 / len(ms) for m in ms}
    w = {m: float(z) ** (tree.n - 2 * m.size) for m in ms}
    tot = sum(w.values())
    return {m: x / tot for m, x in w.items()}
