"""Tree fixed-point recursions and the closed-form projection rows they give.

Positive temperature::

    m_x = z^2 / (z^2 + sum_{y child of x} m_y)

Zero temperature::

    m_x = 1 / (1 + sum_{y child of x} (sum_{u child of y} m_u)^{-1})

with 1/0 = inf and 1/inf = 0.  On a finite tree one bottom-up pass evaluates
either system; no iteration or choice among solutions is involved.

Also here: counting recurrences for complete k-ary trees, the canopy-tree
limit series, and the alternating-tree sequence.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .trees import Bipartition, RootedTree


@dataclass(frozen=True)
class RecursionValues:
    rooted: RootedTree = field(repr=False)
    z: float
    m: tuple  # per vertex; Fractions in exact zero-temperature mode
    # zero temperature: sum of children's m (the inner sum); positive z: unused
    child_sum: tuple | None = None
    # sign and log|w| of the path products (positive temperature)
    w_sign: tuple | None = None
    w_log: tuple | None = None
    h: tuple | None = None

    @property
    def w(self) -> np.ndarray:
        return np.array(self.w_sign) * np.exp(np.array(self.w_log))

    def residual(self) -> float:
        """Largest violation of the positive-temperature fixed point."""
        z2 = self.z**2
        kids = self.rooted.children
        return max(abs(self.m[x] - z2 / (z2 + sum(self.m[y] for y in kids[x]))) for x in range(self.rooted.n))


def solve_m_z(rooted: RootedTree, z: float, bip: Bipartition | None = None) -> RecursionValues:
    if z == 0:
        raise ValueError("z = 0 is the zero-temperature system; use solve_m_zero")
    z = float(z)
    z2 = z * z
    n = rooted.n
    m = [0.0] * n
    for x in reversed(rooted.order):
        m[x] = z2 / (z2 + sum(m[y] for y in rooted.children[x]))
    # w_x = z^{-k} prod_{path} m, kept as sign and log-magnitude
    lz = math.log(abs(z))
    zsign = -1 if z < 0 else 1
    wl = [0.0] * n
    ws = [1] * n
    for x in rooted.order:
        p = rooted.parent[x]
        if p is None:
            wl[x], ws[x] = math.log(m[x]), 1
        else:
            wl[x] = wl[p] - lz + math.log(m[x])
            ws[x] = ws[p] * zsign
    h = None
    if bip is not None:
        h = tuple(m[x] if x in bip.S else 1.0 - m[x] for x in range(n))
    return RecursionValues(rooted, z, tuple(m), None, tuple(ws), tuple(wl), h)


_INF = object()  # explicit infinity marker for 1/0


def solve_m_zero(rooted: RootedTree, exact: bool = False) -> RecursionValues:
    n = rooted.n
    zero, one = (Fraction(0), Fraction(1)) if exact else (0.0, 1.0)
    m = [zero] * n
    csum = [zero] * n
    for x in reversed(rooted.order):
        kids = rooted.children[x]
        csum[x] = sum((m[y] for y in kids), zero)
        acc = zero
        infinite = False
        for y in kids:
            inner = csum[y]
            if inner == 0:
                infinite = True  # 1/0 = inf
                break
            acc += one / inner
        # 1/(1+inf) = 0
        m[x] = zero if infinite else one / (one + acc)
    return RecursionValues(rooted, 0.0, tuple(m), tuple(csum))


def _sign_pow(e: int) -> int:
    return -1 if e % 2 else 1


def ptemp_kernel_row(rooted: RootedTree, bip: Bipartition, z: float) -> np.ndarray:
    """Row of the positive-temperature projection at the root, from the recursion."""
    vals = solve_m_z(rooted, z, bip)
    o = rooted.root
    w = vals.w
    row = np.empty(rooted.n)
    for x in range(rooted.n):
        ell = rooted.depth[x]
        if x in bip.S:
            row[x] = _sign_pow(ell // 2) * w[x]
        else:
            row[x] = _sign_pow((ell - 1) // 2) * w[x]
    if o in bip.T:
        row[o] = 1.0 - vals.m[o]
    return row


def zero_w(rooted: RootedTree, vals: RecursionValues | None = None, exact: bool = False) -> list:
    """Path products w_x at even depth (0 at odd depth), with 0/0 = 0."""
    vals = solve_m_zero(rooted, exact) if vals is None else vals
    m, cs = vals.m, vals.child_sum
    zero = Fraction(0) if exact else 0.0
    w = [zero] * rooted.n
    for x in rooted.order:
        ell = rooted.depth[x]
        if ell == 0:
            w[x] = m[x]
        elif ell % 2 == 0:
            p = rooted.parent[x]
            g = rooted.parent[p]
            # m_x = 0 covers the 0/0 case: cs[p] >= m_x
            w[x] = zero if m[x] == 0 else w[g] * m[x] / cs[p]
    return w


def zero_kernel_row(rooted: RootedTree, exact: bool = False) -> list:
    """Row of the kernel projection at the root, from the zero-temperature recursion."""
    w = zero_w(rooted, exact=exact)
    zero = Fraction(0) if exact else 0.0
    row = [zero] * rooted.n
    for x in range(rooted.n):
        ell = rooted.depth[x]
        if ell % 2 == 0:
            row[x] = _sign_pow((ell + 1) // 2) * w[x]
    return row if exact else np.array(row, dtype=float)


# ------------------------------------------------------------ k-ary counts

@dataclass(frozen=True)
class CanopyCount:
    depth: int
    a: int | None  # exact count when small enough
    log_a: float
    vertices: int


def kary_vertices(k: int, depth: int) -> int:
    return (k ** (depth + 1) - 1) // (k - 1)


def canopy_counts(k: int, i_max: int, exact_bits: int = 200_000) -> list[CanopyCount]:
    """a_n = number of maximum matchings of the complete k-ary tree of depth n,
    for n = 1 .. 2*i_max+1, from

        a_1 = k,  a_{2i} = (i+1) a_{2i-1}^k,  a_{2i+1} = k a_{2i-1}^k a_{2i}^{k-1}.

    Exact integers are kept while their size stays under ``exact_bits``.
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    out = [CanopyCount(1, k, math.log(k), kary_vertices(k, 1))]
    a_odd, la_odd = k, math.log(k)
    for i in range(1, i_max + 1):
        la_even = math.log(i + 1) + k * la_odd
        la_next = math.log(k) + k * la_odd + (k - 1) * la_even
        a_even = a_next = None
        if a_odd is not None and la_next / math.log(2) < exact_bits:
            a_even = (i + 1) * a_odd**k
            a_next = k * a_odd**k * a_even ** (k - 1)
        out.append(CanopyCount(2 * i, a_even, la_even, kary_vertices(k, 2 * i)))
        out.append(CanopyCount(2 * i + 1, a_next, la_next, kary_vertices(k, 2 * i + 1)))
        a_odd, la_odd = a_next, la_next
    return out


def canopy_log_closed_form(k: int, i: int) -> float:
    """Closed form of log a_{2i+1}."""
    first = (k ** (2 * (i + 1)) - 1) / (k * k - 1) * math.log(k)
    second = (k - 1) * math.fsum(k ** (2 * (i + 1 - ell)) * math.log(ell) for ell in range(2, i + 2))
    return first + second


@dataclass(frozen=True)
class SeriesValue:
    value: float
    tail_bound: float
    terms: int


def canopy_limit(d: int, terms: int = 100) -> SeriesValue:
    """log(d-1)/d + (d-2)^2 sum_{l=2}^{terms} (d-1)^{-2l} log l, with a tail bound.

    For l > L the term ratio is at most q log(L+2)/log(L+1) with q = (d-1)^{-2},
    so the omitted tail is bounded by a geometric series from the first
    dropped term.
    """
    if d < 3:
        raise ValueError("d must be >= 3")
    q = (d - 1) ** -2.0
    terms = max(int(terms), 1)
    s = math.fsum(q**ell * math.log(ell) for ell in range(2, terms + 1))
    value = math.log(d - 1) / d + (d - 2) ** 2 * s
    L = max(terms, 1)
    first_dropped = q ** (L + 1) * math.log(L + 1)
    rho = q * math.log(L + 2) / math.log(L + 1)
    tail = (d - 2) ** 2 * first_dropped / (1 - rho)
    return SeriesValue(value, tail, terms)


def uprob_sequence(i_max: int, exact: bool = True) -> list:
    """P(root uncovered) on T_{2i} from m_n = 1/(1 + 1/m_{n-2}) with m_0 = 1."""
    one = Fraction(1) if exact else 1.0
    out = [one]
    for _ in range(i_max):
        out.append(one / (one + one / out[-1]))
    return out


def pelda_sequence(n_max: int, exact: bool = False) -> list:
    """m_0 = 1, m_1 = 0, m_n = 1/(1 + (2 m_{n-2})^{-1}) with 1/0 = inf."""
    zero, one = (Fraction(0), Fraction(1)) if exact else (0.0, 1.0)
    seq = [one, zero][: n_max + 1]
    for n in range(2, n_max + 1):
        prev = seq[n - 2]
        seq.append(zero if prev == 0 else one / (one + one / (2 * prev)))
    return seq
