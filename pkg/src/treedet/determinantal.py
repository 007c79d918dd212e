"""Determinantal measures of projection kernels on small ground sets.

Exact laws come from enumerating rank-sized subsets, window marginals from
inclusion-exclusion over principal minors, entropies either directly or by the
chain rule over a vertex ordering.  The ``verify_*`` functions compare the
laws coming from matchings with the laws of the matching projections.
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field

import numpy as np

from .config import CapExceeded, current_caps
from .laws import SubsetLaw, binary_entropy, entropy_exact, max_deviation, product_law, tv_distance
from .matchings import exact_delta_law, exact_uncovered_law, matching_polynomial, reconstruct_matching
from .spectral import (
    ProjectionMatrix,
    block_basis,
    boltzmann_subdeterminant,
    kernel_projection,
    positive_temp_projection,
    windowed_projection,
)
from .trees import Bipartition, Tree, ball, bipartition_by_parity, root_at

log = logging.getLogger(__name__)

__all__ = [
    "SubsetLaw",
    "ConditionedKernel",
    "inclusion_prob",
    "exact_law",
    "sample_determinantal",
    "DeterminantalSampler",
    "window_marginal",
    "window_marginal_direct",
    "tv_distance",
    "entropy_exact",
    "entropy_chain_rule",
    "verify_uncovered_determinantal",
    "verify_boltzmann_determinantal",
    "verify_even_odd_window",
]

PIVOT_TOL = 1e-12
CLAMP_TOL = 1e-9
VIOLATION_TOL = 1e-8


def _mat(K) -> np.ndarray:
    return np.asarray(K.entries if isinstance(K, ProjectionMatrix) else K, dtype=float)


def _rank(K, M: np.ndarray) -> int:
    if isinstance(K, ProjectionMatrix):
        return K.rank
    return int(round(np.trace(M)))


def inclusion_prob(K, F) -> float:
    """P(F is contained in X) = det K_F, clamped to [0, 1]."""
    F = sorted(F)
    if not F:
        return 1.0
    M = _mat(K)
    val = float(np.linalg.det(M[np.ix_(F, F)]))
    if val < -VIOLATION_TOL or val > 1 + VIOLATION_TOL:
        log.warning("principal minor %.3e for %s lies outside [0, 1]", val, F)
    return min(max(val, 0.0), 1.0)


def exact_law(K, cap: int | None = None) -> SubsetLaw:
    """nu(X) = |det B[X]|^2 / det(B B^T) for |X| = rank, zero otherwise.

    B is an orthonormal eigenbasis of the range, so det(B B^T) = 1 up to
    rounding; it is still divided out.
    """
    M = _mat(K)
    n = M.shape[0]
    cap = current_caps().enum_cap if cap is None else cap
    if n > cap:
        raise CapExceeded(f"exact law enumeration needs n <= {cap}, got {n}")
    lam, vec = np.linalg.eigh(M)
    B = vec[:, lam > 0.5].T
    r = B.shape[0]
    if r != _rank(K, M):
        raise ValueError("kernel is not a projection of the advertised rank")
    if r == 0:
        return SubsetLaw(tuple(range(n)), {(): 1.0})
    gram = float(np.linalg.det(B @ B.T))
    probs = {}
    for X in itertools.combinations(range(n), r):
        d = np.linalg.det(B[:, X])
        p = d * d / gram
        if p > 1e-15:
            probs[X] = p
    return SubsetLaw(tuple(range(n)), probs)


# ----------------------------------------------------------- conditioning

@dataclass
class ConditionedKernel:
    """Kernel conditioned on a sequence of in/out events.

    ``matrix`` is indexed by ``remaining``; conditioning on a vertex takes
    the Schur complement and drops the vertex.
    """

    matrix: np.ndarray
    remaining: list[int]
    events: list[tuple[int, bool]] = field(default_factory=list)
    drift: float = 0.0

    @classmethod
    def of(cls, K) -> "ConditionedKernel":
        M = _mat(K).copy()
        return cls(M, list(range(M.shape[0])))

    def prob(self, v: int) -> float:
        i = self.remaining.index(v)
        return float(self.matrix[i, i])

    def condition(self, v: int, included: bool) -> "ConditionedKernel":
        i = self.remaining.index(v)
        M = self.matrix
        p = M[i, i]
        col = M[:, i]
        piv = p if included else p - 1.0
        if abs(piv) < PIVOT_TOL:
            raise ZeroDivisionError(f"conditioning on an event of probability ~0 at vertex {v}")
        new = M - np.outer(col, col) / piv
        keep = [j for j in range(len(self.remaining)) if j != i]
        new = new[np.ix_(keep, keep)]
        d = np.diag(new)
        drift = max(self.drift, float(np.max(np.maximum(-d, d - 1.0), initial=0.0)))
        np.fill_diagonal(new, np.clip(d, 0.0, 1.0))
        return ConditionedKernel(
            new, [self.remaining[j] for j in keep], self.events + [(v, included)], drift
        )


class DeterminantalSampler:
    """Exact sequential sampler: include v with its current conditional
    probability, then condition the kernel on the outcome."""

    def __init__(self, K, order=None):
        self.M = _mat(K)
        self.n = self.M.shape[0]
        self.order = list(range(self.n)) if order is None else list(order)

    def sample(self, rng: np.random.Generator) -> tuple[int, ...]:
        M = self.M[np.ix_(self.order, self.order)].copy()
        out = []
        u = rng.random(self.n)
        for j, v in enumerate(self.order):
            p = min(max(M[0, 0], 0.0), 1.0)
            take = u[j] < p
            piv = M[0, 0] if take else M[0, 0] - 1.0
            if abs(piv) < PIVOT_TOL:
                # forced branch: the other outcome has probability ~0
                take = not take
                piv = M[0, 0] if take else M[0, 0] - 1.0
            if take:
                out.append(v)
            if j + 1 < self.n:
                col = M[1:, 0]
                M = M[1:, 1:] - np.outer(col, col) / piv
        return tuple(sorted(out))

    def sample_many(self, count: int, seed: int | None = None) -> list[tuple[int, ...]]:
        rng = np.random.default_rng(seed)
        return [self.sample(rng) for _ in range(count)]


def sample_determinantal(K, seed: int | None = None) -> tuple[int, ...]:
    return DeterminantalSampler(K).sample(np.random.default_rng(seed))


# -------------------------------------------------------------- marginals

def _principal_minors(M: np.ndarray, W: list[int]) -> np.ndarray:
    """det K_Z for every Z subset of W, indexed by bitmask over W."""
    k = len(W)
    out = np.empty(1 << k)
    out[0] = 1.0
    for mask in range(1, 1 << k):
        Z = [W[i] for i in range(k) if mask >> i & 1]
        out[mask] = np.linalg.det(M[np.ix_(Z, Z)])
    return out


def _window_law(W: list[int], probs: np.ndarray) -> SubsetLaw:
    k = len(W)
    if np.min(probs, initial=0.0) < -CLAMP_TOL:
        raise ValueError(f"window probability {np.min(probs):.3e} is negative; kernel is broken")
    out = {}
    for mask in range(1 << k):
        p = max(float(probs[mask]), 0.0)
        if p > 0:
            out[tuple(sorted(W[i] for i in range(k) if mask >> i & 1))] = p
    return SubsetLaw(tuple(sorted(W)), out)


def window_marginal(K, W, cap: int = 16) -> SubsetLaw:
    """Law of X & W by inclusion-exclusion over the minors det K_Z, Z subset of W.

    P(X & W = Y) = sum_{Y <= Z <= W} (-1)^{|Z - Y|} det K_Z, evaluated for all Y
    at once with a Moebius transform over the subset lattice.
    """
    W = list(W)
    if len(W) > cap:
        raise CapExceeded(f"window of size {len(W)} exceeds cap {cap}")
    f = _principal_minors(_mat(K), W)
    for i in range(len(W)):
        bit = 1 << i
        for mask in range(1 << len(W)):
            if not mask & bit:
                f[mask] -= f[mask | bit]
    return _window_law(W, f)


def window_marginal_direct(K, W, cap: int = 16) -> SubsetLaw:
    """Same law via P(X & W = Y) = |det(K_W - I_{W - Y})|, one determinant per Y."""
    W = list(W)
    if len(W) > cap:
        raise CapExceeded(f"window of size {len(W)} exceeds cap {cap}")
    KW = _mat(K)[np.ix_(W, W)]
    k = len(W)
    probs = np.empty(1 << k)
    for mask in range(1 << k):
        D = KW.copy()
        for i in range(k):
            if not mask >> i & 1:
                D[i, i] -= 1.0
        probs[mask] = (-1) ** (k - bin(mask).count("1")) * np.linalg.det(D)
    return _window_law(W, probs)


# ---------------------------------------------------------------- entropy

def _order_from(labeling, n: int, seed) -> list[int]:
    if labeling is None:
        labeling = np.random.default_rng(seed).random(n)
    labeling = np.asarray(labeling, dtype=float)
    return [int(i) for i in np.argsort(labeling, kind="stable")]


def entropy_chain_rule(K, labeling=None, seed: int | None = None, max_branches: int = 1 << 20) -> float:
    """H(X) = sum_v H(I(v) | I(u) for u earlier), in the order of increasing label.

    Each conditional entropy is averaged over all histories of earlier
    outcomes: the computation branches on in/out at every vertex and carries
    the conditioned kernel (Schur complements) along each branch.  Branches of
    conditional probability below 1e-12 are dropped.
    """
    M = _mat(K)
    order = _order_from(labeling, M.shape[0], seed)
    states = [(1.0, M[np.ix_(order, order)].copy())]
    total = 0.0
    for _ in order:
        nxt = []
        for w, C in states:
            p = min(max(C[0, 0], 0.0), 1.0)
            total += w * binary_entropy(p)
            col = C[1:, 0]
            rest = C[1:, 1:]
            if p > PIVOT_TOL:
                nxt.append((w * p, rest - np.outer(col, col) / C[0, 0]))
            if 1.0 - p > PIVOT_TOL:
                nxt.append((w * (1.0 - p), rest - np.outer(col, col) / (C[0, 0] - 1.0)))
        if len(nxt) > max_branches:
            raise CapExceeded(f"chain-rule entropy needs more than {max_branches} branches")
        states = nxt
    return total


# ---------------------------------------------------------- verification

@dataclass
class CheckReport:
    name: str
    max_dev: float
    tolerance: float
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        flags = [v for k, v in self.details.items() if k.endswith("_ok")]
        return bool(self.max_dev < self.tolerance and all(flags))

    def to_dict(self) -> dict:
        return {"check": self.name, "max_dev": self.max_dev, "tolerance": self.tolerance,
                "passed": self.passed, **self.details}


def _superset_sums(law: SubsetLaw, n: int) -> np.ndarray:
    f = np.zeros(1 << n)
    for key, p in law.probs.items():
        f[sum(1 << v for v in key)] += float(p)
    for i in range(n):
        bit = 1 << i
        for mask in range(1 << n):
            if not mask & bit:
                f[mask] += f[mask | bit]
    return f


def verify_uncovered_determinantal(tree: Tree, tolerance: float = 1e-9) -> CheckReport:
    """Uncovered set of a uniform maximum matching vs the kernel-projection measure."""
    if tree.n > current_caps().enum_cap:
        raise CapExceeded(f"verification enumerates subsets; n <= {current_caps().enum_cap}")
    K = kernel_projection(tree)
    law_m = exact_uncovered_law(tree)
    law_k = exact_law(K)
    dev = max_deviation(law_m, law_k)
    # every inclusion probability P(F in U) against det K_F
    incl = _superset_sums(law_m, tree.n)
    minors = _principal_minors(K.entries, list(range(tree.n)))
    incl_dev = float(np.max(np.abs(incl - minors)))
    return CheckReport(
        "uncovered-determinantal",
        max(dev, incl_dev),
        tolerance,
        {"law_dev": dev, "inclusion_dev": incl_dev, "n": tree.n, "rank": K.rank},
    )


def verify_boltzmann_determinantal(tree: Tree, bip: Bipartition, z: float, tolerance: float = 1e-9,
                                   det_rel_tol: float = 1e-10) -> CheckReport:
    """Delta-set law of the Boltzmann matching vs the positive-temperature projection,
    plus the per-subset determinant identity and the Gram normalisation."""
    if tree.n > current_caps().boltzmann_enum_cap:
        raise CapExceeded(f"Boltzmann verification needs n <= {current_caps().boltzmann_enum_cap}")
    P = positive_temp_projection(tree, bip, z)
    law_m = exact_delta_law(tree, bip, z)
    law_k = exact_law(P)
    dev = max_deviation(law_m, law_k)

    S, T = bip.S, bip.T
    det_err = 0.0
    det_total = 0.0
    for X in itertools.combinations(range(tree.n), len(S)):
        got = boltzmann_subdeterminant(tree, bip, z, X)
        det_total += got
        try:
            reconstruct_matching(tree, set(X) ^ T)
            want = float(z) ** (2 * len(S & set(X)))
        except ValueError:
            want = 0.0
        err = abs(got - want) / want if want else abs(got)
        det_err = max(det_err, err)
    # Cauchy-Binet: det(B B^T) = sum_X |det B[X]|^2 = z^{|S|-|T|} P_G(z)
    poly = matching_polynomial(tree)
    norm_want = float(z) ** (len(S) - len(T)) * float(poly.evaluate(float(z)))
    B = block_basis(tree, bip, z).in_vertex_order()
    norm_got = float(np.linalg.det(B @ B.T)) if B.size else 1.0
    norm_err = abs(norm_got - norm_want) / norm_want
    return CheckReport(
        "boltzmann-determinantal",
        dev,
        tolerance,
        {
            "law_dev": dev,
            "det_identity_rel_err": det_err,
            "det_identity_ok": bool(det_err < det_rel_tol),
            "normalisation_rel_err": norm_err,
            "cauchy_binet_rel_err": abs(det_total - norm_want) / norm_want,
            "z": float(z),
            "n": tree.n,
        },
    )


def _ball_uncovered_law(tree: Tree, o: int, r: int) -> SubsetLaw:
    sub, ids = ball(tree, o, r)
    return exact_uncovered_law(sub).relabel(ids)


def verify_even_odd_window(tree: Tree, o: int, R: int, tolerance: float = 1e-9) -> CheckReport:
    """Window law of the R-windowed kernel projection on B_{R+1}(o) against two
    independent uniform maximum matchings.

    With o in S, R_e the least even radius >= R and R_o the least odd one, the
    law of X & B_{R+1} is the law of (U_e & S) | (U_o & T), where U_e and U_o are
    the uncovered sets of independent uniform maximum matchings of the balls of
    radius R_e and R_o.
    """
    rt = root_at(tree, o)
    bip = bipartition_by_parity(rt, "S")
    _, Pbar = windowed_projection(tree, o, R)
    W = [v for v in range(tree.n) if rt.depth[v] <= R + 1]
    lhs = window_marginal(Pbar.entries, W)
    r_even = R + (R % 2)
    r_odd = R + 1 - (R % 2)
    le = _ball_uncovered_law(tree, o, r_even)
    lo = _ball_uncovered_law(tree, o, r_odd)
    le = le.marginal([v for v in le.ground if v in bip.S])
    lo = lo.marginal([v for v in lo.ground if v in bip.T])
    rhs = product_law(le, lo)
    dev = max_deviation(lhs, rhs)
    return CheckReport("even-odd-window", dev, tolerance,
                       {"o": o, "R": R, "window": len(W), "r_even": r_even, "r_odd": r_odd})
