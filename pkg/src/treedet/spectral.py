"""Dense projection matrices attached to a graph's adjacency structure.

* kernel projection of the adjacency matrix and its complement (the row-space
  projection),
* windowed row-space projections built from the neighbourhood vectors of a
  ball,
* the positive-temperature projection onto the row space of ``(zI | H)``.

Every projection is checked for symmetry and idempotence when it is built.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np
import scipy.linalg as sla

from .config import CapExceeded, current_caps
from .trees import Bipartition, Graph, Tree

SYM_TOL = 1e-10
IDEM_TOL = 1e-8
KERNEL_REL_THRESHOLD = 1e-8
SPAN_REL_TOL = 1e-10
COND_FALLBACK = 1e12


class ProjectionError(ArithmeticError):
    """A constructed matrix failed the projection checks."""


class KernelRankError(ProjectionError):
    """Eigenvalue threshold and exact integer rank disagree."""


@dataclass(frozen=True)
class ProjectionMatrix:
    entries: np.ndarray = field(repr=False)
    rank: int
    kind: str
    residual_idem: float
    residual_sym: float
    residual_kernel: float | None = None  # max |A P| where meaningful
    condition: float | None = None

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)

    def row(self, o: int) -> np.ndarray:
        return self.entries[o]

    def complement(self, kind: str | None = None) -> "ProjectionMatrix":
        return _finish(np.eye(self.dim) - self.entries, self.dim - self.rank, kind or f"I-{self.kind}")

    def to_dict(self) -> dict:
        out = {
            "kind": self.kind,
            "dim": self.dim,
            "rank": self.rank,
            "residual_idempotent": self.residual_idem,
            "residual_symmetric": self.residual_sym,
            "entries": self.entries.ravel().tolist(),
        }
        if self.residual_kernel is not None:
            out["residual_kernel"] = self.residual_kernel
        if self.condition is not None:
            out["condition"] = self.condition
        return out


def _finish(P: np.ndarray, rank: int, kind: str, A: np.ndarray | None = None, cond=None) -> ProjectionMatrix:
    sym = float(np.max(np.abs(P - P.T))) if P.size else 0.0
    if sym > SYM_TOL:
        raise ProjectionError(f"{kind}: symmetry residual {sym:.3e}")
    P = 0.5 * (P + P.T)
    idem = float(np.max(np.abs(P @ P - P))) if P.size else 0.0
    if idem > IDEM_TOL:
        raise ProjectionError(f"{kind}: idempotence residual {idem:.3e}")
    if P.size:
        ev = np.linalg.eigvalsh(P)
        if ev[0] < -IDEM_TOL or ev[-1] > 1 + IDEM_TOL:
            raise ProjectionError(f"{kind}: eigenvalues outside [0, 1]")
    kres = float(np.max(np.abs(A @ P))) if A is not None and P.size else None
    return ProjectionMatrix(P, int(rank), kind, idem, sym, kres, cond)


def _check_dense(n: int) -> None:
    cap = current_caps().dense_cap
    if n > cap:
        raise CapExceeded(f"dense linear algebra capped at n = {cap}, got {n}")


# --------------------------------------------------------------- exact rank

def rank_exact(graph: Graph) -> int:
    """Rank of the adjacency matrix over the rationals.

    Sparse fraction-free elimination: the pivot row is the sparsest remaining
    row, other rows are replaced by ``p*row - a*pivot`` and divided by their
    content, so all arithmetic stays in exact integers.  On trees leaf rows
    are chosen first and no fill-in occurs.
    """
    rows: dict[int, dict[int, int]] = {}
    col_rows: dict[int, set[int]] = {}
    for v in range(graph.n):
        if graph.adj[v]:
            rows[v] = {w: 1 for w in graph.adj[v]}
            for w in graph.adj[v]:
                col_rows.setdefault(w, set()).add(v)
    rank = 0
    while rows:
        r = min(rows, key=lambda i: (len(rows[i]), i))
        prow = rows.pop(r)
        c = min(prow, key=lambda j: (len(col_rows[j]), j))
        p = prow[c]
        for j in prow:
            col_rows[j].discard(r)
        for i in list(col_rows[c]):
            row = rows[i]
            a = row[c]
            for j in row:
                col_rows[j].discard(i)
            new = {j: p * x for j, x in row.items()}
            for j, x in prow.items():
                val = new.get(j, 0) - a * x
                if val:
                    new[j] = val
                else:
                    new.pop(j, None)
            if new:
                g = 0
                for x in new.values():
                    g = math.gcd(g, x)
                    if g == 1:
                        break
                if g > 1:
                    new = {j: x // g for j, x in new.items()}
                rows[i] = new
                for j in new:
                    col_rows.setdefault(j, set()).add(i)
            else:
                del rows[i]
        rank += 1
    return rank


# --------------------------------------------------------- kernel / range

def kernel_projection(graph: Graph, check_rank: bool = True) -> ProjectionMatrix:
    """Orthogonal projection onto ker A, cross-checked against the exact rank."""
    _check_dense(graph.n)
    A = graph.adjacency()
    lam, vec = np.linalg.eigh(A)
    thr = KERNEL_REL_THRESHOLD * max(1.0, float(np.max(np.abs(lam))))
    null = vec[:, np.abs(lam) < thr]
    dim = null.shape[1]
    if check_rank:
        exact = graph.n - rank_exact(graph)
        if exact != dim:
            raise KernelRankError(f"eigen-threshold nullity {dim} != exact nullity {exact}")
    P = null @ null.T
    out = _finish(P, dim, "kernel", A)
    if out.residual_kernel > IDEM_TOL:
        raise ProjectionError(f"kernel: |A P| residual {out.residual_kernel:.3e}")
    return out


def range_projection(graph: Graph, check_rank: bool = True) -> ProjectionMatrix:
    """Projection onto the row space of A, i.e. ``I - kernel_projection``."""
    return kernel_projection(graph, check_rank).complement("range")


def span_basis(M: np.ndarray, rel_tol: float = SPAN_REL_TOL) -> np.ndarray:
    """Orthonormal basis for the column span of ``M`` (pivoted QR, rank-revealing)."""
    if M.size == 0:
        return np.zeros((M.shape[0], 0))
    Q, R, _ = sla.qr(M, mode="economic", pivoting=True)
    d = np.abs(np.diag(R))
    if d.size == 0 or d[0] == 0:
        return np.zeros((M.shape[0], 0))
    r = int(np.sum(d > rel_tol * d[0]))
    return Q[:, :r]


def _ball_vertices(graph: Graph, o: int, R: int) -> list[int]:
    dist = graph.distances(o)
    return [v for v in range(graph.n) if 0 <= dist[v] <= R]


def windowed_projection(graph: Graph, o: int, R: int, A: np.ndarray | None = None):
    """``(Pi_{G,o,R}, Pbar_{G,o,R})``: projection onto span{A e_v : v in B_R(o)} and its complement."""
    _check_dense(graph.n)
    if R < 0:
        raise ValueError("radius must be >= 0")
    A = graph.adjacency() if A is None else A
    Q = span_basis(A[:, _ball_vertices(graph, o, R)])
    Pi = _finish(Q @ Q.T, Q.shape[1], f"window(o={o},R={R})")
    return Pi, Pi.complement(f"kernel-window(o={o},R={R})")


def rank_windowed(graph: Graph, R: int) -> float:
    """sum_o <Pi_{G,o,R} e_o, e_o>."""
    _check_dense(graph.n)
    A = graph.adjacency()
    total = 0.0
    for o in range(graph.n):
        Q = span_basis(A[:, _ball_vertices(graph, o, R)])
        total += float(Q[o] @ Q[o])
    return total


# ------------------------------------------------ positive temperature

@dataclass(frozen=True)
class BlockBasisMatrix:
    """``(zI | H)``: rows indexed by S, columns by S followed by T."""

    S: tuple[int, ...]
    T: tuple[int, ...]
    z: float
    H: np.ndarray = field(repr=False)

    @property
    def block(self) -> np.ndarray:
        return np.hstack([self.z * np.eye(len(self.S)), self.H])

    def in_vertex_order(self) -> np.ndarray:
        """Same rows, columns re-indexed by vertex id."""
        n = len(self.S) + len(self.T)
        B = np.zeros((len(self.S), n))
        B[np.arange(len(self.S)), list(self.S)] = self.z
        if self.T:
            B[:, list(self.T)] = self.H
        return B

    def submatrix(self, X: Iterable[int]) -> np.ndarray:
        return self.in_vertex_order()[:, sorted(X)]


def block_basis(tree: Graph, bip: Bipartition, z: float) -> BlockBasisMatrix:
    bip.check(tree)
    S, T = tuple(sorted(bip.S)), tuple(sorted(bip.T))
    col = {t: j for j, t in enumerate(T)}
    H = np.zeros((len(S), len(T)))
    for i, s in enumerate(S):
        for t in tree.adj[s]:
            H[i, col[t]] = 1.0
    return BlockBasisMatrix(S, T, float(z), H)


def positive_temp_projection(tree: Tree, bip: Bipartition, z: float) -> ProjectionMatrix:
    """Projection onto the row space of ``(zI | H)``, ``P = B^T (B B^T)^{-1} B``."""
    _check_dense(tree.n)
    B = block_basis(tree, bip, z).in_vertex_order()
    k = B.shape[0]
    if k == 0:
        return _finish(np.zeros((tree.n, tree.n)), 0, f"ptemp(z={z})", cond=1.0)
    G = B @ B.T
    cond = float(np.linalg.cond(G))
    if np.isfinite(cond) and cond <= COND_FALLBACK:
        fac = sla.cho_factor(G)
        P = B.T @ sla.cho_solve(fac, B)
    else:
        Q = span_basis(B.T)
        if Q.shape[1] != k:
            raise ProjectionError(
                f"rows of (zI | H) are dependent at z={z} (rank {Q.shape[1]} < {k}); "
                "use windowed_projection-style orthogonalisation instead"
            )
        P = Q @ Q.T
    return _finish(P, k, f"ptemp(z={z})", cond=cond)


def boltzmann_subdeterminant(tree: Tree, bip: Bipartition, z: float, X: Iterable[int]) -> float:
    """|det B[X]|^2 for the columns X of ``(zI | H)``; requires |X| = |S|."""
    X = sorted(set(X))
    if len(X) != len(bip.S):
        raise ValueError(f"|X| = {len(X)} but |S| = {len(bip.S)}")
    if not X:
        return 1.0
    d = np.linalg.det(block_basis(tree, bip, z).submatrix(X))
    return float(d * d)
