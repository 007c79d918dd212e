from __future__ import annotations

import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings

from strategies import graphs, trees
from treedet.config import CapExceeded
from treedet.matchings import max_matching_stats
from treedet.spectral import (
    ProjectionError,
    block_basis,
    boltzmann_subdeterminant,
    kernel_projection,
    positive_temp_projection,
    range_projection,
    rank_exact,
    rank_windowed,
    span_basis,
    windowed_projection,
)
from treedet.trees import Bipartition, Graph, bipartition_by_parity, gen_path, root_at


def test_p3_kernel_hand_values():
    K = kernel_projection(gen_path(3))
    want = np.array([[0.5, 0, -0.5], [0, 0, 0], [-0.5, 0, 0.5]])
    assert K.rank == 1
    assert np.allclose(K.entries, want, atol=1e-14)
    assert np.allclose(range_projection(gen_path(3)).entries, np.eye(3) - want, atol=1e-14)


def test_p3_window_hand_values():
    Pi, Pbar = windowed_projection(gen_path(3), 1, 0)
    assert np.allclose(Pi.entries, 0.5 * np.array([[1, 0, 1], [0, 0, 0], [1, 0, 1]]), atol=1e-14)
    assert np.allclose(Pi.entries + Pbar.entries, np.eye(3))
    # the middle vertex sees its full row-space weight already at R = 0
    assert Pi.entries[0, 0] == pytest.approx(range_projection(gen_path(3)).entries[0, 0])


def test_single_edge_positive_temperature():
    t = gen_path(2)
    bip = Bipartition(frozenset({0}), frozenset({1}))
    for z in (0.5, 1.0, 3.0):
        P = positive_temp_projection(t, bip, z).entries
        want = np.array([[z * z, z], [z, 1.0]]) / (1 + z * z)
        assert np.allclose(P, want, atol=1e-15)
        assert boltzmann_subdeterminant(t, bip, z, [0]) == pytest.approx(z * z)
        assert boltzmann_subdeterminant(t, bip, z, [1]) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        boltzmann_subdeterminant(t, bip, 1.0, [0, 1])


def test_block_basis_layout():
    t = gen_path(3)
    bip = bipartition_by_parity(root_at(t, 1))
    B = block_basis(t, bip, 2.0)
    assert B.S == (1,) and B.T == (0, 2)
    assert np.array_equal(B.block, [[2.0, 1.0, 1.0]])
    assert np.array_equal(B.in_vertex_order(), [[1.0, 2.0, 1.0]])


def test_dense_cap(monkeypatch):
    from treedet import spectral

    monkeypatch.setattr(spectral, "current_caps", lambda: type("C", (), {"dense_cap": 5})())
    with pytest.raises(CapExceeded):
        kernel_projection(gen_path(6))


def test_rank_exact_simple_graphs():
    assert rank_exact(Graph.from_edges(1, [])) == 0
    assert rank_exact(gen_path(2)) == 2
    # C_4 has rank 2, C_5 rank 5, K_4 rank 4
    assert rank_exact(Graph.from_edges(4, [(0, 1), (1, 2), (2, 3), (3, 0)])) == 2
    assert rank_exact(Graph.from_edges(5, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)])) == 5
    assert rank_exact(Graph.from_edges(4, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)])) == 4


def test_span_basis_drops_dependent_columns():
    M = np.array([[1.0, 2.0, 0.0], [1.0, 2.0, 0.0], [0.0, 0.0, 0.0]])
    Q = span_basis(M)
    assert Q.shape == (3, 1)
    assert span_basis(np.zeros((3, 2))).shape == (3, 0)


@settings(max_examples=60, deadline=None)
@given(trees(max_n=14))
def test_kernel_projection_against_svd_nullspace(t):
    K = kernel_projection(t)
    N = sla.null_space(t.adjacency())
    assert K.rank == N.shape[1] == t.n - 2 * max_matching_stats(t).nu
    assert np.allclose(K.entries, N @ N.T, atol=1e-10)
    assert K.residual_idem < 1e-10 and K.residual_kernel < 1e-10


@settings(max_examples=60, deadline=None)
@given(graphs(max_n=14))
def test_rank_exact_matches_numpy(g):
    assert rank_exact(g) == np.linalg.matrix_rank(g.adjacency())


@settings(max_examples=40, deadline=None)
@given(graphs(max_n=10))
def test_window_at_diameter_is_global(g):
    Pi_G = range_projection(g).entries
    D = g.diameter()
    for o in range(g.n):
        Pi, Pbar = windowed_projection(g, o, D)
        assert np.allclose(Pi.entries, Pi_G, atol=1e-9)
    assert rank_windowed(g, D) == pytest.approx(rank_exact(g), abs=1e-9)
    for R in range(D):
        assert rank_windowed(g, R) <= rank_exact(g) + 1e-9


@settings(max_examples=40, deadline=None)
@given(trees(min_n=2, max_n=10))
def test_positive_temperature_projection(t):
    bip = bipartition_by_parity(root_at(t, 0))
    for z in (0.3, 1.0, 2.5):
        P = positive_temp_projection(t, bip, z)
        assert P.rank == len(bip.S)
        assert np.trace(P.entries) == pytest.approx(len(bip.S))
        # the rows of (zI | H) lie in the range
        B = block_basis(t, bip, z).in_vertex_order()
        assert np.allclose(B @ P.entries, B, atol=1e-10)


def test_projection_checks_reject_non_projections():
    from treedet.spectral import _finish

    with pytest.raises(ProjectionError):
        _finish(np.array([[0.5, 0.0], [0.0, 0.5]]), 1, "half")
    with pytest.raises(ProjectionError):
        _finish(np.array([[1.0, 1.0], [0.0, 0.0]]), 1, "skew")
