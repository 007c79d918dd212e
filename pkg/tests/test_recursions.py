from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from strategies import trees
from treedet.matchings import max_matching_stats, uncovered_probability
from treedet.recursions import (
    canopy_counts,
    canopy_limit,
    canopy_log_closed_form,
    kary_vertices,
    pelda_sequence,
    ptemp_kernel_row,
    solve_m_z,
    solve_m_zero,
    uprob_sequence,
    zero_kernel_row,
)
from treedet.spectral import kernel_projection, positive_temp_projection
from treedet.trees import bipartition_by_parity, gen_alternating, gen_kary, gen_path, root_at


def test_p3_hand_values():
    rt = root_at(gen_path(3), 1)
    z = 0.5
    vals = solve_m_z(rt, z)
    assert vals.m[0] == vals.m[2] == 1.0
    assert vals.m[1] == pytest.approx(z * z / (z * z + 2))
    assert vals.residual() < 1e-15
    zero = solve_m_zero(rt, exact=True)
    assert zero.m[1] == 0 and zero.m[0] == 1
    # root covered in every maximum matching of P_3, ends uncovered half the time
    assert zero_kernel_row(root_at(gen_path(3), 0), exact=True) == [Fraction(1, 2), 0, Fraction(-1, 2)]


def test_m_z_rejects_zero_temperature():
    with pytest.raises(ValueError):
        solve_m_z(root_at(gen_path(2), 0), 0.0)


def test_w_is_signed_for_negative_z():
    rt = root_at(gen_path(4), 0)
    v = solve_m_z(rt, -1.5)
    assert [int(s) for s in v.w_sign] == [1, -1, 1, -1]
    assert np.all(np.isfinite(v.w))


def test_canopy_counts_small():
    cs = canopy_counts(2, 2)
    assert [c.a for c in cs] == [2, 8, 64, 12288, 100663296]
    assert [c.vertices for c in cs] == [3, 7, 15, 31, 63]
    with pytest.raises(ValueError):
        canopy_counts(1, 2)


def test_canopy_counts_match_dp_for_ternary_trees():
    for c in canopy_counts(3, 2):
        assert max_matching_stats(gen_kary(3, c.depth).tree, exact=True).mm == c.a


@pytest.mark.parametrize("k", [2, 3, 4])
def test_closed_form_matches_recurrence(k):
    for c in canopy_counts(k, 6):
        if c.depth % 2:
            i = (c.depth - 1) // 2
            assert canopy_log_closed_form(k, i) == pytest.approx(c.log_a, rel=1e-13)
            if c.a is not None:
                assert c.log_a == pytest.approx(math.log(c.a), rel=1e-13)


def test_canopy_limit_value_and_tail():
    s = canopy_limit(3, 100)
    assert s.value == pytest.approx(0.2991227939266288, abs=1e-15)
    assert s.tail_bound < 1e-12
    short = canopy_limit(3, 5)
    assert abs(short.value - s.value) <= short.tail_bound
    assert abs(short.value - s.value) > short.tail_bound / 10
    with pytest.raises(ValueError):
        canopy_limit(2)


def test_uprob_and_pelda_sequences():
    assert uprob_sequence(5) == [Fraction(1, i + 1) for i in range(6)]
    seq = pelda_sequence(6, exact=True)
    assert seq[:4] == [1, 0, Fraction(2, 3), 0]
    assert all(x == 0 for x in seq[1::2])
    assert pelda_sequence(40)[40] == pytest.approx(0.5, abs=1e-6)


def test_pelda_sequence_matches_trees():
    for n in range(12):
        rt = gen_alternating(n)
        assert solve_m_zero(rt, exact=True).m[0] == pelda_sequence(n, exact=True)[n]


def test_kary_vertices():
    assert kary_vertices(2, 3) == 15 and kary_vertices(3, 2) == 13


@settings(max_examples=50, deadline=None)
@given(trees(max_n=10), st.data())
def test_zero_recursion_is_uncovered_probability(t, data):
    o = data.draw(st.integers(0, t.n - 1))
    m = solve_m_zero(root_at(t, o), exact=True).m[o]
    assert m == uncovered_probability(t, o)


@settings(max_examples=50, deadline=None)
@given(trees(max_n=10), st.data())
def test_zero_row_matches_kernel_projection(t, data):
    o = data.draw(st.integers(0, t.n - 1))
    rt = root_at(t, o)
    exact_row = zero_kernel_row(rt, exact=True)
    K = kernel_projection(t).entries
    assert np.allclose([float(x) for x in exact_row], K[o], atol=1e-10)
    assert np.allclose(zero_kernel_row(rt), K[o], atol=1e-10)


@settings(max_examples=50, deadline=None)
@given(trees(min_n=2, max_n=10), st.data())
def test_positive_row_matches_projection(t, data):
    o = data.draw(st.integers(0, t.n - 1))
    z = data.draw(st.sampled_from([0.25, 0.5, 1.0, 2.0, 4.0, -1.5]))
    root_class = data.draw(st.sampled_from(["S", "T"]))
    rt = root_at(t, o)
    bip = bipartition_by_parity(rt, root_class)
    P = positive_temp_projection(t, bip, z).entries
    assert np.allclose(ptemp_kernel_row(rt, bip, z), P[o], atol=1e-10)
    # diagonal entry: m_o for o in S, 1 - m_o for o in T
    m = solve_m_z(rt, z).m[o]
    assert P[o, o] == pytest.approx(m if root_class == "S" else 1 - m, abs=1e-12)


def test_deep_tree_positive_recursion_is_stable():
    rt = gen_kary(2, 16)
    v = solve_m_z(rt, 0.1)
    assert np.all(np.isfinite(v.w_log)) and v.residual() < 1e-12
