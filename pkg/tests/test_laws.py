from __future__ import annotations

import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from treedet.laws import (
    SubsetLaw,
    binary_entropy,
    entropy_exact,
    max_deviation,
    product_law,
    tv_distance,
)


def test_from_weights_normalises_and_sorts_keys():
    law = SubsetLaw.from_weights([0, 1, 2], {(2, 0): 1, (1,): 3})
    assert law((0, 2)) == 0.25 and law([1]) == 0.75
    assert law.support() == [(0, 2), (1,)]
    with pytest.raises(ValueError):
        SubsetLaw.from_weights([0], {(0,): 0})


def test_rejects_outside_ground_and_negative_mass():
    with pytest.raises(ValueError):
        SubsetLaw((0, 1), {(2,): 1.0})
    with pytest.raises(ValueError):
        SubsetLaw((0, 1), {(0,): -0.5, (1,): 1.5})


def test_marginal_inclusion_complement():
    law = SubsetLaw((0, 1, 2), {(0,): 0.5, (1, 2): 0.5})
    m = law.marginal([1, 0])
    assert m.ground == (0, 1) and m((0,)) == 0.5 and m((1,)) == 0.5
    assert law.inclusion([2]) == 0.5 and law.inclusion([]) == 1.0
    c = law.complement()
    assert c((1, 2)) == 0.5 and c((0,)) == 0.5


def test_relabel_and_map():
    law = SubsetLaw((0, 1), {(0,): 0.25, (1,): 0.75})
    r = law.relabel((7, 3))
    assert r.ground == (3, 7) and r((7,)) == 0.25
    assert law.map(lambda k: ()).probs == {(): 1.0}


def test_product_law():
    a = SubsetLaw((0,), {(): 0.5, (0,): 0.5})
    b = SubsetLaw((1,), {(1,): 1.0})
    p = product_law(a, b)
    assert p((0, 1)) == 0.5 and p((1,)) == 0.5
    with pytest.raises(ValueError):
        product_law(a, a)


def test_distances():
    a = SubsetLaw((0, 1), {(0,): 1.0})
    b = SubsetLaw((0, 1), {(1,): 1.0})
    assert tv_distance(a, b) == 1.0 and max_deviation(a, b) == 1.0
    with pytest.raises(ValueError):
        tv_distance(a, SubsetLaw((0,), {(0,): 1.0}))


def test_entropies():
    law = SubsetLaw((0, 1), {(0,): Fraction(1, 2), (1,): Fraction(1, 2)})
    assert entropy_exact(law) == pytest.approx(math.log(2), abs=1e-15)
    assert binary_entropy(0.0) == 0.0 and binary_entropy(1.0) == 0.0
    assert binary_entropy(0.5) == pytest.approx(math.log(2), abs=1e-15)


weights = st.dictionaries(
    st.frozensets(st.integers(0, 4)), st.floats(0.01, 10.0), min_size=1, max_size=12
)


@settings(max_examples=80, deadline=None)
@given(weights, weights)
def test_tv_is_a_metric_bounded_by_one(w1, w2):
    a = SubsetLaw.from_weights(range(5), w1)
    b = SubsetLaw.from_weights(range(5), w2)
    d = tv_distance(a, b)
    assert 0.0 <= d <= 1.0 + 1e-12
    assert d == pytest.approx(tv_distance(b, a), abs=1e-15)
    assert tv_distance(a, a) == 0.0
    assert max_deviation(a, b) <= 2 * d + 1e-12


@settings(max_examples=80, deadline=None)
@given(weights, st.frozensets(st.integers(0, 4)))
def test_marginal_keeps_mass_and_entropy_bound(w, window):
    law = SubsetLaw.from_weights(range(5), w)
    m = law.marginal(window)
    assert float(m.total) == pytest.approx(1.0, abs=1e-12)
    assert entropy_exact(m) <= entropy_exact(law) + 1e-12
    assert 0.0 <= entropy_exact(law) <= 5 * math.log(2) + 1e-12
