from __future__ import annotations

import itertools
import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import catalog
from strategies import trees
from treedet.config import CapExceeded
from treedet.determinantal import (
    ConditionedKernel,
    DeterminantalSampler,
    entropy_chain_rule,
    exact_law,
    inclusion_prob,
    sample_determinantal,
    verify_boltzmann_determinantal,
    verify_even_odd_window,
    verify_uncovered_determinantal,
    window_marginal,
    window_marginal_direct,
)
from treedet.laws import entropy_exact, max_deviation
from treedet.spectral import kernel_projection, positive_temp_projection
from treedet.trees import bipartition_by_parity, gen_path, gen_star, root_at


def random_projection(n: int, r: int, seed: int) -> np.ndarray:
    Q, _ = np.linalg.qr(np.random.default_rng(seed).normal(size=(n, r)))
    return Q @ Q.T


def test_p3_and_star_laws():
    law = exact_law(kernel_projection(gen_path(3)))
    assert law.probs.keys() == {(0,), (2,)}
    assert law((0,)) == pytest.approx(0.5)
    star = exact_law(kernel_projection(gen_star(3)))
    assert set(star.probs) == {(1, 2), (1, 3), (2, 3)}
    assert all(p == pytest.approx(1 / 3) for p in star.probs.values())


def test_inclusion_prob_and_entropy_one_vertex():
    K = np.array([[0.3]])
    assert inclusion_prob(K, [0]) == pytest.approx(0.3)
    assert inclusion_prob(K, []) == 1.0
    h = -0.3 * math.log(0.3) - 0.7 * math.log(0.7)
    assert entropy_chain_rule(K) == pytest.approx(h, abs=1e-15)


def test_p3_chain_rule_every_order():
    K = kernel_projection(gen_path(3))
    for perm in itertools.permutations(range(3)):
        labels = np.empty(3)
        labels[list(perm)] = np.arange(3)
        assert entropy_chain_rule(K, labeling=labels) == pytest.approx(math.log(2), abs=1e-9)


def test_exact_law_cap():
    with pytest.raises(CapExceeded):
        exact_law(np.eye(17))


def test_conditioning_on_null_event_raises():
    ck = ConditionedKernel.of(np.array([[1.0, 0.0], [0.0, 0.0]]))
    with pytest.raises(ZeroDivisionError):
        ck.condition(1, True)
    nxt = ck.condition(0, True)
    assert nxt.remaining == [1] and nxt.prob(1) == 0.0


def test_conditioned_kernel_matches_bayes():
    K = random_projection(6, 3, 1)
    law = exact_law(K)
    ck = ConditionedKernel.of(K).condition(2, True).condition(4, False)
    joint = sum(p for k, p in law.probs.items() if 2 in k and 4 not in k)
    for v in (0, 1, 3, 5):
        want = sum(p for k, p in law.probs.items() if 2 in k and 4 not in k and v in k) / joint
        assert ck.prob(v) == pytest.approx(want, abs=1e-12)


def test_sample_size_equals_rank():
    K = random_projection(8, 3, 2)
    assert all(len(DeterminantalSampler(K).sample(np.random.default_rng(s))) == 3 for s in range(50))
    assert sample_determinantal(K, seed=4) == sample_determinantal(K, seed=4)


def test_verify_reports_on_small_trees():
    rep = verify_uncovered_determinantal(gen_path(3))
    assert rep.passed and rep.max_dev < 1e-10
    rep = verify_uncovered_determinantal(gen_star(3))
    assert rep.passed and rep.max_dev < 1e-10
    t = gen_path(2)
    bip = bipartition_by_parity(root_at(t, 0))
    rep = verify_boltzmann_determinantal(t, bip, 1.0)
    assert rep.passed and rep.details["det_identity_ok"]
    assert rep.details["normalisation_rel_err"] < 1e-12
    assert np.allclose(np.diag(positive_temp_projection(t, bip, 1.0).entries), [0.5, 0.5])
    assert verify_even_odd_window(gen_path(5), 2, 1).passed


def test_small_temperature_limit_recovers_uniform_law():
    # Delta law at z -> 0 approaches the Delta law of a uniform maximum matching
    from treedet.matchings import delta, enumerate_matchings, exact_delta_law

    t = gen_path(5)
    bip = bipartition_by_parity(root_at(t, 0))
    ms = list(enumerate_matchings(t))
    nu = max(m.size for m in ms)
    maxs = [m for m in ms if m.size == nu]
    target = Counter(tuple(sorted(delta(m, bip))) for m in maxs)
    gaps = []
    for z in (1e-1, 1e-2, 1e-3):
        law = exact_delta_law(t, bip, z)
        gaps.append(max(abs(law(k) - c / len(maxs)) for k, c in target.items()))
    assert gaps[0] > gaps[1] > gaps[2] and gaps[2] < 1e-4


@pytest.mark.slow
def test_sampler_chi_square_on_catalog():
    draws = 100_000
    for t in catalog(8)[3:]:
        K = kernel_projection(t)
        law = exact_law(K)
        obs = Counter(DeterminantalSampler(K).sample_many(draws, seed=t.n))
        assert set(obs) <= set(law.probs)
        df = len(law.probs) - 1
        if df == 0:
            continue
        stat = sum((obs[k] - draws * p) ** 2 / (draws * p) for k, p in law.probs.items())
        assert stat < df + 4 * math.sqrt(2 * df), (t.edges, stat, df)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 8), st.data())
def test_exact_law_is_determinantal(n, data):
    r = data.draw(st.integers(0, n))
    K = random_projection(n, r, data.draw(st.integers(0, 10**6)))
    law = exact_law(K)
    assert float(law.total) == pytest.approx(1.0, abs=1e-10)
    assert all(len(k) == r for k in law.probs)
    for size in range(1, n + 1):
        for F in itertools.combinations(range(n), size):
            assert law.inclusion(F) == pytest.approx(np.linalg.det(K[np.ix_(F, F)]), abs=1e-10)
    # complement duality
    comp = exact_law(np.eye(n) - K)
    assert max_deviation(comp, law.complement()) < 1e-10


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 8), st.data())
def test_window_marginals_agree(n, data):
    r = data.draw(st.integers(0, n))
    K = random_projection(n, r, data.draw(st.integers(0, 10**6)))
    W = sorted(data.draw(st.sets(st.integers(0, n - 1), min_size=1)))
    full = exact_law(K)
    a = window_marginal(K, W)
    b = window_marginal_direct(K, W)
    c = full.marginal(W)
    assert max_deviation(a, c) < 1e-10 and max_deviation(b, c) < 1e-10
    sub = sorted(data.draw(st.sets(st.sampled_from(W))))
    assert max_deviation(window_marginal(K, sub), a.marginal(sub)) < 1e-10
    assert max_deviation(window_marginal(K, range(n)), full) < 1e-10


@settings(max_examples=30, deadline=None)
@given(trees(max_n=9))
def test_chain_rule_is_order_invariant(t):
    K = kernel_projection(t)
    h = entropy_exact(exact_law(K))
    vals = [entropy_chain_rule(K, seed=s) for s in range(20)]
    assert max(vals) - min(vals) < 1e-9
    assert vals[0] == pytest.approx(h, abs=1e-9)
