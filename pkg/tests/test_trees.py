from collections import Counter
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st
from scipy.stats import chisquare

from conftest import bfs_oracle
from tdquad.errors import (IndexOutOfRange, InadmissibleMarkedTree, InadmissibleParameters, InvalidDyckPath,
                           TooLarge)
from tdquad.trees import (CONTOUR_KINDS, ContourFunction, MarkedTree, all_trees, catalan, contour_distance,
                          contour_of, explore_tree, exploration_probability, first_visit_times, from_paren,
                          gw_size_pmf, sample_bi_infinite_tree_truncation, sample_contour_process,
                          sample_gw_contour, sample_infinite_tree_truncation, sample_uniform_tree, to_paren,
                          tree_map, tree_of)


def dyck(seed, k):
    return contour_of(sample_uniform_tree(k, np.random.default_rng(seed)))


def test_catalan_matches_enumeration():
    # independent oracle: the recursive enumeration of Dyck paths
    assert [len(all_trees(k)) for k in range(8)] == [catalan(k) for k in range(8)]
    assert [catalan(k) for k in range(8)] == [1, 1, 2, 5, 14, 42, 132, 429]


def test_all_trees_are_distinct():
    ts = all_trees(5)
    assert len(set(ts)) == len(ts)


def test_paren_round_trip_and_errors():
    s = "(()(()))"
    c = from_paren(s)
    assert c.values.tolist() == [0, 1, 2, 1, 2, 3, 2, 1, 0]
    assert to_paren(c) == s
    for bad in ["(()", ")(", "(x)", "())("]:
        with pytest.raises(InvalidDyckPath):
            from_paren(bad)


def test_contour_validation():
    with pytest.raises(InvalidDyckPath):
        ContourFunction([0, 1])
    with pytest.raises(InvalidDyckPath):
        ContourFunction([0, 2, 0])
    assert ContourFunction([0]).edge_count == 0


def test_tree_contour_round_trip():
    for t in all_trees(4):
        assert tree_of(contour_of(t)) == t
        c = contour_of(t).values
        assert np.array_equal(c[first_visit_times(t)], t.depth())


@given(st.integers(1, 80), st.integers(0, 2 ** 32 - 1), st.data())
def test_contour_distance_is_tree_distance(k, seed, data):
    c = dyck(seed, k)
    t = tree_of(c)
    i = data.draw(st.integers(0, 2 * k))
    j = data.draw(st.integers(0, 2 * k))
    d = bfs_oracle(tree_map(t), int(t.visit[i]))
    assert contour_distance(c, i, j) == d[t.visit[j]]


def test_contour_distance_bounds():
    c = from_paren("(())")
    with pytest.raises(IndexOutOfRange):
        contour_distance(c, 0, 5)
    assert contour_distance(c, 0, 4) == 0


def test_tree_map_is_a_valid_tree():
    for t in all_trees(4):
        m = tree_map(t)
        m.validate()
        assert m.vertex_count == 5 and m.n_edges == 4


def test_uniform_sampler_chi_square():
    rng = np.random.default_rng(11)
    ts = all_trees(3)
    idx = {t: i for i, t in enumerate(ts)}
    counts = Counter(idx[sample_uniform_tree(3, rng)] for _ in range(5000))
    obs = [counts[i] for i in range(len(ts))]
    assert chisquare(obs).pvalue > 0.001


def test_uniform_sampler_rejects_bad_size(rng):
    with pytest.raises(InadmissibleParameters):
        sample_uniform_tree(-1, rng)


def test_gw_size_law():
    assert gw_size_pmf(0) == Fraction(1, 2)
    assert gw_size_pmf(1) == Fraction(1, 8)
    assert gw_size_pmf(2) == Fraction(2, 32)
    rng = np.random.default_rng(4)
    sizes = []
    for _ in range(20000):
        try:
            sizes.append((sample_gw_contour(rng, 30).shape[0] - 1) // 2)
        except TooLarge:
            sizes.append(-1)
    sizes = np.array(sizes)
    for n in range(3):
        # binomial standard error is below 0.004
        assert abs(np.mean(sizes == n) - float(gw_size_pmf(n))) < 0.015


def test_gw_cap():
    rng = np.random.default_rng(0)
    for _ in range(200):
        try:
            c = sample_gw_contour(rng, 5)
        except TooLarge:
            continue
        assert (c.shape[0] - 1) // 2 <= 5


def capped(sampler, m, seed):
    try:
        return sampler(m, np.random.default_rng(seed), max_edges=20000)
    except TooLarge:
        assume(False)


@given(st.integers(0, 12), st.integers(0, 2 ** 32 - 1))
def test_infinite_truncation_structure(m, seed):
    st_ = capped(sample_infinite_tree_truncation, m, seed)
    t = st_.tree
    assert st_.spine.shape[0] == m + 1 and st_.spine[0] == 0
    for j in range(1, m + 1):
        assert t.parent[st_.spine[j]] == st_.spine[j - 1]
    assert np.array_equal(st_.spine_index[st_.spine], np.arange(m + 1))
    assert st_.spine_index.min() >= 0 and st_.spine_index.max() <= m
    if m:
        assert t.visit[1] == st_.spine[1]  # root edge tau_0 -> tau_{-1}
    assert t.size == m + st_.hanging_sizes.sum()


@given(st.integers(0, 10), st.integers(0, 2 ** 32 - 1))
def test_bi_infinite_truncation_structure(m, seed):
    st_ = capped(sample_bi_infinite_tree_truncation, m, seed)
    t = st_.tree
    assert st_.upper_spine.shape[0] == m
    assert np.all(st_.spine_index[st_.upper_spine] == -1)
    for j in range(1, m + 1):
        assert t.parent[st_.spine[j]] == st_.spine[j - 1]
    if m:
        assert t.visit[1] == st_.spine[1]
        assert t.parent[st_.upper_spine[0]] == 0
    # hanging_sizes covers the lower spine only
    assert t.size >= 2 * m + st_.hanging_sizes.sum()


def test_spine_tree_size_cap():
    rng = np.random.default_rng(2)
    for _ in range(50):
        try:
            s = sample_infinite_tree_truncation(5, rng, max_edges=40)
        except TooLarge:
            continue
        assert s.tree.size <= 40


@pytest.mark.parametrize("kind", CONTOUR_KINDS)
def test_contour_processes(kind, rng):
    p = sample_contour_process(kind, 50, rng)
    v = p.values
    assert np.all(np.abs(np.diff(v)) == 1)
    assert p.at(0) == 0
    if kind == "excursion":
        assert v.min() == 0 and v[-1] == 0 and v.shape[0] == 101
    if kind == "bessel_like":
        assert np.all(v[1:] >= 1)
    if kind == "two_sided":
        assert v.shape[0] == 101


def test_contour_process_errors(rng):
    with pytest.raises(InadmissibleParameters):
        sample_contour_process("brownian", 5, rng)
    with pytest.raises(InadmissibleParameters):
        sample_contour_process("excursion", 0, rng)


@pytest.mark.parametrize("k, j", [(4, 2), (5, 3), (6, 3), (6, 6)])
def test_exploration_law_is_exact(k, j):
    """Pushing the uniform law through the exploration gives C_{k-r}/C_k per outcome."""
    outcomes = Counter()
    rep = {}
    for t in all_trees(k):
        mt = explore_tree(t, j)
        outcomes[mt.key()] += 1
        rep[mt.key()] = mt
    total = Fraction(0)
    for key, n in outcomes.items():
        p = exploration_probability(rep[key], k)
        assert Fraction(n, catalan(k)) == p
        total += p
    assert total == 1


def test_exploration_rejects_inconsistent_outcomes():
    t = all_trees(5)[3]
    mt = explore_tree(t, 2)
    bad = MarkedTree(mt.tree, mt.marked_vertex, mt.marked_time, mt.size + 1, mt.radius, mt.whole, mt.target_size)
    with pytest.raises(InadmissibleMarkedTree):
        exploration_probability(bad, 5)
    with pytest.raises(InadmissibleParameters):
        explore_tree(t, 0)


@given(st.integers(2, 40), st.integers(0, 2 ** 32 - 1), st.data())
def test_exploration_retains_at_least_j(k, seed, data):
    t = tree_of(dyck(seed, k))
    j = data.draw(st.integers(1, k))
    mt = explore_tree(t, j)
    assert mt.size >= j
    exploration_probability(mt, k)  # admissible by construction
