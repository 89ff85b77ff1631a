import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.stats import chisquare

from tdquad.enumeration import enumerate_general_boundary_quads, enumerate_simple_boundary_quads
from tdquad.errors import AcceptanceTooLow, ArcTooLarge, EmptyLeftover, InadmissibleParameters, TooLarge
from tdquad.maps import bfs_distances, faces
from tdquad.quads import (as_simple, check_quadrangulation, explore_boundary, extract_simple_core, general_count,
                          log_q_asymptotic, q_asymptotic, reassemble, sample_general_boundary_quad,
                          sample_simple_boundary_quad, simple_count)

SMALL = [(f, p) for f in range(4) for p in range(1, 7) if 2 * f + p <= 8]


@pytest.mark.parametrize("f, p", SMALL)
def test_counts_match_enumeration(f, p):
    assert len(enumerate_general_boundary_quads(f, p)) == general_count(f, p)
    assert len(enumerate_simple_boundary_quads(f, p)) == simple_count(f, p)


def test_known_small_counts():
    # a single edge, the unique quadrilateral, the two maps with a 2-gon boundary
    assert general_count(0, 1) == 1
    assert simple_count(1, 2) == 1
    assert simple_count(1, 1) == 2
    assert simple_count(2, 4) == 0 and general_count(-1, 2) == 0


def test_enumeration_guard():
    with pytest.raises(TooLarge):
        enumerate_general_boundary_quads(6, 2)


def test_enumerated_maps_are_distinct_quadrangulations():
    maps = enumerate_simple_boundary_quads(3, 2)
    assert len(set(maps)) == len(maps)
    for m in maps:
        q = as_simple(m)
        check_quadrangulation(q)
        assert q.internal_faces == 3 and q.half_perimeter == 2


def test_asymptotic_approaches_exact_count():
    # relative error of the leading-order formula shrinks as f grows with l ~ sqrt f
    errs = []
    for f in (400, 1600, 6400):
        l = int(np.sqrt(f))
        errs.append(abs(log_q_asymptotic(f, l) - math.log(simple_count(f, l))))
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 0.05
    with pytest.raises(InadmissibleParameters):
        q_asymptotic(0, 1)


@given(st.integers(0, 40), st.integers(1, 10), st.integers(0, 2 ** 32 - 1))
def test_general_sampler_output_is_valid(f, p, seed):
    q = sample_general_boundary_quad(f, p, np.random.default_rng(seed))
    q.map.validate()
    check_quadrangulation(q)
    assert q.boundary.shape[0] == 2 * p
    assert faces(q.map).count == f + 1


def test_general_sampler_is_uniform():
    rng = np.random.default_rng(17)
    keys = {m.canonical_key(): i for i, m in enumerate(enumerate_general_boundary_quads(2, 2))}
    counts = Counter(keys[sample_general_boundary_quad(2, 2, rng).map.canonical_key()] for _ in range(27000))
    assert len(counts) == len(keys)
    assert chisquare([counts[i] for i in range(len(keys))]).pvalue > 0.001


def test_simple_sampler_is_uniform_at_exact_size():
    rng = np.random.default_rng(23)
    keys = {m.canonical_key(): i for i, m in enumerate(enumerate_simple_boundary_quads(3, 2))}
    counts = Counter()
    for _ in range(4500):
        q = sample_simple_boundary_quad(3, 2, 0.0, rng)
        counts[keys[q.map.canonical_key()]] += 1
    assert chisquare([counts[i] for i in range(len(keys))]).pvalue > 0.001


@given(st.integers(0, 2 ** 32 - 1))
def test_simple_sampler_window(seed):
    rng = np.random.default_rng(seed)
    q = sample_simple_boundary_quad(400, 20, 0.3, rng)
    assert 280 <= q.internal_faces <= 520 and 14 <= q.half_perimeter <= 26
    assert q.is_simple()
    check_quadrangulation(q)
    assert q.attempts >= 1


def test_simple_sampler_errors(rng):
    with pytest.raises(InadmissibleParameters):
        sample_simple_boundary_quad(10, 3, -0.1, rng)
    with pytest.raises(InadmissibleParameters):
        sample_simple_boundary_quad(2, 5, 0.0, rng)
    with pytest.raises(AcceptanceTooLow):
        sample_simple_boundary_quad(5000, 60, 0.0, rng, max_attempts=2)


@given(st.integers(1, 60), st.integers(1, 8), st.integers(0, 2 ** 32 - 1))
def test_core_round_trip(f, p, seed):
    q = sample_general_boundary_quad(f, p, np.random.default_rng(seed))
    core, pruned = extract_simple_core(q)
    assert core.is_simple()
    check_quadrangulation(core)
    assert reassemble(core, pruned) == q.map


@given(st.integers(0, 2 ** 32 - 1), st.integers(0, 3), st.integers(0, 3))
def test_boundary_exploration_invariants(seed, a, b):
    q = sample_simple_boundary_quad(300, 15, 0.3, np.random.default_rng(seed))
    m = q.map
    bv = q.boundary_vertices()
    L = q.boundary.shape[0]
    prev_area = None
    for r in range(3):
        ex = explore_boundary(q, a, b, r)
        assert ex.retained_vertices[bv[np.arange(-a, b + 1) % L]].all()
        dist = bfs_distances(m, [m.origin[m.root]])
        # the ball of the stopping radius is retained
        assert ex.retained_vertices[dist <= ex.radius].all()
        if prev_area is not None:
            assert ex.leftover_area <= prev_area
        prev_area = ex.leftover_area
        assert ex.empty == (ex.leftover_area == 0)


def test_boundary_exploration_errors():
    q = sample_simple_boundary_quad(30, 4, 0.3, np.random.default_rng(1))
    L = q.boundary.shape[0]
    with pytest.raises(ArcTooLarge):
        explore_boundary(q, L, 0, 0)
    ex = explore_boundary(q, 0, 0, 100)
    assert ex.empty
    with pytest.raises(EmptyLeftover):
        explore_boundary(q, 0, 0, 100, strict=True)
