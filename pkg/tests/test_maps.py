import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import bfs_oracle
from tdquad.errors import BrokenInvolution, BrokenRotation, Disconnected, EmptySourceSet, MapError, NonPlanar
from tdquad.maps import (HalfEdgeMap, bfs_distances, build_map, faces, from_face_permutation, truncate_curve,
                         truncated_ball, vertex_map)
from tdquad.quads import sample_general_boundary_quad
from tdquad.trees import all_trees, tree_map


def square():
    """One quadrilateral: 4 vertices, 4 edges, 2 faces."""
    # half-edge 2i goes i -> i+1 around the cycle, 2i+1 is its twin
    twin = np.arange(8) ^ 1
    nxt = np.empty(8, np.int64)
    org = np.empty(8, np.int64)
    for i in range(4):
        out, back = 2 * i, 2 * ((i - 1) % 4) + 1
        org[out] = i
        org[back] = i
        nxt[out], nxt[back] = back, out
    return HalfEdgeMap(twin, nxt, org, 0, 4)


def relabel(m, perm):
    inv = np.argsort(perm)
    twin = perm[m.twin[inv]]
    nxt = perm[m.next_at_vertex[inv]]
    return HalfEdgeMap(twin, nxt, m.origin[inv], perm[m.root], m.vertex_count)


def test_square_faces_and_euler():
    m = square()
    fd = faces(m)
    assert fd.count == 2
    assert sorted(fd.degrees.tolist()) == [4, 4]
    assert m.vertex_count - m.n_edges + fd.count == 2


def test_face_next_is_next_after_twin():
    m = square()
    assert np.array_equal(m.face_next, m.next_at_vertex[m.twin])


def test_build_map_accepts_id_column_in_any_order():
    m = square()
    rows = np.column_stack([np.arange(8), m.twin, m.next_at_vertex, m.origin])[::-1]
    m2 = build_map(rows, 0, 4)
    assert m2 == m


@pytest.mark.parametrize("mutate, err", [
    (lambda t, n, o: (np.roll(t, 1), n, o), BrokenInvolution),
    (lambda t, n, o: (t, np.zeros_like(n), o), BrokenRotation),
    (lambda t, n, o: (t, n, np.where(o == 3, 9, o)), BrokenRotation),
])
def test_build_map_rejects_broken_tables(mutate, err):
    m = square()
    t, n, o = mutate(m.twin.copy(), m.next_at_vertex.copy(), m.origin.copy())
    with pytest.raises(err):
        build_map(np.column_stack([t, n, o]), 0, 4)


def test_disconnected_and_nonplanar_are_rejected():
    # two separate edges
    twin = np.array([1, 0, 3, 2])
    nxt = np.arange(4)
    with pytest.raises(Disconnected):
        HalfEdgeMap(twin, nxt, np.arange(4), 0, 4)
    # one vertex with two loops interleaved: a torus
    twin = np.array([2, 3, 0, 1])
    with pytest.raises(NonPlanar):
        HalfEdgeMap(twin, np.array([1, 2, 3, 0]), np.zeros(4), 0, 1)


def test_odd_table_rejected():
    with pytest.raises(BrokenInvolution):
        build_map([[0, 0, 0]], 0, 1)


def test_canonical_key_ignores_ids_but_sees_root():
    m = square()
    perm = np.random.default_rng(3).permutation(8)
    assert relabel(m, perm).canonical_key() == m.canonical_key()
    t = all_trees(3)[1]
    tm = tree_map(t)
    moved = HalfEdgeMap(tm.twin, tm.next_at_vertex, tm.origin, 1, tm.vertex_count)
    assert moved.canonical_key() != tm.canonical_key()


@given(st.integers(0, 12), st.integers(1, 6), st.integers(0, 2 ** 32 - 1))
def test_relabelling_invariance(f, p, seed):
    rng = np.random.default_rng(seed)
    q = sample_general_boundary_quad(f, p, rng)
    perm = rng.permutation(q.map.n_half_edges)
    assert relabel(q.map, perm) == q.map
    assert q.map.relabelled() == q.map


@given(st.integers(0, 25), st.integers(1, 8), st.integers(0, 2 ** 32 - 1))
def test_bfs_matches_oracle(f, p, seed):
    rng = np.random.default_rng(seed)
    m = sample_general_boundary_quad(f, p, rng).map
    s = int(rng.integers(m.vertex_count))
    assert np.array_equal(bfs_distances(m, [s]), bfs_oracle(m, s))


def test_multi_source_bfs_is_min_of_single():
    m = sample_general_boundary_quad(30, 4, np.random.default_rng(1)).map
    a, b = 0, m.vertex_count - 1
    both = bfs_distances(m, [a, b])
    assert np.array_equal(both, np.minimum(bfs_distances(m, [a]), bfs_distances(m, [b])))


def test_bfs_errors():
    m = square()
    with pytest.raises(EmptySourceSet):
        bfs_distances(m, [])
    with pytest.raises(MapError):
        bfs_distances(m, [7])


def test_from_face_permutation_round_trip():
    m = square()
    m2 = from_face_permutation(m.twin, m.face_next, m.root)
    assert m2 == m


def test_truncate_curve_freezes_at_exit():
    dist = np.array([0, 1, 2, 3, 2, 1])
    curve = np.arange(6)
    assert truncate_curve(dist, curve, 2).tolist() == [0, 1, 2, 2, 2, 2]
    # cyclic: backwards from index 0 the curve stays inside until index 4
    assert truncate_curve(dist, curve, 2, cyclic=True).tolist() == [0, 1, 2, 2, 4, 5]


def test_truncated_ball_radius_zero_and_full():
    q = sample_general_boundary_quad(20, 3, np.random.default_rng(5))
    m = q.map
    curve = m.origin[q.boundary]
    b0 = truncated_ball(m, curve, 0)
    assert b0.submap.vertex_count == 1
    big = truncated_ball(m, curve, 10 ** 6)
    assert big.submap.vertex_count == m.vertex_count
    assert np.array_equal(big.parent_curve(), curve)


def test_ball_is_induced_and_within_radius():
    q = sample_general_boundary_quad(60, 4, np.random.default_rng(8))
    m = q.map
    d = bfs_distances(m, [m.origin[m.root]])
    b = truncated_ball(m, m.origin[q.boundary], 3)
    assert set(b.vertex_ids.tolist()) == set(np.nonzero(d <= 3)[0].tolist())
    assert b.submap.vertex_count - b.submap.n_edges + faces(b.submap).count == 2


def test_vertex_map():
    v = vertex_map()
    assert v.vertex_count == 1 and v.n_half_edges == 0
