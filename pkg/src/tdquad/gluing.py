"""Gluing a plane tree into the boundary of a quadrangulation, and back.

Contour step i (time i to i+1) is laid on boundary side beta_i, which runs
from label i to label i+1. When steps i < j are the two traversals of the
same tree edge, the inner half-edges gamma_i = twin(beta_i) and gamma_j
become twins and the beta's are discarded. Inner faces are untouched, so the
result keeps f faces of degree 4 and boundary labels i, j are identified
exactly when d_C(i, j) = 0.
"""
from collections import deque
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from . import _kernels as K
from .errors import DecorationNotATree, SizeMismatch, WindowTooShort
from .maps import HalfEdgeMap, from_face_permutation
from .quads import SimpleBoundaryQuad, as_simple
from .trees import ContourFunction, PlaneTree, SpineTree, contour_of, first_visit_times, tree_of


@dataclass(frozen=True, eq=False)
class GluingCertificate:
    """``vertex_class_map[i]`` is the glued vertex carrying boundary label i."""

    vertex_class_map: np.ndarray
    class_count: int
    q_to_glued: np.ndarray  # glued vertex of every vertex of q


@dataclass(frozen=True, eq=False)
class TreeDecoratedQuad:
    map: HalfEdgeMap
    tree_half_edges: np.ndarray
    contour_curve: np.ndarray  # vertex at contour times 0..2k-1
    tree: PlaneTree
    tree_vertex: np.ndarray  # map vertex of each tree vertex (preorder)
    hole: Optional[np.ndarray] = None  # unglued boundary sides (extended gluing)
    spine: Optional[np.ndarray] = None  # map vertices of tau_0, tau_{-1}, ...
    vertex_spine_index: Optional[np.ndarray] = None  # per map vertex, -1 off the spine trees

    @property
    def k(self):
        return self.tree.size

    @property
    def internal_faces(self):
        return self.map.n_edges // 2 - (0 if self.hole is None else self.hole.shape[0] // 4)


def _zip(q: SimpleBoundaryQuad, c: np.ndarray):
    m = q.map
    beta = q.boundary
    L = beta.shape[0]
    k = (c.shape[0] - 1) // 2
    if k < 1:
        raise SizeMismatch("the tree needs at least one edge")
    if 2 * k > L:
        raise WindowTooShort(f"tree with {k} edges does not fit a boundary of length {L}")
    steps = np.arange(2 * k)
    side = np.where(steps < k, steps, L - 2 * k + steps)
    partner = K.match_steps(c)
    gam = m.twin[beta]
    if m.n_edges == 1:
        # the single edge with no inner face: both sides of the boundary are the
        # tree edge itself, so the glued map is the edge and it is all decoration
        lab = m.origin[np.roll(gam, 1)]
        d = TreeDecoratedQuad(m, np.array([0, 1]), lab, tree_of(c), lab[[0, 1]])
        return d, GluingCertificate(lab, 2, np.arange(2))
    twin = m.twin.copy()
    twin[gam[side]] = gam[side[partner]]
    fn = m.face_next.copy()
    removed = np.zeros(m.n_half_edges, bool)
    removed[beta[side]] = True
    if L > 2 * k:
        fn[beta[L - k - 1]] = beta[k]
    keep = np.nonzero(~removed)[0]
    new = np.full(m.n_half_edges, -1, np.int64)
    new[keep] = np.arange(keep.shape[0])
    root = new[gam[side[partner[0]]]]
    g = from_face_permutation(new[twin[keep]], new[fn[keep]], root)
    labels = g.origin[new[np.roll(gam, 1)]]  # label i sits at the origin of gamma_{i-1}
    q2g = np.empty(m.vertex_count, np.int64)
    q2g[m.origin[keep]] = g.origin[new[keep]]
    times = np.arange(2 * k + 1)
    time_label = np.where(times <= k, times, L - 2 * k + times) % L
    curve = labels[time_label]
    t = tree_of(c)
    tv = curve[first_visit_times(t)]
    hole = new[beta[k:L - k]] if L > 2 * k else None
    d = TreeDecoratedQuad(g, np.sort(new[gam[side]]), curve[:-1], t, tv, hole)
    cert = GluingCertificate(labels, int(np.unique(labels).shape[0]), q2g)
    return d, cert


def _contour(t) -> np.ndarray:
    if isinstance(t, SpineTree):
        return contour_of(t.tree).values
    if isinstance(t, PlaneTree):
        return contour_of(t).values
    if isinstance(t, ContourFunction):
        return t.values
    return ContourFunction(t).values


def glue(q: SimpleBoundaryQuad, t: Union[PlaneTree, ContourFunction]):
    """Tree-decorated quadrangulation from a simple-boundary quad with l = k."""
    c = _contour(t)
    k = (c.shape[0] - 1) // 2
    if q.half_perimeter != k:
        raise SizeMismatch(f"boundary half-perimeter {q.half_perimeter} != tree size {k}")
    return _zip(q, c)


def glue_extended(q: SimpleBoundaryQuad, t: Union[SpineTree, PlaneTree]):
    """Zip both sides of the contour into the boundary starting at the root edge.

    Times 0..k go to labels 0..k and times 2k..k to labels 0, -1, .., -k; the
    two zips meet at the vertex visited at time k, where the unused arc of the
    boundary (labels k..2l-k) stays open as a face of degree 2(l-k). When
    l = k this is exactly :func:`glue`.
    """
    d, cert = _zip(q, _contour(t))
    if isinstance(t, SpineTree):
        spine = d.tree_vertex[t.spine]
        vsi = np.full(d.map.vertex_count, -1, np.int64)
        vsi[d.tree_vertex] = t.spine_index
        d = TreeDecoratedQuad(d.map, d.tree_half_edges, d.contour_curve, d.tree, d.tree_vertex,
                              d.hole, spine, vsi)
    return d, cert


def tree_contour_half_edges(d: TreeDecoratedQuad) -> np.ndarray:
    """Half-edges e_0..e_{2k-1} of the left-hand walk around the tree in the map."""
    m = d.map
    is_tree = np.zeros(m.n_half_edges, bool)
    is_tree[d.tree_half_edges] = True
    k2 = d.tree_half_edges.shape[0]
    prev = np.empty_like(m.next_at_vertex)
    prev[m.next_at_vertex] = np.arange(m.n_half_edges)
    out = np.empty(k2, np.int64)
    h = m.root
    for i in range(k2):
        out[i] = h
        g = prev[m.twin[h]]
        while not is_tree[g]:
            g = prev[g]
        h = g
    return out


def decorated_key(d: TreeDecoratedQuad) -> bytes:
    """Canonical key of the map together with the decoration."""
    m = d.map
    new = K.canonical_relabel(m.twin, m.next_at_vertex, m.root)
    marks = np.sort(new[d.tree_half_edges]).astype(np.int32).tobytes()
    return m.canonical_key() + b"|" + marks


def _decoration_contour(m: HalfEdgeMap, th: np.ndarray):
    """Check a marked half-edge set is a plane tree through the root; return (walk, heights)."""
    is_tree = np.zeros(m.n_half_edges, bool)
    is_tree[th] = True
    if th.shape[0] == 0 or not is_tree[m.root] or not np.all(is_tree[m.twin[th]]):
        raise DecorationNotATree("decoration must contain the root edge and be closed under twin")
    k = th.shape[0] // 2
    verts = np.unique(m.origin[th])
    if verts.shape[0] != k + 1:
        raise DecorationNotATree("decoration has a cycle or is disconnected")
    probe = TreeDecoratedQuad(m, th, None, None, None)
    e = tree_contour_half_edges(probe)
    seen = {int(m.origin[e[0]]): 0}
    c = np.zeros(2 * k + 1, np.int64)
    for i in range(2 * k):
        v = int(m.origin[m.twin[e[i]]])
        if v in seen:
            c[i + 1] = c[i] - 1
            if seen[v] != c[i + 1]:
                raise DecorationNotATree("decoration is not a tree")
        else:
            c[i + 1] = c[i] + 1
            seen[v] = c[i + 1]
    if len(seen) != k + 1 or c[-1] != 0:
        raise DecorationNotATree("contour walk did not close")
    return e, c


def decorate(m: HalfEdgeMap, tree_half_edges) -> TreeDecoratedQuad:
    """Tree-decorated quad from a map and its marked tree half-edges."""
    th = np.sort(np.asarray(tree_half_edges, np.int64))
    e, c = _decoration_contour(m, th)
    curve = m.origin[e]
    t = tree_of(c)
    return TreeDecoratedQuad(m, th, curve, t, curve[first_visit_times(t)])


def cut(d: TreeDecoratedQuad):
    """Unfold the decoration into a boundary; inverse of :func:`glue`."""
    m = d.map
    if d.hole is not None:
        raise DecorationNotATree("cannot cut an extended gluing with an open boundary")
    e, c = _decoration_contour(m, np.asarray(d.tree_half_edges, np.int64))
    k = e.shape[0] // 2
    if m.n_edges == 1:
        return as_simple(m), tree_of(c)
    n = m.n_half_edges
    gam = m.twin[e]
    beta = n + np.arange(2 * k)
    twin = np.concatenate([m.twin, gam])
    twin[gam] = beta
    fn = np.concatenate([m.face_next, np.roll(beta, -1)])
    qm = from_face_permutation(twin, fn, gam[-1])
    return as_simple(qm), tree_of(c)


def quotient_chain_distance(q: SimpleBoundaryQuad, cert: GluingCertificate, x: int, y: int) -> int:
    """Distance between glued vertices x and y computed inside q.

    Paths alternate geodesic moves in q with free jumps between boundary
    vertices of the same class, found by a 0-1 breadth-first search.
    """
    m = q.map
    if x == y:
        return 0
    bv = q.boundary_vertices()
    cls = cert.vertex_class_map
    members = {}
    for lab, cl in enumerate(cls):
        members.setdefault(int(cl), []).append(int(bv[lab]))
    jump = {}
    for group in members.values():
        for v in group:
            jump[v] = group
    off, nbrs, _ = m.adjacency()
    src = np.nonzero(cert.q_to_glued == x)[0]
    dst = set(np.nonzero(cert.q_to_glued == y)[0].tolist())
    dist = {}
    dq = deque()
    for s in src:
        dist[int(s)] = 0
        dq.append(int(s))
    while dq:
        v = dq.popleft()
        dv = dist[v]
        if v in dst:
            return dv
        for w in jump.get(v, ()):
            if dist.get(w, dv + 1) > dv:
                dist[w] = dv
                dq.appendleft(w)
        for w in nbrs[off[v]:off[v + 1]]:
            w = int(w)
            if dist.get(w, dv + 2) > dv + 1:
                dist[w] = dv + 1
                dq.append(w)
    raise AssertionError("target unreachable")
