"""Rooted planar maps as rotation systems.

A map is stored as three integer arrays over half-edges: ``twin``,
``next_at_vertex`` (counter-clockwise successor around the origin) and
``origin``. Faces are the cycles of ``face_next(e) = next_at_vertex(twin(e))``;
with counter-clockwise rotations this walks each face with the face on the
right of every half-edge, so the face lying to the left of the root half-edge
is the cycle through ``twin(root)``.
"""
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import _kernels as K
from .errors import (
    BrokenInvolution,
    BrokenRotation,
    Disconnected,
    EmptySourceSet,
    MapError,
    NonPlanar,
)


def _frozen(a):
    a = np.ascontiguousarray(a, dtype=np.int64)
    a.setflags(write=False)
    return a


class HalfEdgeMap:
    """Immutable rooted planar map.

    Construct through :func:`build_map` for untrusted tables; the library's
    own constructions call ``HalfEdgeMap(..., check=False)`` and are covered
    by the test-suite validations instead.
    """

    __slots__ = ("twin", "next_at_vertex", "origin", "root", "vertex_count", "_cache")

    def __init__(self, twin, next_at_vertex, origin, root, vertex_count, check=True):
        self.twin = _frozen(twin)
        self.next_at_vertex = _frozen(next_at_vertex)
        self.origin = _frozen(origin)
        self.root = int(root)
        self.vertex_count = int(vertex_count)
        self._cache = {}
        if check:
            self.validate()

    # basic sizes
    @property
    def n_half_edges(self):
        return self.twin.shape[0]

    @property
    def n_edges(self):
        return self.twin.shape[0] // 2

    @property
    def face_next(self):
        fn = self._cache.get("face_next")
        if fn is None:
            fn = _frozen(self.next_at_vertex[self.twin])
            self._cache["face_next"] = fn
        return fn

    def target(self, h):
        return self.origin[self.twin[h]]

    def validate(self):
        """Check every structural invariant; raise the matching error."""
        twin, nxt, org = self.twin, self.next_at_vertex, self.origin
        n = twin.shape[0]
        V = self.vertex_count
        if n == 0:
            if V != 1:
                raise MapError("an empty half-edge table encodes the one-vertex map only")
            return
        if n % 2:
            raise BrokenInvolution("odd number of half-edges")
        if not (0 <= self.root < n):
            raise MapError(f"root {self.root} out of range")
        if twin.min() < 0 or twin.max() >= n:
            raise BrokenInvolution("twin id out of range")
        idx = np.arange(n)
        if np.any(twin[twin] != idx) or np.any(twin == idx):
            raise BrokenInvolution("twin is not a fixed-point-free involution")
        if nxt.min() < 0 or nxt.max() >= n or np.unique(nxt).shape[0] != n:
            raise BrokenRotation("next_at_vertex is not a permutation")
        if org.min() < 0 or org.max() >= V:
            raise BrokenRotation("origin id out of range")
        if np.any(org[nxt] != org):
            raise BrokenRotation("next_at_vertex leaves the origin vertex")
        lab, _, off = K.cycle_decomposition(nxt)
        ncyc = off.shape[0] - 1
        if ncyc != V or np.unique(org).shape[0] != V:
            raise BrokenRotation("rotation is not a single cycle per vertex")
        if np.any(bfs_distances(self, [0], check=False) < 0):
            raise Disconnected("map is not connected")
        F = faces(self).count
        if V - n // 2 + F != 2:
            raise NonPlanar(f"Euler characteristic {V - n // 2 + F} != 2")

    def adjacency(self):
        """CSR adjacency (offsets, neighbours), one entry per half-edge."""
        adj = self._cache.get("adj")
        if adj is None:
            order = np.argsort(self.origin, kind="stable")
            counts = np.bincount(self.origin, minlength=self.vertex_count)
            offsets = np.zeros(self.vertex_count + 1, np.int64)
            np.cumsum(counts, out=offsets[1:])
            nbrs = self.origin[self.twin[order]]
            adj = (offsets, np.ascontiguousarray(nbrs), order)
            self._cache["adj"] = adj
        return adj

    def degrees(self):
        return np.bincount(self.origin, minlength=self.vertex_count)

    def canonical_key(self):
        """Bytes identifying the rooted map up to root-preserving isomorphism."""
        key = self._cache.get("key")
        if key is None:
            if self.n_half_edges == 0:
                key = b""
            else:
                new = K.canonical_relabel(self.twin, self.next_at_vertex, self.root)
                inv = np.argsort(new)
                t = new[self.twin[inv]]
                x = new[self.next_at_vertex[inv]]
                key = np.concatenate([t, x]).astype(np.int32).tobytes()
            self._cache["key"] = key
        return key

    def relabelled(self):
        """Copy with half-edges and vertices renumbered canonically from the root."""
        if self.n_half_edges == 0:
            return self
        new = K.canonical_relabel(self.twin, self.next_at_vertex, self.root)
        inv = np.argsort(new)
        t = new[self.twin[inv]]
        x = new[self.next_at_vertex[inv]]
        return from_rotation(t, x, 0)

    def __eq__(self, other):
        return isinstance(other, HalfEdgeMap) and self.canonical_key() == other.canonical_key()

    def __hash__(self):
        return hash(self.canonical_key())

    def __repr__(self):
        return f"HalfEdgeMap(V={self.vertex_count}, E={self.n_edges}, root={self.root})"


def vertex_map():
    """The map with one vertex and no edges (radius-0 balls)."""
    e = np.zeros(0, np.int64)
    return HalfEdgeMap(e, e, e, -1, 1, check=False)


def from_rotation(twin, next_at_vertex, root, check=False):
    """Map from twin and rotation arrays; vertices numbered by smallest half-edge."""
    twin = np.asarray(twin, np.int64)
    nxt = np.asarray(next_at_vertex, np.int64)
    lab, _, off = K.cycle_decomposition(nxt)
    return HalfEdgeMap(twin, nxt, lab, root, off.shape[0] - 1, check=check)


def from_face_permutation(twin, face_next, root, check=False):
    """Map from twin and face successor arrays (inverts face_next = next o twin)."""
    twin = np.asarray(twin, np.int64)
    fn = np.asarray(face_next, np.int64)
    return from_rotation(twin, fn[twin], root, check=check)


def build_map(half_edge_table, root, vertex_count):
    """Validate a raw table of ``(twin, next_at_vertex, origin)`` records.

    Rows may also carry a leading id column ``(id, twin, next, origin)``; ids
    must then be 0..n-1 in any order. Vertices are renumbered by first
    appearance along the half-edge ids, so serialization is reproducible.
    """
    tab = np.asarray(half_edge_table, dtype=np.int64)
    if tab.ndim != 2 or tab.shape[0] == 0:
        raise MapError("half-edge table must be a nonempty 2-d table")
    if tab.shape[1] == 4:
        ids = tab[:, 0]
        if not np.array_equal(np.sort(ids), np.arange(tab.shape[0])):
            raise MapError("half-edge ids must be 0..n-1")
        tab = tab[np.argsort(ids), 1:]
    if tab.shape[1] != 3:
        raise MapError("records must be (twin, next_at_vertex, origin)")
    if tab.shape[0] % 2:
        raise BrokenInvolution("odd number of half-edges")
    org = tab[:, 2]
    if org.min() < 0 or org.max() >= vertex_count:
        raise BrokenRotation("origin id out of range")
    _, first = np.unique(org, return_index=True)
    relabel = np.full(int(vertex_count), -1, np.int64)
    used = np.unique(org)
    relabel[used[np.argsort(first)]] = np.arange(used.shape[0])
    if used.shape[0] != vertex_count:
        raise BrokenRotation("some vertex has no half-edge")
    return HalfEdgeMap(tab[:, 0], tab[:, 1], relabel[org], root, vertex_count, check=True)


@dataclass(frozen=True, eq=False)
class FaceDecomposition:
    """Face cycles stored CSR-style: face i is order[offsets[i]:offsets[i+1]]."""

    face_of: np.ndarray
    order: np.ndarray
    offsets: np.ndarray
    root_face: int

    @property
    def count(self):
        return self.offsets.shape[0] - 1

    @property
    def degrees(self):
        return np.diff(self.offsets)

    def face(self, i):
        return self.order[self.offsets[i]:self.offsets[i + 1]]

    @property
    def faces(self):
        return [self.face(i) for i in range(self.count)]


def faces(m: HalfEdgeMap) -> FaceDecomposition:
    fd = m._cache.get("faces")
    if fd is None:
        if m.n_half_edges == 0:
            z = np.zeros(0, np.int64)
            fd = FaceDecomposition(z, z, np.zeros(2, np.int64), 0)
        else:
            lab, order, off = K.cycle_decomposition(m.face_next)
            fd = FaceDecomposition(lab, order, off, int(lab[m.twin[m.root]]))
        m._cache["faces"] = fd
    return fd


def bfs_distances(m: HalfEdgeMap, sources, check=True):
    """Hop distance from every vertex to the nearest source."""
    src = np.atleast_1d(np.asarray(sources, np.int64))
    if src.size == 0:
        raise EmptySourceSet("bfs needs at least one source")
    if check and (src.min() < 0 or src.max() >= m.vertex_count):
        raise MapError("source vertex out of range")
    if m.n_half_edges == 0:
        return np.zeros(1, np.int64)
    off, nbrs, _ = m.adjacency()
    return K.bfs_csr(off, nbrs, src, m.vertex_count)


def bfs_within(m: HalfEdgeMap, sources, allowed):
    """BFS using only vertices flagged in the boolean mask ``allowed``."""
    src = np.atleast_1d(np.asarray(sources, np.int64))
    if src.size == 0:
        raise EmptySourceSet("bfs needs at least one source")
    off, nbrs, _ = m.adjacency()
    return K.bfs_csr_masked(off, nbrs, src, np.asarray(allowed, np.bool_), m.vertex_count)


def induced_submap(m: HalfEdgeMap, keep_vertex, root):
    """Submap on the vertices flagged in ``keep_vertex`` with inherited rotations.

    Returns (submap, vertex ids of the submap in the parent map, half-edge ids
    in the parent). ``root`` is a parent half-edge with both ends kept.
    """
    keep_vertex = np.asarray(keep_vertex, bool)
    keep = keep_vertex[m.origin] & keep_vertex[m.origin[m.twin]]
    if not keep.any():
        return vertex_map(), np.nonzero(keep_vertex)[0][:1], np.zeros(0, np.int64)
    old = np.nonzero(keep)[0]
    new = np.full(m.n_half_edges, -1, np.int64)
    new[old] = np.arange(old.shape[0])
    # the restricted rotation skips removed half-edges around each vertex
    nxt = np.empty(old.shape[0], np.int64)
    for i, h in enumerate(old):
        g = m.next_at_vertex[h]
        while not keep[g]:
            g = m.next_at_vertex[g]
        nxt[i] = new[g]
    sub = from_rotation(new[m.twin[old]], nxt, new[root])
    vid = np.empty(sub.vertex_count, np.int64)
    vid[sub.origin] = m.origin[old]
    return sub, vid, old


@dataclass(frozen=True, eq=False)
class DecoratedBall:
    submap: HalfEdgeMap
    radius: int
    truncated_curve: np.ndarray
    vertex_ids: np.ndarray  # parent id of each submap vertex

    def parent_curve(self):
        return self.vertex_ids[self.truncated_curve]


def truncate_curve(dist, curve, r, cyclic=False):
    """Freeze a vertex sequence once it is about to leave the radius-r ball.

    ``dist`` holds distances to the root and ``curve[0]`` is the root. The
    forward part stops at the last point before its first exit; with
    ``cyclic`` the sequence also runs backwards from index 0 (index -1 is the
    last entry) and is frozen the same way in that direction.
    """
    curve = np.asarray(curve, np.int64)
    inside = dist[curve] <= r
    out = curve.copy()
    L = curve.shape[0]
    exits = np.nonzero(~inside)[0]
    fwd_stop = exits[0] - 1 if exits.size else L - 1
    if not cyclic:
        out[fwd_stop + 1:] = curve[fwd_stop]
        return out
    bwd = np.nonzero(~inside[::-1])[0]  # offsets 0 -> index L-1
    bwd_stop = L - bwd[0] if bwd.size else 1  # first index still inside going backwards
    if fwd_stop >= bwd_stop - 1:
        return out
    out[fwd_stop + 1:(fwd_stop + bwd_stop) // 2 + 1] = curve[fwd_stop]
    out[(fwd_stop + bwd_stop) // 2 + 1:bwd_stop] = curve[bwd_stop % L]
    return out


def truncated_ball(m: HalfEdgeMap, curve: Sequence[int], r: int, cyclic: bool = False) -> DecoratedBall:
    """Ball of radius r around the root vertex with its truncated curve.

    The ball is the submap induced on vertices at distance <= r from the root
    vertex; its metric is the graph metric of that submap. The curve is
    expressed in the submap's vertex ids.
    """
    if r < 0:
        raise MapError("radius must be nonnegative")
    curve = np.asarray(curve, np.int64)
    if curve.size and (curve.min() < 0 or curve.max() >= m.vertex_count):
        raise MapError("curve vertex out of range")
    rootv = m.origin[m.root] if m.n_half_edges else 0
    dist = bfs_distances(m, [rootv])
    tc = truncate_curve(dist, curve, r, cyclic) if curve.size else curve
    inball = dist <= r
    if r == 0 or m.n_half_edges == 0:
        sub, vid = vertex_map(), np.array([rootv])
    else:
        sub, vid, _ = induced_submap(m, inball, m.root)
    back = np.full(m.vertex_count, -1, np.int64)
    back[vid] = np.arange(vid.shape[0])
    return DecoratedBall(sub, int(r), back[tc], vid)


def boundary_cycle(m: HalfEdgeMap, start: Optional[int] = None):
    """Half-edges of the root face in face order, starting at twin(root)."""
    fd = faces(m)
    h0 = m.twin[m.root] if start is None else start
    cyc = fd.face(fd.face_of[h0])
    i = int(np.nonzero(cyc == h0)[0][0])
    return np.roll(cyc, -i)
