"""Exhaustive enumeration of small quadrangulations with a boundary.

Maps are built by gluing polygon sides: a 2p-gon for the root face and f
squares. The first open side (in creation order) is always glued next, either
to another open side of the same hole or to side 0 of a fresh square, so each
rooted map arises from exactly one gluing sequence. Gluing two sides of the
same hole keeps the surface planar; holes of odd length can never close and
are pruned. In simple mode, a union-find over polygon corners (with rollback)
prunes any gluing that identifies two corners of the boundary polygon.
"""
import numpy as np

from .errors import TooLarge
from .maps import HalfEdgeMap, from_face_permutation

MAX_EDGES = 12


class _UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))
        self.size = [1] * n
        self.history = []

    def find(self, a):
        while self.parent[a] != a:
            a = self.parent[a]
        return a

    def union(self, a, b):
        a, b = self.find(a), self.find(b)
        if a == b:
            self.history.append(None)
            return a, a
        if self.size[a] < self.size[b]:
            a, b = b, a
        self.parent[b] = a
        self.size[a] += self.size[b]
        self.history.append((a, b))
        return a, b

    def rollback(self, count):
        for _ in range(count):
            h = self.history.pop()
            if h is not None:
                a, b = h
                self.parent[b] = b
                self.size[a] -= self.size[b]


def _enumerate(f, p, simple):
    nsides = 2 * p + 4 * f
    fnext = list(range(nsides))
    for i in range(2 * p):
        fnext[i] = (i + 1) % (2 * p)
    for j in range(f):
        b = 2 * p + 4 * j
        for r in range(4):
            fnext[b + r] = b + (r + 1) % 4
    twin = [-1] * nsides
    uf = _UnionFind(nsides)  # corner i = start vertex of side i
    boundary_root = [0] * nsides  # boundary corner count in each class
    for i in range(2 * p):
        boundary_root[i] = 1
    out = []

    def hole_next(s):
        x = fnext[s]
        while twin[x] >= 0:
            x = fnext[twin[x]]
        return x

    def hole_of(s):
        cyc = [s]
        x = hole_next(s)
        while x != s:
            cyc.append(x)
            x = hole_next(x)
        return cyc

    def glue(a, b):
        """Pair sides a and b; returns False (after rollback) if pruned."""
        twin[a] = b
        twin[b] = a
        done = 0
        ok = True
        for x, y in ((a, fnext[b]), (fnext[a], b)):
            rx, ry = uf.find(x), uf.find(y)
            if simple and rx != ry and boundary_root[rx] and boundary_root[ry]:
                ok = False
                break
            r, o = uf.union(x, y)
            done += 1
            if r != o:
                boundary_root[r] += boundary_root[o]
        if ok:
            return done
        _unglue(a, b, done)
        return -1

    def _unglue(a, b, done):
        for _ in range(done):
            h = uf.history[-1]
            if h is not None:
                r, o = h
                boundary_root[r] -= boundary_root[o]
            uf.rollback(1)
        twin[a] = -1
        twin[b] = -1

    def holes_even(sides):
        seen = set()
        for s in sides:
            if s in seen or twin[s] >= 0:
                continue
            cyc = hole_of(s)
            seen.update(cyc)
            if len(cyc) % 2:
                return False
        return True

    def rec(used):
        open_sides = [s for s in range(2 * p + 4 * used) if twin[s] < 0]
        if not open_sides:
            if used == f:
                out.append(list(twin))
            return
        s = open_sides[0]
        for t in hole_of(s)[1:]:
            done = glue(s, t)
            if done < 0:
                continue
            if holes_even(open_sides):
                rec(used)
            _unglue(s, t, done)
        if used < f:
            # the sides of a fresh square are interchangeable: glue its side 0
            base = 2 * p + 4 * used
            done = glue(s, base)
            if done >= 0:
                rec(used + 1)
                _unglue(s, base, done)

    rec(0)
    maps = []
    fn = np.array(fnext, np.int64)
    for tw in out:
        tw = np.array(tw, np.int64)
        maps.append(from_face_permutation(tw, fn, tw[2 * p - 1]))
    return maps


def _guard(f, l):
    if f < 0 or l < 1:
        raise TooLarge(f"invalid sizes ({f}, {l})")
    if 2 * f + l > MAX_EDGES:
        raise TooLarge(f"2f + l = {2 * f + l} exceeds {MAX_EDGES}")


def enumerate_simple_boundary_quads(f: int, l: int):
    """All rooted quadrangulations with simple boundary 2l and f inner faces."""
    _guard(f, l)
    return _enumerate(f, l, simple=True)


def enumerate_general_boundary_quads(f: int, p: int):
    """All rooted quadrangulations with general boundary 2p and f inner faces."""
    _guard(f, p)
    return _enumerate(f, p, simple=False)


def enumerate_quadrangulations(faces_: int):
    """Rooted quadrangulations of the sphere with the given number of faces."""
    if faces_ < 1:
        raise TooLarge("need at least one face")
    return enumerate_general_boundary_quads(faces_ - 1, 2)


def spanning_subtrees(m: HalfEdgeMap, k: int):
    """Edge sets of all k-edge subtrees containing the root edge.

    Each subtree is a sorted tuple of edge ids, the id of the edge carrying
    half-edge h being min(h, twin(h)).
    """
    eid = np.minimum(np.arange(m.n_half_edges), m.twin)
    root_edge = int(eid[m.root])
    ends = {}
    for h in range(m.n_half_edges):
        e = int(eid[h])
        ends[e] = (int(m.origin[h]), int(m.origin[m.twin[h]]))
    out = set()

    def grow(edges, verts):
        if len(edges) == k:
            out.add(tuple(sorted(edges)))
            return
        for e, (u, v) in ends.items():
            if e in edges:
                continue
            if (u in verts) != (v in verts):
                grow(edges | {e}, verts | {u, v})

    u, v = ends[root_edge]
    if u == v:
        return []
    grow(frozenset([root_edge]), frozenset([u, v]))
    return sorted(out)
