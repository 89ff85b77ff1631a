"""Plane trees, contour functions and tree samplers.

Trees are coded by their contour function C: the height of the vertex
visited at each step of the walk around the tree that starts along the root
edge and turns to the next child counter-clockwise after the edge it arrived
by. Vertices are numbered in preorder, so the root is 0.
"""
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import comb
from typing import Optional

import numpy as np

from . import _kernels as K
from .errors import IndexOutOfRange, InadmissibleMarkedTree, InadmissibleParameters, InvalidDyckPath, TooLarge
from .maps import HalfEdgeMap, vertex_map


@lru_cache(maxsize=None)
def catalan(n: int) -> int:
    return comb(2 * n, n) // (n + 1)


def _as_int_array(values):
    a = np.ascontiguousarray(values, dtype=np.int64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ContourFunction:
    values: np.ndarray

    def __post_init__(self):
        v = _as_int_array(self.values)
        object.__setattr__(self, "values", v)
        if v.ndim != 1 or v.shape[0] % 2 == 0:
            raise InvalidDyckPath("a contour has odd length 2k+1")
        if v[0] != 0 or v[-1] != 0:
            raise InvalidDyckPath("contour must start and end at 0")
        if v.shape[0] > 1 and (np.any(np.abs(np.diff(v)) != 1) or v.min() < 0):
            raise InvalidDyckPath("contour steps must be +-1 and stay nonnegative")

    @property
    def edge_count(self):
        return (self.values.shape[0] - 1) // 2

    def __eq__(self, other):
        return isinstance(other, ContourFunction) and np.array_equal(self.values, other.values)

    def __hash__(self):
        return hash(self.values.tobytes())

    def __len__(self):
        return self.values.shape[0]


class PlaneTree:
    """Rooted plane tree with preorder vertex ids and ordered children."""

    __slots__ = ("parent", "_contour", "_children", "_visit")

    def __init__(self, parent, contour=None):
        self.parent = _as_int_array(parent)
        self._contour = contour
        self._children = None
        self._visit = None

    @property
    def size(self):
        return self.parent.shape[0] - 1

    @property
    def root(self):
        return 0

    @property
    def children(self):
        if self._children is None:
            ch = [[] for _ in range(self.parent.shape[0])]
            for v in range(1, self.parent.shape[0]):
                ch[self.parent[v]].append(v)
            self._children = [tuple(c) for c in ch]
        return self._children

    @property
    def visit(self):
        """Vertex visited at each contour time."""
        if self._visit is None:
            _, self._visit = K.contour_to_parent(contour_of(self).values)
        return self._visit

    def depth(self):
        return contour_of(self).values[first_visit_times(self)]

    def __eq__(self, other):
        return isinstance(other, PlaneTree) and contour_of(self) == contour_of(other)

    def __hash__(self):
        return hash(contour_of(self))

    def __repr__(self):
        return f"PlaneTree({to_paren(contour_of(self))})"


def tree_of(c) -> PlaneTree:
    if not isinstance(c, ContourFunction):
        c = ContourFunction(c)
    parent, visit = K.contour_to_parent(c.values)
    t = PlaneTree(parent, c)
    t._visit = visit
    return t


def contour_of(tree: PlaneTree) -> ContourFunction:
    if tree._contour is None:
        ch = tree.children
        vals = [0]
        stack = [(0, 0)]
        while stack:
            v, i = stack.pop()
            if i < len(ch[v]):
                stack.append((v, i + 1))
                stack.append((ch[v][i], 0))
                vals.append(vals[-1] + 1)
            elif v != 0:
                vals.append(vals[-1] - 1)
        tree._contour = ContourFunction(np.array(vals))
    return tree._contour


def first_visit_times(tree: PlaneTree):
    """Contour time of the first visit of each vertex."""
    vis = tree.visit
    first = np.full(tree.size + 1, -1, np.int64)
    # reversed assignment keeps the smallest time for each vertex
    first[vis[::-1]] = np.arange(vis.shape[0])[::-1]
    return first


def to_paren(c) -> str:
    v = c.values if isinstance(c, ContourFunction) else np.asarray(c)
    return "".join("(" if d > 0 else ")" for d in np.diff(v))


def from_paren(s: str) -> ContourFunction:
    s = s.strip()
    if any(ch not in "()" for ch in s):
        raise InvalidDyckPath("parenthesis string may only contain '(' and ')'")
    steps = np.array([1 if ch == "(" else -1 for ch in s], np.int64)
    return ContourFunction(np.concatenate([[0], np.cumsum(steps)]))


def contour_distance(c, i: int, j: int) -> int:
    """d_C(i, j) = C(i) + C(j) - 2 min_{[i ^ j, i v j]} C."""
    v = c.values if isinstance(c, ContourFunction) else np.asarray(c)
    n = v.shape[0]
    if not (0 <= i < n and 0 <= j < n):
        raise IndexOutOfRange(f"times must lie in [0, {n - 1}]")
    lo, hi = (i, j) if i <= j else (j, i)
    return int(v[i] + v[j] - 2 * v[lo:hi + 1].min())


def tree_map(tree: PlaneTree) -> HalfEdgeMap:
    """The tree as a planar map; map vertex ids equal preorder tree ids.

    Edge (parent(v), v) has half-edges 2(v-1) (downwards) and 2(v-1)+1, so the
    root half-edge 0 leads to the first child of the root.
    """
    k = tree.size
    if k == 0:
        return vertex_map()
    twin = np.arange(2 * k) ^ 1
    nxt = np.empty(2 * k, np.int64)
    origin = np.empty(2 * k, np.int64)
    for v, ch in enumerate(tree.children):
        ring = ([2 * (v - 1) + 1] if v else []) + [2 * (c - 1) for c in ch]
        for a, b in zip(ring, ring[1:] + ring[:1]):
            nxt[a] = b
        for h in ring:
            origin[h] = v
    return HalfEdgeMap(twin, nxt, origin, 0, k + 1, check=False)


def all_trees(k: int):
    """Every plane tree with k edges, as contours in lexicographic order."""
    out = []

    def rec(path, ups, h):
        if len(path) == 2 * k + 1:
            out.append(tree_of(np.array(path)))
            return
        if ups < k:
            rec(path + [h + 1], ups + 1, h + 1)
        if h > 0:
            rec(path + [h - 1], ups, h - 1)

    rec([0], 0, 0)
    return out


# samplers

def _uniform_dyck(k, rng):
    steps = np.ones(2 * k + 1, np.int64)
    steps[rng.permutation(2 * k + 1)[: k + 1]] = -1
    s = np.cumsum(steps)
    m = int(np.argmin(s)) + 1  # first time the minimum is reached
    steps = np.roll(steps, -m)[:-1]
    return np.concatenate([[0], np.cumsum(steps)])


def sample_uniform_tree(k: int, rng) -> PlaneTree:
    """Uniform plane tree with k edges by the cycle lemma."""
    if k < 0:
        raise InadmissibleParameters("k must be nonnegative")
    return tree_of(_uniform_dyck(k, rng))


def _srw_until(rng, level, chunk=64, max_len=None):
    """Simple random walk from 0 up to its first visit to ``level`` < 0.

    Returns None once the walk is longer than ``max_len`` without hitting.
    """
    pieces = [np.zeros(1, np.int64)]
    pos = 0
    done = 1
    while True:
        path = pos + np.cumsum(rng.integers(0, 2, size=chunk) * 2 - 1)
        hit = np.flatnonzero(path <= level)
        if hit.size:
            if max_len is not None and done + hit[0] + 1 > max_len:
                return None
            pieces.append(path[: hit[0] + 1])
            return np.concatenate(pieces)
        pieces.append(path)
        done += chunk
        if max_len is not None and done > max_len:
            return None
        pos = int(path[-1])
        chunk = min(chunk * 2, 1 << 22)


def sample_gw_contour(rng, max_edges: Optional[int] = None) -> np.ndarray:
    """Contour of a critical geometric Galton-Watson tree.

    The walk before its first visit to -1 is the contour, so the size law is
    P(k edges) = C_k / 2^(2k+1). The size has infinite mean, so callers that
    can only use small trees pass ``max_edges`` and get TooLarge beyond it.
    """
    w = _srw_until(rng, -1, max_len=None if max_edges is None else 2 * max_edges + 2)
    if w is None:
        raise TooLarge(f"tree larger than {max_edges} edges")
    return w[:-1]


class _Budget:
    """Shared edge budget for the hanging trees of one spine tree."""

    def __init__(self, max_edges):
        self.left = max_edges

    def draw(self, rng):
        c = sample_gw_contour(rng, self.left)
        if self.left is not None:
            self.left -= (c.shape[0] - 1) // 2
        return c


def gw_size_pmf(n: int) -> Fraction:
    return Fraction(catalan(n), 2 ** (2 * n + 1))


@dataclass(frozen=True, eq=False)
class ContourProcess:
    """Lattice path; ``values[origin]`` is time 0 (two-sided paths start at -n)."""

    values: np.ndarray
    kind: str
    origin: int = 0

    def at(self, t):
        return self.values[self.origin + np.asarray(t)]


CONTOUR_KINDS = ("excursion", "two_sided", "bessel_like")


def sample_contour_process(kind: str, n: int, rng) -> ContourProcess:
    """Random-walk proxies for the Brownian contour processes.

    excursion: uniform Dyck path with 2n steps. two_sided: two independent
    simple random walks of n steps glued at time 0. bessel_like: n steps of
    the walk conditioned to stay positive, namely Y(0) = 0 and Y(t) = 1 + Z(t-1)
    where Z is the Doob h-transform of the walk killed at -1 (h(x) = x + 1).
    """
    if n < 1:
        raise InadmissibleParameters("n must be at least 1")
    if kind == "excursion":
        return ContourProcess(_uniform_dyck(n, rng), kind)
    if kind == "two_sided":
        left = np.cumsum(rng.integers(0, 2, size=n) * 2 - 1)
        right = np.cumsum(rng.integers(0, 2, size=n) * 2 - 1)
        vals = np.concatenate([left[::-1], [0], right])
        return ContourProcess(vals, kind, n)
    if kind == "bessel_like":
        z = K.conditioned_walk(rng.random(n - 1))
        return ContourProcess(np.concatenate([[0], 1 + z]), kind)
    raise InadmissibleParameters(f"unknown contour kind {kind!r}; expected one of {CONTOUR_KINDS}")


@dataclass(frozen=True, eq=False)
class SpineTree:
    """Finite truncation of an infinite tree along its spine.

    ``spine[j]`` is tau_{-j}; ``spine_index[v]`` is the j of the spine vertex
    whose hanging trees contain v (or v itself), and -1 for vertices on the
    tau_{+j} side of a bi-infinite truncation, listed in ``upper_spine``.
    """

    tree: PlaneTree
    spine: np.ndarray
    truncation_depth: int
    spine_index: np.ndarray
    hanging_sizes: np.ndarray  # per spine vertex, one column per side
    upper_spine: np.ndarray = field(default_factory=lambda: np.zeros(0, np.int64))

    @property
    def contour(self):
        return contour_of(self.tree)


def _steps(c):
    return np.diff(c)


def _finish_spine_tree(steps, spine_up_steps, m, sizes, upper_up_steps=()):
    c = np.concatenate([[0], np.cumsum(steps)])
    tree = tree_of(c)
    vis = tree.visit
    spine = np.concatenate([[0], vis[np.asarray(spine_up_steps, np.int64) + 1]]).astype(np.int64)
    upper = vis[np.asarray(upper_up_steps, np.int64) + 1] if len(upper_up_steps) else np.zeros(0, np.int64)
    init = np.full(tree.size + 1, -2, np.int64)
    init[spine] = np.arange(m + 1)
    init[upper] = -1
    idx = K.inherit_from_parent(tree.parent, init)
    return SpineTree(tree, spine, m, idx, np.asarray(sizes, np.int64), np.asarray(upper, np.int64))


def sample_infinite_tree_truncation(m: int, rng, max_edges: Optional[int] = None) -> SpineTree:
    """t_inf(m): spine tau_0..tau_{-m}, two independent GW trees per spine vertex.

    Around tau_{-j} the counter-clockwise order after the parent edge is: left
    tree, the next spine vertex, right tree. The root edge is tau_0 -> tau_{-1}.
    With ``max_edges`` the hanging trees stop drawing (TooLarge) as soon as
    the total would exceed it, so conditioning on size costs no memory.
    """
    if m < 0:
        raise InadmissibleParameters("m must be nonnegative")
    budget = _Budget(None if max_edges is None else max_edges - m)
    left, right = [], []
    for _ in range(m + 1):
        left.append(budget.draw(rng))
        right.append(budget.draw(rng))
    # build the steps from the deepest spine vertex upwards
    if m == 0:
        seg = np.concatenate([_steps(right[0]), _steps(left[0])])
    else:
        seg = np.concatenate([_steps(left[m]), _steps(right[m])])
    for j in range(m - 1, -1, -1):
        down = np.concatenate([[1], seg, [-1]])
        if j == 0:
            seg = np.concatenate([down, _steps(right[0]), _steps(left[0])])
        else:
            seg = np.concatenate([_steps(left[j]), down, _steps(right[j])])
    # spine up-steps: tau_{-j} is entered after the left tree of tau_{-(j-1)}
    ups = []
    t = 0
    for j in range(1, m + 1):
        if j > 1:
            t += len(left[j - 1]) - 1
        ups.append(t)
        t += 1
    sizes = np.array([[(len(a) - 1) // 2, (len(b) - 1) // 2] for a, b in zip(left, right)])
    return _finish_spine_tree(seg.astype(np.int64), ups, m, sizes)


def sample_bi_infinite_tree_truncation(m: int, rng, max_edges: Optional[int] = None) -> SpineTree:
    """Two-sided spine tau_m..tau_{-m} with one GW tree per spine vertex.

    All hanging trees lie on the same side of the spine. Rooted at tau_0, the
    children of tau_0 are tau_{-1} (root edge), the tree of tau_0, then tau_1.
    Each GW tree is the excursion of a walk below its running maximum, which is
    the tree decomposition of the conditioned walk ``2M - X`` (discrete Pitman
    theorem), so this matches the h-transform encoding of the negative side.
    """
    if m < 0:
        raise InadmissibleParameters("m must be nonnegative")
    budget = _Budget(None if max_edges is None else max_edges - 2 * m)
    lower = [budget.draw(rng) for _ in range(m + 1)]  # tau_0, tau_{-1}, ...
    upper = [budget.draw(rng) for _ in range(m)]  # tau_1, ...
    # below tau_0: at tau_{-j} the order after the parent is spine child then tree
    seg = _steps(lower[m])
    for j in range(m - 1, 0, -1):
        seg = np.concatenate([[1], seg, [-1], _steps(lower[j])])
    if m == 0:
        steps, ups, uups = _steps(lower[0]), [], []
    else:
        # above tau_0: at tau_j the order after the parent is tree then spine child
        useg = _steps(upper[m - 1])
        for j in range(m - 2, -1, -1):
            useg = np.concatenate([_steps(upper[j]), [1], useg, [-1]])
        steps = np.concatenate([[1], seg, [-1], _steps(lower[0]), [1], useg, [-1]])
        ups = list(range(m))  # tau_{-j} is entered at step j-1
        t = len(seg) + 2 + len(lower[0]) - 1
        uups = []
        for j in range(m):
            uups.append(t)
            t += len(upper[j])
    sizes = np.array([[(len(a) - 1) // 2] for a in lower])
    return _finish_spine_tree(steps.astype(np.int64), ups, m, sizes, uups)


# exploration toward the vertex visited at time k

@dataclass(frozen=True, eq=False)
class MarkedTree:
    """Outcome t_j of the exploration.

    ``marked_vertex`` is the leaf carrying the unexplored subtree and
    ``marked_time`` its contour time; when the whole tree was explored
    (``whole``), the mark is the target vertex and its time is k.
    ``size`` is r_j in edges and ``radius`` the stopping radius m.
    """

    tree: PlaneTree
    marked_vertex: int
    marked_time: int
    size: int
    radius: int
    whole: bool
    target_size: int

    @property
    def marked_corner(self):
        return (self.marked_vertex, 0)

    def key(self):
        return (contour_of(self.tree).values.tobytes(), self.marked_time, self.whole)


def _subtree_sizes(parent):
    n = parent.shape[0]
    size = np.ones(n, np.int64)
    for v in range(n - 1, 0, -1):
        size[parent[v]] += size[v]
    return size - 1  # edges below v


def _ancestors(parent, v):
    path = [v]
    while path[-1] != 0:
        path.append(int(parent[path[-1]]))
    return path[::-1]


def explore_tree(tree: PlaneTree, j: int, target_time: Optional[int] = None) -> MarkedTree:
    """Ball-growth exploration toward v_bar stopped once the retained part has >= j edges.

    t^(m) keeps everything except the subtree hanging below a_{m+1}, the
    (m+1)-th vertex on the path to v_bar; that vertex stays as a marked leaf.
    Once m reaches d(root, v_bar) the whole tree is retained.
    """
    k = tree.size
    if not (1 <= j <= k):
        raise InadmissibleParameters("need 1 <= j <= k")
    tt = k if target_time is None else target_time
    vbar = int(tree.visit[tt])
    path = _ancestors(tree.parent, vbar)
    D = len(path) - 1
    below = _subtree_sizes(tree.parent)
    for m in range(D):
        r = k - int(below[path[m + 1]])
        if r >= j:
            return _cut_below(tree, path[m + 1], r, m, j)
    return MarkedTree(tree, vbar, tt, k, D, True, j)


def _cut_below(tree, a, r, m, j):
    c = contour_of(tree).values
    first = first_visit_times(tree)[a]
    span = 2 * int(_subtree_sizes(tree.parent)[a])
    kept = np.concatenate([c[: first + 1], c[first + span + 1:]])
    t = tree_of(kept)
    return MarkedTree(t, int(t.visit[first]), int(first), r, m, False, j)


def exploration_probability(t_j: MarkedTree, k: int) -> Fraction:
    """P(t_j) = C_{k-r_j} / C_k after checking that t_j is a possible outcome."""
    _check_admissible(t_j, k)
    return Fraction(catalan(k - t_j.size), catalan(k))


def _check_admissible(mt: MarkedTree, k: int):
    t = mt.tree
    c = contour_of(t).values
    r = t.size
    if r != mt.size or r > k:
        raise InadmissibleMarkedTree("size mismatch")
    u = k - r
    s = mt.marked_time
    v = mt.marked_vertex
    if not (0 <= s < c.shape[0]) or t.visit[s] != v:
        raise InadmissibleMarkedTree("marked time does not visit the marked vertex")
    depth = c[first_visit_times(t)]
    if mt.whole:
        if u != 0 or s != k:
            raise InadmissibleMarkedTree("whole-tree outcome must mark the time-k vertex")
        D = int(depth[v])
        if D == 0:
            return
        a = _ancestors(t.parent, v)[D]
        prev = r - int(_subtree_sizes(t.parent)[a])
        if prev >= mt.target_size:
            raise InadmissibleMarkedTree("exploration would have stopped earlier")
        return
    if len(t.children[v]) != 0:
        raise InadmissibleMarkedTree("marked vertex must be a leaf")
    if not (s <= k <= s + 2 * u):
        raise InadmissibleMarkedTree("time k is not inside the unexplored subtree")
    m = int(depth[v]) - 1
    if m < 0 or m != mt.radius:
        raise InadmissibleMarkedTree("marked leaf at wrong depth")
    if r < mt.target_size:
        raise InadmissibleMarkedTree("retained part smaller than j")
    if m > 0:
        am = _ancestors(t.parent, v)[m]
        prev = r - int(_subtree_sizes(t.parent)[am])
        if prev >= mt.target_size:
            raise InadmissibleMarkedTree("exploration would have stopped earlier")

