"""Quadrangulations with a boundary: samplers, core extraction, counting.

Boundary convention: with ``root`` the root half-edge, the boundary walk is
beta_i = face_next^(i+1)(twin(root)) for i = 0..2l-1, so beta_{2l-1} =
twin(root). beta_i runs from boundary label i to label i+1, and the root edge
runs from label 0 to label 2l-1 (that is, from 0 to -1) with the root face on
its left.
"""
from dataclasses import dataclass
from fractions import Fraction
from math import factorial, log, pi, sqrt
from typing import Optional

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from . import _kernels as K
from .errors import (
    AcceptanceTooLow,
    ArcTooLarge,
    DegenerateCore,
    EmptyLeftover,
    InadmissibleParameters,
)
from .maps import HalfEdgeMap, bfs_distances, bfs_within, boundary_cycle, faces, from_face_permutation


# counting

def general_count(f: int, p: int) -> int:
    """Rooted quadrangulations with a general boundary of length 2p and f inner faces."""
    if p < 1 or f < 0:
        return 0
    num = 3 ** f * factorial(2 * p) * factorial(2 * f + p - 1)
    den = factorial(p) * factorial(p - 1) * factorial(f) * factorial(f + p + 1)
    return num // den


def simple_count(f: int, l: int) -> int:
    """Rooted quadrangulations with a simple boundary of length 2l and f inner faces."""
    if l < 1 or f < 0:
        return 0
    if f < l - 1:
        return 0
    num = Fraction(3) ** (f - l) * factorial(3 * l) * factorial(2 * f + l - 1)
    den = factorial(l) * factorial(2 * l - 1) * factorial(f - l + 1) * factorial(f + 2 * l)
    v = num / den
    assert v.denominator == 1
    return int(v)


def log_q_asymptotic(f, l) -> float:
    """log of (sqrt3 / 2pi) 12^f (9/2)^l f^(-5/2) l^(1/2) exp(-9 l^2 / 4f)."""
    f = float(f)
    l = float(l)
    return (log(sqrt(3) / (2 * pi)) + f * log(12.0) + l * log(4.5)
            - 2.5 * log(f) + 0.5 * log(l) - 9.0 * l * l / (4.0 * f))


def q_asymptotic(f, l, log_scale: bool = False) -> float:
    if f < 1 or l < 1:
        raise InadmissibleParameters("need f, l >= 1")
    v = log_q_asymptotic(f, l)
    return v if log_scale else float(np.exp(v))


# types

@dataclass(frozen=True, eq=False)
class GeneralBoundaryQuad:
    map: HalfEdgeMap
    boundary: np.ndarray  # beta_0 .. beta_{2p-1}
    internal_faces: int

    @property
    def half_perimeter(self):
        return self.boundary.shape[0] // 2

    def boundary_vertices(self):
        """Vertex carrying each boundary label."""
        return self.map.origin[self.boundary]

    def is_simple(self):
        bv = self.boundary_vertices()
        return np.unique(bv).shape[0] == bv.shape[0]


@dataclass(frozen=True, eq=False)
class SimpleBoundaryQuad(GeneralBoundaryQuad):
    attempts: int = 1

    @property
    def boundary_labels(self):
        return np.arange(self.boundary.shape[0])


def boundary_walk(m: HalfEdgeMap):
    """beta_0..beta_{2p-1} of a rooted map (see module docstring)."""
    cyc = boundary_cycle(m)  # starts at twin(root)
    return np.roll(cyc, -1)


def as_general(m: HalfEdgeMap) -> GeneralBoundaryQuad:
    fd = faces(m)
    return GeneralBoundaryQuad(m, boundary_walk(m), fd.count - 1)


def as_simple(m: HalfEdgeMap, attempts: int = 1) -> SimpleBoundaryQuad:
    fd = faces(m)
    q = SimpleBoundaryQuad(m, boundary_walk(m), fd.count - 1, attempts)
    if not q.is_simple():
        raise InadmissibleParameters("boundary is not simple")
    return q


def check_quadrangulation(q: GeneralBoundaryQuad):
    """Raise AssertionError unless every non-root face has degree 4."""
    fd = faces(q.map)
    deg = fd.degrees.copy()
    assert deg[fd.root_face] == q.boundary.shape[0]
    deg[fd.root_face] = 4
    assert np.all(deg == 4), "inner face of degree != 4"
    assert q.map.vertex_count == q.internal_faces + q.half_perimeter + 1


# general boundary sampler

def _uniform_composition(p, rng):
    """Uniform (d_1..d_p) >= 0 with sum p, by stars and bars."""
    bars = np.sort(rng.choice(2 * p - 1, size=p - 1, replace=False))
    edges = np.concatenate([[-1], bars, [2 * p - 1]])
    return np.diff(edges) - 1


def _forest_steps(n, p, rng):
    """Contour steps of a uniform forest of p trees with n edges in total.

    A uniform arrangement of n up-steps and n+p down-steps has exactly p
    cyclic rotations that reach -p for the first time at the very end (cycle
    lemma); one of them is picked uniformly.
    """
    N = 2 * n + p
    steps = -np.ones(N, np.int64)
    steps[rng.permutation(N)[:n]] = 1
    s = np.concatenate([[0], np.cumsum(steps)])  # s[0..N]
    big = np.iinfo(np.int64).max
    prev_min = np.concatenate([[big], np.minimum.accumulate(s[:N - 1])])  # min s[0..i-1]
    sm = np.full(N + 1, big)
    sm[1:N] = np.minimum.accumulate(s[N - 1:0:-1])[::-1]  # min s[j..N-1]
    inner_min = sm[1:]  # min s[i+1..N-1]
    ok = (s[:N] < prev_min) & (s[:N] - p < inner_min) & ((s[:N] < 0) | (np.arange(N) == 0))
    starts = np.nonzero(ok)[0]
    assert starts.shape[0] == p, "cycle lemma violated"
    r = starts[rng.integers(starts.shape[0])]
    return np.roll(steps, -r)


def sample_general_boundary_quad(f: int, p: int, rng) -> GeneralBoundaryQuad:
    """Uniform rooted quadrangulation with boundary 2p and f inner faces.

    Labelled forests of p trees with f edges, whose root labels step by at
    least -1 cyclically, are closed into pointed maps by linking every corner
    to the next corner with a smaller label; corners of minimum label go to an
    extra vertex. The root is then a uniform boundary edge. As the vertex count
    f + p + 1 is fixed, uniform pointed maps project to uniform rooted ones.
    """
    if f < 0 or p < 1:
        raise InadmissibleParameters(f"need f >= 0 and p >= 1, got ({f}, {p})")
    steps = _forest_steps(f, p, rng)
    parent, visit, tree_id = K.forest_from_steps(steps)
    nv = parent.shape[0]
    root_label = np.concatenate([[0], np.cumsum(_uniform_composition(p, rng) - 1)[:-1]])
    inc = rng.integers(-1, 2, size=nv)
    roots = parent < 0
    inc[roots] = root_label
    label = K.accumulate_from_parent(parent, inc)
    N = steps.shape[0]
    succ = K.closure_successors(label[visit])
    vstar = nv
    x = np.arange(N)
    # keys: (vertex, position, secondary) for out-arcs 2x and in-arcs 2y+1
    vert = np.empty(2 * N, np.int64)
    pos = np.empty(2 * N, np.int64)
    sec = np.empty(2 * N, np.int64)
    vert[0::2] = visit
    pos[0::2] = x
    sec[0::2] = N
    to_star = succ < 0
    tgt = np.where(to_star, 0, succ)
    vert[1::2] = np.where(to_star, vstar, visit[tgt])
    pos[1::2] = np.where(to_star, -x, tgt)
    sec[1::2] = np.where(to_star, 0, (tgt - x) % N)
    order = np.lexsort((sec, pos, vert))
    nxt = K.rotation_from_sorted(order, vert)
    twin = np.arange(2 * N) ^ 1
    # the boundary face runs through the first half-edge placed in corner 0
    first = order[np.searchsorted(vert[order], 0)]
    m0 = HalfEdgeMap(twin, nxt, vert, first, nv + 1, check=False)
    cyc = boundary_cycle(m0, start=first)
    if cyc.shape[0] != 2 * p:
        raise AssertionError("closure produced a boundary of the wrong length")
    root = twin[cyc[rng.integers(2 * p)]]
    m = HalfEdgeMap(twin, nxt, vert, root, nv + 1, check=False)
    return GeneralBoundaryQuad(m, boundary_walk(m), f)


# simple core

@dataclass(frozen=True, eq=False)
class PrunedParts:
    """Everything of q outside its core.

    ``frame`` is q with the core's interior replaced by a single hole face.
    ``outer[j]`` is the frame half-edge glued to the core's boundary side
    beta'_j and ``hole[j]`` the hole-side half-edge of the same edge.
    """

    frame: HalfEdgeMap
    outer: np.ndarray
    hole: np.ndarray


def _blocks(m: HalfEdgeMap):
    fd = faces(m)
    rf = fd.root_face
    fo = fd.face_of
    ft = fo[m.twin]
    both = (fo != rf) & (ft != rf)
    g = coo_matrix((np.ones(int(both.sum())), (fo[both], ft[both])), shape=(fd.count, fd.count))
    _, comp = connected_components(g, directed=False)
    return fd, comp


def extract_simple_core(q: GeneralBoundaryQuad):
    """Split q into its simple core and the pruned parts.

    Blocks are the classes of inner faces connected through shared edges; the
    boundary of each block is a simple cycle. The core is the block with the
    most faces (ties: longer perimeter, then earliest along the boundary walk).
    It is rooted at twin(beta_i) for the largest i with beta_i on the core,
    which leaves an already simple q unchanged.
    """
    m = q.map
    if q.is_simple():
        return as_simple(m), None
    fd, comp = _blocks(m)
    rf = fd.root_face
    if fd.count == 1:
        raise DegenerateCore("boundary is not simple and there is no inner face")
    beta = q.boundary
    side_block = comp[fd.face_of[m.twin[beta]]]
    side_block = np.where(fd.face_of[m.twin[beta]] == rf, -1, side_block)
    inner = np.arange(fd.count) != rf
    nfaces = np.bincount(comp[inner], minlength=comp.max() + 1)
    perim = np.bincount(side_block[side_block >= 0], minlength=comp.max() + 1)
    first = np.full(comp.max() + 1, beta.shape[0])
    for i in range(beta.shape[0] - 1, -1, -1):
        if side_block[i] >= 0:
            first[side_block[i]] = i
    cand = np.nonzero(nfaces > 0)[0]
    best = cand[np.lexsort((first[cand], -perim[cand], -nfaces[cand]))[0]]
    idx = np.nonzero(side_block == best)[0]
    in_block = inner & (comp == best)
    face_in = in_block[fd.face_of]
    outer_h = beta[idx]
    core_h = np.concatenate([np.nonzero(face_in)[0], outer_h])
    new = np.full(m.n_half_edges, -1, np.int64)
    new[core_h] = np.arange(core_h.shape[0])
    fn = new[m.face_next[core_h]]
    nin = int(face_in.sum())
    fn[nin:] = new[np.roll(outer_h, -1)]
    root = new[m.twin[outer_h[-1]]]
    core = from_face_permutation(new[m.twin[core_h]], fn, root)
    cq = as_simple(core)
    cq = SimpleBoundaryQuad(core, cq.boundary, int(nfaces[best]))
    return cq, _frame(m, face_in, outer_h)


def _frame(m, face_in, outer_h):
    """q with the core interior collapsed into one hole face."""
    interior = face_in & face_in[m.twin]
    keep = np.nonzero(~interior)[0]
    new = np.full(m.n_half_edges, -1, np.int64)
    new[keep] = np.arange(keep.shape[0])
    hole_h = m.twin[outer_h]
    fn = m.face_next.copy()
    fn[hole_h] = np.roll(hole_h, 1)  # walk the hole backwards along the core boundary
    frame = from_face_permutation(new[m.twin[keep]], new[fn[keep]], new[m.root])
    return PrunedParts(frame, new[outer_h], new[hole_h])


def reassemble(core: SimpleBoundaryQuad, pruned: Optional[PrunedParts]) -> HalfEdgeMap:
    """Glue a core back into the hole of the frame; inverse of extract_simple_core."""
    if pruned is None:
        return core.map
    fr = pruned.frame
    cm = core.map
    if core.boundary.shape[0] != pruned.hole.shape[0]:
        raise InadmissibleParameters("core perimeter does not match the hole")
    is_hole = np.zeros(fr.n_half_edges, bool)
    is_hole[pruned.hole] = True
    fkeep = np.nonzero(~is_hole)[0]
    cout = np.zeros(cm.n_half_edges, bool)
    cout[core.boundary] = True
    ckeep = np.nonzero(~cout)[0]
    nf = fkeep.shape[0]
    fnew = np.full(fr.n_half_edges, -1, np.int64)
    fnew[fkeep] = np.arange(nf)
    cnew = np.full(cm.n_half_edges, -1, np.int64)
    cnew[ckeep] = nf + np.arange(ckeep.shape[0])
    # hole side j of the frame becomes the inner side of core beta'_j
    fnew[pruned.hole] = cnew[cm.twin[core.boundary]]
    twin = np.concatenate([fnew[fr.twin[fkeep]], cnew[cm.twin[ckeep]]])
    twin[cnew[cm.twin[core.boundary]]] = fnew[pruned.outer]
    fn = np.concatenate([fnew[fr.face_next[fkeep]], cnew[cm.face_next[ckeep]]])
    return from_face_permutation(twin, fn, fnew[fr.root])


# simple boundary sampler

def sample_simple_boundary_quad(f: int, l: int, window: float, rng, max_attempts: int = 2000,
                                adapt: Optional[bool] = None) -> SimpleBoundaryQuad:
    """Simple-boundary quadrangulation with about f faces and half-perimeter l.

    General-boundary maps are drawn at inflated sizes (F, P) and their cores
    kept when (f', l') lands in [f(1 +- window)] x [l(1 +- window)]. Given
    (f', l') the core is exactly uniform whatever (F, P) produced it, so (F, P)
    may be tuned between attempts: after each attempt they move toward the
    target by the observed core ratios. The accepted sample carries its
    realized sizes and the number of attempts used.
    """
    if window < 0:
        raise InadmissibleParameters("window must be nonnegative")
    if f < 0 or l < 1 or (f == 0 and l != 1) or f < l - 1:
        raise InadmissibleParameters(f"no simple-boundary quadrangulation with f={f}, l={l}")
    lo_f, hi_f = f * (1 - window), f * (1 + window)
    lo_l, hi_l = l * (1 - window), l * (1 + window)
    if adapt is None:
        adapt = f > 0
    logF, logP = np.log(max(f, 1)), np.log(l)
    if adapt and f >= 100:
        logF += np.log(1.25)
        logP += np.log(3.0)
    for attempt in range(1, max_attempts + 1):
        F = max(f, int(round(np.exp(logF))))
        P = max(l, int(round(np.exp(logP))))
        q = sample_general_boundary_quad(F, P, rng)
        try:
            core, _ = extract_simple_core(q)
        except DegenerateCore:
            continue
        fc, lc = core.internal_faces, core.half_perimeter
        if lo_f <= fc <= hi_f and lo_l <= lc <= hi_l:
            return SimpleBoundaryQuad(core.map, core.boundary, fc, attempt)
        if adapt:
            logF += 0.5 * (np.log(f) - np.log(max(fc, 1)))
            logP += 0.5 * (np.log(l) - np.log(max(lc, 1)))
            # keep the inflation bounded when cores come out degenerate
            logF = min(max(logF, np.log(f)), np.log(8 * f))
            logP = min(max(logP, np.log(l)), np.log(8 * l))
    raise AcceptanceTooLow(f"no core in the window after {max_attempts} attempts")


# filled-in boundary exploration

@dataclass(frozen=True, eq=False)
class BoundaryExploration:
    """Filled-in exploration around the boundary arc [-a, b].

    ``retained_faces`` / ``retained_vertices`` are masks over the map, v1 and v2
    the boundary vertices with labels -a and b. The leftover region is the
    part cut out around the antipodal boundary vertex (label l).
    """

    retained_faces: np.ndarray
    retained_vertices: np.ndarray
    v1: int
    v2: int
    r0: int
    radius: int
    leftover_perimeter: int
    leftover_area: int
    inner_boundary: int
    outer_boundary: int
    empty: bool


def _antipode_component(m, dist, R, target):
    """Vertices farther than R that connect to the target outside the ball."""
    if dist[target] <= R:
        return np.zeros(m.vertex_count, bool)
    d = bfs_within(m, [target], dist > R)
    return d >= 0


def explore_boundary(q: SimpleBoundaryQuad, a: int, b: int, r: int, strict: bool = False) -> BoundaryExploration:
    """Filled-in ball around the root that covers the arc, grown by r more.

    r0 is the least radius whose filled-in ball (the ball plus every
    complementary component not containing the antipode) contains the
    boundary vertices labelled -a..b. The leftover region consists of the
    inner faces touching the antipode's component outside radius r0 + r.
    With strict=True an empty leftover raises EmptyLeftover.
    """
    m = q.map
    L = q.boundary.shape[0]
    l = L // 2
    if a < 0 or b < 0 or a + b >= L:
        raise ArcTooLarge(f"arc [-{a}, {b}] does not fit in a boundary of length {L}")
    bv = q.boundary_vertices()
    arc = bv[np.arange(-a, b + 1) % L]
    target = bv[l]
    dist = bfs_distances(m, [m.origin[m.root]])

    def covered(R):
        return not _antipode_component(m, dist, R, target)[arc].any()

    lo, hi = 0, int(dist.max())
    while lo < hi:
        mid = (lo + hi) // 2
        if covered(mid):
            hi = mid
        else:
            lo = mid + 1
    r0 = lo
    comp = _antipode_component(m, dist, r0 + r, target)
    fd = faces(m)
    rf = fd.root_face
    left_face = np.zeros(fd.count, bool)
    np.logical_or.at(left_face, fd.face_of, comp[m.origin])
    left_face[rf] = False
    lh = left_face[fd.face_of]  # half-edges inside leftover faces
    other = ~left_face[fd.face_of[m.twin]]
    cut = lh & other
    inner_b = int((cut & (fd.face_of[m.twin] != rf)).sum())
    outer_in_leftover = int((cut & (fd.face_of[m.twin] == rf)).sum())
    perim2 = int(cut.sum())
    area = int(left_face.sum())
    empty = area == 0
    if empty and strict:
        raise EmptyLeftover("the antipode lies inside the explored region")
    retained_f = ~left_face
    retained_f[rf] = False
    retained_v = ~comp
    return BoundaryExploration(retained_f, retained_v, int(bv[-a % L]), int(bv[b % L]), r0, r0 + r,
                               perim2 // 2, area, inner_b, L - outer_in_leftover, empty)
