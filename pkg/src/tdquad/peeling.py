"""Layered exploration of a glued map along the spine of its tree.

A host is a map obtained by :func:`glue_extended` from a long simple-boundary
quadrangulation and a spine tree, so every tree vertex knows the spine index
of the hanging trees it belongs to. The exploration keeps a filled region p,
the spine reach r and the frontier b (vertices of p next to unexplored ones).
One layer peels every quadrangle meeting b, pulls in the hanging trees up to
the new reach, and fills every unexplored component not containing the far
target vertex, which stands in for infinity.

Also here: Monte-Carlo oracles for the random-walk claim on overshoots and
for the stable limit of sums of tail-1/s increments.
"""
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from numba import njit

from .errors import AcceptanceTooLow, Exhausted, InadmissibleParameters, SpineTooShort, TooFewSamples, TooLarge
from .gluing import TreeDecoratedQuad, glue_extended
from .maps import bfs_distances, bfs_within, faces
from .quads import sample_simple_boundary_quad
from .trees import sample_infinite_tree_truncation


@dataclass(frozen=True, eq=False)
class PeelingState:
    layer: int
    frontier: np.ndarray  # b^(l): filled vertices adjacent to unexplored ones
    spine_reach: int  # r^(l)
    filled: np.ndarray  # p^(l) as a vertex mask
    host: TreeDecoratedQuad
    target: int
    initial: np.ndarray = field(repr=False, default=None)  # p^(0) mask

    @property
    def exhausted(self):
        return bool(self.filled[self.target])


@dataclass
class IncrementSeries:
    increments: List[int] = field(default_factory=list)
    layers: int = 0

    def extend(self, other: "IncrementSeries"):
        self.increments.extend(other.increments)
        self.layers += other.layers
        return self


def _target(host: TreeDecoratedQuad) -> int:
    """Vertex standing in for infinity: the middle of the open arc, else the farthest vertex."""
    m = host.map
    if host.hole is not None and host.hole.shape[0] > 0:
        return int(m.origin[host.hole[host.hole.shape[0] // 2]])
    d = bfs_distances(m, [m.origin[m.root]])
    return int(np.argmax(d))


def _frontier(m, filled):
    h = np.arange(m.n_half_edges)
    a, b = m.origin[h], m.origin[m.twin[h]]
    hit = filled[a] & ~filled[b]
    return np.unique(a[hit])


def _with_trees(host, filled, r):
    """Add the spine segment [0, r] with its hanging trees, then return the reach."""
    vsi = host.vertex_spine_index
    filled |= (vsi >= 0) & (vsi <= r)
    return max(r, int(vsi[filled].max(initial=-1)))


def init_peeling(host: TreeDecoratedQuad, r: int = 0) -> PeelingState:
    """p^(0): the glued images of spine vertices 0..r and their hanging trees."""
    if host.spine is None:
        raise SpineTooShort("host carries no spine")
    if r < 0 or host.spine.shape[0] <= r + 1:
        raise SpineTooShort(f"spine of length {host.spine.shape[0] - 1} is not longer than r={r}")
    m = host.map
    vsi = host.vertex_spine_index
    filled = (vsi >= 0) & (vsi <= r)
    return PeelingState(0, _frontier(m, filled), r, filled, host, _target(host), filled.copy())


def peel_step(state: PeelingState) -> PeelingState:
    """One layer of the exploration.

    Quadrangles count as meeting the frontier when any of their corners is a
    frontier vertex, glued tree vertices included. The open face left by the
    extended gluing is never peeled.
    """
    if state.exhausted:
        raise Exhausted("the target has been reached")
    host = state.host
    m = host.map
    fd = faces(m)
    deg = fd.degrees
    on_front = np.zeros(m.vertex_count, bool)
    on_front[state.frontier] = True
    hit = np.zeros(fd.count, bool)
    hit[fd.face_of[on_front[m.origin]]] = True
    hit &= deg == 4
    filled = state.filled.copy()
    filled[m.origin[hit[fd.face_of]]] = True
    r = state.spine_reach
    tgt = state.target
    # alternate tree absorption and filling until both are stable
    while True:
        r = _with_trees(host, filled, r)
        if filled[tgt]:
            filled[:] = True
            break
        reach = bfs_within(m, [tgt], ~filled) >= 0
        grown = ~reach & ~filled
        if not grown.any():
            break
        filled |= grown
        if int(host.vertex_spine_index[grown].max(initial=-1)) <= r:
            break
    return PeelingState(state.layer + 1, _frontier(m, filled), r, filled, host, tgt, state.initial)


def peel_increments(host: TreeDecoratedQuad, r0: int = 0, max_layers: Optional[int] = None,
                    check_balls: bool = False) -> IncrementSeries:
    """Increments r^(l) - r^(l-1) of one exploration.

    The layer at which the reach hits the end of the truncated spine is
    censored (its true increment could be larger) and dropped, as are the
    layers after it. With ``check_balls`` every layer asserts the exact ball
    containment of the filled region.
    """
    st = init_peeling(host, r0)
    end = host.spine.shape[0] - 1
    out = IncrementSeries()
    d0 = bfs_distances(host.map, np.nonzero(st.initial)[0]) if check_balls else None
    while not st.exhausted and (max_layers is None or st.layer < max_layers):
        nxt = peel_step(st)
        if check_balls:
            assert_ball_containment(nxt, d0)
        if nxt.spine_reach >= end or nxt.exhausted:
            break
        out.increments.append(nxt.spine_reach - st.spine_reach)
        out.layers += 1
        st = nxt
    return out


def assert_ball_containment(state: PeelingState, d0=None):
    """Every vertex within distance l of p^(0) lies in p^(l)."""
    if d0 is None:
        d0 = bfs_distances(state.host.map, np.nonzero(state.initial)[0])
    bad = (d0 <= state.layer) & ~state.filled
    if bad.any():
        raise AssertionError(f"layer {state.layer}: {int(bad.sum())} vertices of the ball escaped p")


def increment_tail_ccdf(series: IncrementSeries, a_max: int = 100, min_count: int = 1000):
    """Table of (a, P(increment >= a), a * P(increment >= a)) for a = 1..a_max."""
    x = np.asarray(series.increments, np.int64)
    if x.shape[0] < min_count:
        raise TooFewSamples(f"{x.shape[0]} increments, need at least {min_count}")
    a = np.arange(1, a_max + 1)
    counts = np.bincount(np.minimum(x, a_max + 1), minlength=a_max + 2)
    tail = counts[::-1].cumsum()[::-1]  # tail[a] = #{x >= a}
    ccdf = tail[a] / x.shape[0]
    return np.column_stack([a, ccdf, a * ccdf])


# random-walk oracles

@njit(cache=True)
def _walk_minima_rng(lengths, seed):
    np.random.seed(seed)
    out = np.empty(lengths.shape[0], np.int64)
    for i in range(lengths.shape[0]):
        x = 0
        lo = 0
        for _ in range(lengths[i]):
            if np.random.random() < 0.5:
                x -= 1
                if x < lo:
                    lo = x
            else:
                x += 1
        out[i] = -lo
    return out


def sample_power_law(n: int, exponent: float, rng) -> np.ndarray:
    """Integers O >= 1 with P(O >= k) = k^(-exponent)."""
    u = 1.0 - rng.random(n)  # in (0, 1]
    return np.floor(u ** (-1.0 / exponent)).astype(np.int64)


def overshoot_vs_tau_oracle(a, samples: int, rng, tail_exponent: float = 1.5):
    """Monte-Carlo estimate of P(O >= tau_1 + ... + tau_a).

    tau_1 + ... + tau_a is the hitting time of -a by a simple random walk X,
    so the event is {min of X over [0, O] <= -a}. One walk per sample serves
    every a at once; ``a`` may be an int or an array, and the result has the
    same shape.
    """
    o = sample_power_law(samples, tail_exponent, rng)
    seed = int(rng.integers(2 ** 31 - 1))
    depth = _walk_minima_rng(o, seed)
    aa = np.atleast_1d(np.asarray(a, np.int64))
    if aa.min() < 1:
        raise InadmissibleParameters("a must be at least 1")
    counts = np.bincount(np.minimum(depth, aa.max() + 1), minlength=aa.max() + 2)
    tail = counts[::-1].cumsum()[::-1]
    est = tail[aa] / samples
    return est if np.ndim(a) else float(est[0])


def tau_power_series(exponent: float = 1.5, terms: int = 200000) -> float:
    """E[tau^(-exponent)] for the first hitting time of -1, by a truncated series.

    P(tau = 2n+1) = C_n / 2^(2n+1), evaluated by the ratio recursion.
    """
    n = np.arange(terms, dtype=np.float64)
    # log(C_n / 4^n) by cumulative ratios C_{n+1}/C_n = 2(2n+1)/(n+2)
    ratio = np.concatenate([[1.0], (2 * n[:-1] + 1) / (2 * (n[:-1] + 2))])
    p = 0.5 * np.cumprod(ratio)
    return float(np.sum(p * (2 * n + 1) ** (-exponent)))


def cauchy_sum_probe(l: int, samples: int, rng, c_hat: float = 1.0, tail_exponent: float = 1.0,
                     chunk: int = 1 << 22):
    """Centered, rescaled sums of l i.i.d. heavy-tailed increments.

    Increments are Pareto with P(s >= x) = (c_hat / x)^tail_exponent for
    x >= c_hat. With tail exponent 1 the sum divided by l, minus
    c_hat log l, converges to an asymmetric Cauchy law; otherwise the sum is
    centered by its mean (finite when the exponent exceeds 1).
    """
    if l < 10:
        raise InadmissibleParameters("l must be at least 10")
    if tail_exponent == 1.0:
        center = c_hat * np.log(l)
    else:
        center = c_hat * tail_exponent / (tail_exponent - 1.0)
    out = np.empty(samples)
    per = max(1, chunk // l)
    for i in range(0, samples, per):
        n = min(per, samples - i)
        u = 1.0 - rng.random((n, l))
        s = c_hat * u ** (-1.0 / tail_exponent)
        out[i:i + n] = s.mean(axis=1) - center
    return out


def sample_peeling_host(f: int, l: int, m: int, rng, window: float = 0.25, max_tries: int = 10000):
    """Glue t_inf(m), conditioned to fit, into a simple-boundary quad near (f, l).

    The tree is redrawn until its size is at most the realized half-perimeter;
    the size conditioning is a bias of the finite proxy.
    """
    q = sample_simple_boundary_quad(f, l, window, rng)
    for _ in range(max_tries):
        try:
            st = sample_infinite_tree_truncation(m, rng, max_edges=q.half_perimeter)
        except TooLarge:
            continue
        return glue_extended(q, st)[0]
    raise AcceptanceTooLow(f"no spine tree of depth {m} fits a boundary of {q.half_perimeter}")
