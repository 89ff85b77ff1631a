"""Statistical harness: tail exponents, diameter scaling, spine distances, RN bounds.

Every experiment takes an integer seed and draws replicate i from its own
generator ``default_rng([seed, tag, i])``, so results do not depend on the
order or the thread that computes them.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from math import sqrt
from typing import Callable, List, Optional, Sequence

import numpy as np
from scipy.stats import ks_2samp

from . import _kernels as K
from .errors import DegenerateSamples, InadmissibleParameters, TooFewSamples, TooLarge
from .gluing import glue, glue_extended
from .maps import bfs_distances, faces
from .peeling import IncrementSeries, increment_tail_ccdf, peel_increments, sample_peeling_host
from .quads import log_q_asymptotic, sample_simple_boundary_quad
from .trees import contour_of, sample_bi_infinite_tree_truncation, sample_uniform_tree

# stream tags, fixed so that seeds mean the same thing across runs
TAGS = {"overshoot": 1, "diameter": 2, "subadditive": 3, "donsker": 4, "peel": 5, "claim": 6, "cauchy": 7, "sample": 8}


def replicate_rng(seed: int, tag: str, *keys: int):
    return np.random.default_rng([int(seed), TAGS[tag]] + [int(k) for k in keys])


def run_replicates(fn: Callable, seed: int, tag: str, n: int, threads: int = 1, prefix=()) -> list:
    """``[fn(i, rng_i) for i in range(n)]``, optionally on a thread pool, in index order."""
    jobs = [(i, replicate_rng(seed, tag, *prefix, i)) for i in range(n)]
    if threads <= 1:
        return [fn(i, r) for i, r in jobs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda job: fn(*job), jobs))


# tail fits

@dataclass
class TailFit:
    exponent: float  # log-log slope of the CCDF, negative for a decaying tail
    ci_low: float
    ci_high: float
    method: str
    sample_count: int
    x_min: float = 1.0
    x_max: float = float("nan")


def _ccdf_slope(x, lo, hi, points, lattice=None):
    grid = np.geomspace(lo, hi, points)
    if lattice:
        # snap to the support lo + lattice j, where the CCDF is not a flat step
        grid = lo + lattice * np.round((grid - lo) / lattice)
    grid = np.unique(grid)
    xs = np.sort(x)
    ccdf = 1.0 - np.searchsorted(xs, grid, side="left") / xs.shape[0]
    ok = ccdf > 0
    if ok.sum() < 2:
        return np.nan
    return float(np.polyfit(np.log(grid[ok]), np.log(ccdf[ok]), 1)[0])


def _hill(x, top):
    xs = np.sort(x)[::-1]
    top = min(top, xs.shape[0] - 1)
    ref = xs[top]
    if ref <= 0:
        return np.nan
    return float(-1.0 / np.mean(np.log(xs[:top] / ref)))


def fit_tail_exponent(samples, method: str = "ccdf_regression", bootstrap: int = 200, rng=None,
                      x_min: Optional[float] = None, x_max: Optional[float] = None,
                      points: int = 20, min_tail: int = 10, top_fraction: float = 0.05,
                      lattice: Optional[int] = None) -> TailFit:
    """Power-law exponent of P(X >= x) with a bootstrap percentile interval.

    ccdf_regression fits log CCDF against log x on a geometric grid between
    x_min (default: smallest positive sample) and x_max (default: the point
    beyond which fewer than ``min_tail`` samples remain). hill uses the top
    ``top_fraction`` order statistics. Samples that are not positive are
    ignored by both fits but still count in the CCDF denominator. For
    integer data supported on x_min + lattice j, ``lattice`` snaps the grid
    to that support.
    """
    x = np.asarray(samples, np.float64)
    if x.shape[0] < 200:
        raise TooFewSamples(f"{x.shape[0]} samples, need at least 200")
    if np.all(x == x[0]):
        raise DegenerateSamples("all samples are equal")
    pos = x[x > 0]
    if pos.shape[0] < 2:
        raise DegenerateSamples("fewer than two positive samples")
    lo = float(pos.min()) if x_min is None else float(x_min)
    if x_max is None:
        xs = np.sort(x)
        hi = float(xs[max(0, xs.shape[0] - min_tail)])
    else:
        hi = float(x_max)
    if hi <= lo:
        raise DegenerateSamples("empty fitting range")
    top = max(2, int(top_fraction * x.shape[0]))
    if method == "ccdf_regression":
        fit = lambda s: _ccdf_slope(s, lo, hi, points, lattice)
    elif method == "hill":
        fit = lambda s: _hill(s, top)
    else:
        raise InadmissibleParameters(f"unknown method {method!r}")
    est = fit(x)
    rng = np.random.default_rng(0) if rng is None else rng
    boots = np.array([fit(x[rng.integers(0, x.shape[0], x.shape[0])]) for _ in range(bootstrap)])
    boots = boots[np.isfinite(boots)]
    if boots.size:
        lo_ci, hi_ci = np.percentile(boots, [2.5, 97.5])
    else:
        lo_ci = hi_ci = est
    return TailFit(est, float(min(lo_ci, est)), float(max(hi_ci, est)), method, int(x.shape[0]), lo, hi)


# overshoots

def boundary_overshoots(q, anchor: int = 0, window: Optional[int] = None):
    """(O^s, O) at boundary vertex ``anchor`` of a simple-boundary quad.

    Boundary labels are taken relative to the anchor in (-l, l]. O^s is the
    largest positive label in [1, W] joined to the anchor by an inner edge
    (0 if none). O is the largest positive label in [1, W] lying on an inner
    face together with a label in [-W, 0]. W defaults to l/2.
    """
    m = q.map
    L = q.boundary.shape[0]
    W = L // 4 if window is None else int(window)
    bv = q.boundary_vertices()
    rel = np.full(m.vertex_count, np.iinfo(np.int64).min // 4, np.int64)
    lab = (np.arange(L) - anchor) % L
    lab = np.where(lab > L // 2, lab - L, lab)
    rel[bv] = lab
    # O^s through inner edges at the anchor
    beta = q.boundary
    on_bd = np.zeros(m.n_half_edges, bool)
    on_bd[beta] = True
    on_bd[m.twin[beta]] = True
    h = np.nonzero((m.origin == bv[anchor]) & ~on_bd)[0]
    z = rel[m.origin[m.twin[h]]]
    z = z[(z >= 1) & (z <= W)]
    os_ = int(z.max()) if z.size else 0
    # O through inner faces
    fd = faces(m)
    inner = np.ones(fd.count, bool)
    inner[fd.root_face] = False
    r = rel[m.origin]
    pos = np.where((r >= 1) & (r <= W), r, 0)
    best = np.zeros(fd.count, np.int64)
    np.maximum.at(best, fd.face_of, pos)
    neg = np.zeros(fd.count, bool)
    neg[fd.face_of[(r <= 0) & (r >= -W)]] = True
    sel = inner & neg
    o = int(best[sel].max()) if sel.any() else 0
    return os_, o


@dataclass
class OvershootResult:
    simple: TailFit
    full: TailFit
    os_samples: np.ndarray
    o_samples: np.ndarray
    realized: np.ndarray  # (faces, half-perimeter) per map
    window: int  # median of the per-map windows
    full_wide: Optional[TailFit] = None  # O over the perimeter window l/2, for comparison
    o_wide_samples: Optional[np.ndarray] = None


def overshoot_window(f: int, l: int) -> int:
    """min(l/2, sqrt(f)/2) boundary steps on each side of the anchor.

    A boundary arc of length k encloses area of order k^2, so a disk with f
    faces only looks like the half-plane along arcs much shorter than sqrt f.
    When l is large compared to sqrt f the boundary is pinched on longer
    scales and faces reaching far across the anchor flatten the O tail.
    """
    return max(1, min(l // 2, int(sqrt(f) / 2)))


def overshoot_experiment(f: int, l: int, replicates: int, seed: int, anchors: int = 2,
                         window: float = 0.25, threads: int = 1, bootstrap: int = 200) -> OvershootResult:
    """Overshoot tails at ``replicates`` boundary anchors of sampled quads.

    Each map contributes ``anchors`` equally spaced anchors; the law of a
    uniform quad is invariant under moving the root along the boundary, so
    every anchor has the law of the anchor at label 0. Overshoots are read in
    the window of :func:`overshoot_window` of the realized map and O is also
    read in the perimeter window l/2. O^s only takes odd values (the map is
    bipartite), so its CCDF is fitted on odd thresholds from 3 on; O is
    fitted on integers from 1 to a quarter of the window.
    """
    nmaps = -(-replicates // anchors)

    def one(i, rng):
        q = sample_simple_boundary_quad(f, l, window, rng)
        L = q.boundary.shape[0]
        W = overshoot_window(q.internal_faces, q.half_perimeter)
        vals = []
        for j in range(anchors):
            a = (j * L) // anchors
            os_, o = boundary_overshoots(q, a, W)
            vals.append((os_, o, boundary_overshoots(q, a)[1], W))
        return vals, (q.internal_faces, q.half_perimeter)

    res = run_replicates(one, seed, "overshoot", nmaps, threads)
    rows = np.array([v for r in res for v in r[0]][:replicates], np.int64)
    realized = np.array([r[1] for r in res], np.int64)
    os_, o, o_wide = rows[:, 0], rows[:, 1], rows[:, 2]
    W = int(np.median(rows[:, 3]))
    W_wide = int(np.median(realized[:, 1])) // 2
    brng = replicate_rng(seed, "overshoot", 1 << 30)
    fs = fit_tail_exponent(os_, bootstrap=bootstrap, rng=brng, x_min=3, lattice=2)
    fo = fit_tail_exponent(o, bootstrap=bootstrap, rng=brng, x_min=1, x_max=max(4, W // 4), lattice=1)
    fw = fit_tail_exponent(o_wide, bootstrap=bootstrap, rng=brng, x_min=1, x_max=max(4, W_wide // 4), lattice=1)
    return OvershootResult(fs, fo, os_, o, realized, W, fw, o_wide)


# diameters

def tree_diameters(d):
    """(diameter of the decoration in the map metric, in its own metric)."""
    m = d.map
    tv = d.tree_vertex
    off, nbrs, _ = m.adjacency()
    best = 0
    for v in tv:
        dist = K.bfs_csr(off, nbrs, np.array([v], np.int64), m.vertex_count)
        best = max(best, int(dist[tv].max()))
    c = contour_of(d.tree).values
    # tree diameter: two sweeps over contour heights via d_C from the deepest corner
    i = int(np.argmax(c))
    run_min = np.minimum.accumulate(c[i:])
    back_min = np.minimum.accumulate(c[:i + 1][::-1])[::-1]
    dist_fwd = c[i] + c[i:] - 2 * run_min
    dist_bwd = c[i] + c[:i + 1] - 2 * back_min
    return best, int(max(dist_fwd.max(), dist_bwd.max()))


@dataclass
class ScalingSeries:
    points: List[dict] = field(default_factory=list)
    normalization: str = ""


def diameter_experiment(f_grid: Sequence[int], sigma: float = 1.0, alpha: float = 2.0, replicates: int = 50,
                        seed: int = 0, window: float = 0.1, threads: int = 1):
    """Diameter of the decoration in critical tree-decorated quads.

    For each f the boundary is l = round(sigma sqrt f), the quad is drawn in a
    relative window around (f, l) and the tree is uniform with k = realized l.
    Returns the series and the raw per-replicate rows.
    """
    if sigma <= 0 or alpha <= 1:
        raise InadmissibleParameters("need sigma > 0 and alpha > 1")
    f_grid = sorted(int(f) for f in f_grid)
    series = ScalingSeries(normalization=f"diam / f^(1/4); diam (log f)^{alpha} / f^(1/4)")
    rows = []
    for idx, f in enumerate(f_grid):
        l = max(1, int(round(sigma * sqrt(f))))

        def one(i, rng, f=f, l=l):
            q = sample_simple_boundary_quad(f, l, window, rng)
            t = sample_uniform_tree(q.half_perimeter, rng)
            d, _ = glue(q, t)
            dm, dt = tree_diameters(d)
            return q.internal_faces, q.half_perimeter, dm, dt

        res = run_replicates(one, seed, "diameter", replicates, threads, prefix=(idx,))
        arr = np.array(res, np.float64)
        scale = arr[:, 0] ** 0.25
        ratio = arr[:, 2] / scale
        lower = scale / np.log(arr[:, 0]) ** alpha
        for r in res:
            rows.append({"f": f, "faces": r[0], "half_perimeter": r[1], "diam_map": r[2], "diam_tree": r[3]})
        series.points.append({
            "f": f,
            "sigma_realized": float(np.median(arr[:, 1] / np.sqrt(arr[:, 0]))),
            "median_diam_over_f14": float(np.median(ratio)),
            "median_diam_log_over_f14": float(np.median(ratio * np.log(arr[:, 0]) ** alpha)),
            "lower_bound_fraction": float(np.mean(arr[:, 2] >= lower)),
            "map_le_tree_fraction": float(np.mean(arr[:, 2] <= arr[:, 3])),
            "replicates": replicates,
            "const_8f_9": float(np.median(arr[:, 2] * (8 * arr[:, 0] / 9) ** -0.25)),
            "const_9f_8": float(np.median(arr[:, 2] * (9 * arr[:, 0] / 8) ** -0.25)),
        })
    return series, rows


# spine distances

def sample_spine_host(f: int, l: int, m: int, rng, window: float = 0.25, max_tries: int = 100000):
    """Bi-infinite truncation of depth m, conditioned to fit, glued into a quad near (f, l)."""
    q = sample_simple_boundary_quad(f, l, window, rng)
    for _ in range(max_tries):
        try:
            st = sample_bi_infinite_tree_truncation(m, rng, max_edges=q.half_perimeter)
        except TooLarge:
            continue
        return glue_extended(q, st)[0]
    raise TooLarge(f"no bi-infinite truncation of depth {m} fits a boundary of {q.half_perimeter}")


def spine_distances(host, n_grid: Sequence[int]):
    """Matrix D[a, b] = d_map(kappa_{n_a}, kappa_{n_b}) over the grid plus 0."""
    ns = [0] + [int(n) for n in n_grid]
    kap = host.spine[ns]
    D = np.empty((len(ns), len(ns)), np.int64)
    for a, v in enumerate(kap):
        D[a] = bfs_distances(host.map, [v])[kap]
    return ns, D


def check_spine_subadditivity(ns, D):
    """d(k0, k_{n+m}) <= d(k0, k_n) + d(k_n, k_{n+m}) for all grid points n < n+m."""
    for a in range(len(ns)):
        for b in range(a + 1, len(ns)):
            if D[0, b] > D[0, a] + D[a, b]:
                return False
    return True


def subadditive_experiment(n_grid: Sequence[int], f: int, replicates: int, seed: int, sigma: float = 3.0,
                           window: float = 0.25, threads: int = 1):
    """d_map(kappa_0, kappa_n) / n on glued bi-infinite truncations.

    Hosts glue a bi-infinite truncation of depth max(n_grid), conditioned to
    fit the boundary, into a simple-boundary quad with about f faces and
    half-perimeter sigma sqrt f; kappa_n is the image of tau_{-n}.
    """
    n_grid = sorted(int(n) for n in n_grid)
    if n_grid[0] < 1:
        raise InadmissibleParameters("spine indices must be positive")
    m = n_grid[-1]
    l = int(round(sigma * sqrt(f)))

    def one(i, rng):
        host = sample_spine_host(f, l, m, rng, window)
        ns, D = spine_distances(host, n_grid)
        return D[0, 1:].tolist(), check_spine_subadditivity(ns, D), host.k

    res = run_replicates(one, seed, "subadditive", replicates, threads)
    d = np.array([r[0] for r in res], np.float64)
    ratios = d / np.array(n_grid)[None, :]
    series = ScalingSeries(normalization="d_map(kappa_0, kappa_n) / n")
    for j, n in enumerate(n_grid):
        series.points.append({
            "n": n,
            "median_ratio": float(np.median(ratios[:, j])),
            "max_ratio": float(ratios[:, j].max()),
            "replicates": replicates,
        })
    return series, {
        "subadditive_all": bool(all(r[1] for r in res)),
        "ratios": ratios,
        "tree_sizes": [r[2] for r in res],
    }


# Radon-Nikodym bounds

def tree_rn_ratio(k: int, kp: int, gamma: float) -> float:
    """max over r <= (1 - gamma) k of [C_{k-r}/C_k] / [C_{k+kp-r}/C_{k+kp}].

    This compares the exploration law in trees of k and k + kp edges. Uses
    C_{a-1}/C_a = (a+1)/(2(2a-1)) with exact integer products; every r is
    evaluated even though the ratio is increasing in r.
    """
    rmax = int(np.floor((1 - gamma) * k + 1e-12))
    num, den = 1, 1
    best = 1.0
    for r in range(1, rmax + 1):
        a, b = k - r + 1, k + kp - r + 1
        num *= (a + 1) * (2 * b - 1)
        den *= (2 * a - 1) * (b + 1)
        best = max(best, num / den)  # int / int rounds the exact quotient once
    return best


def map_rn_chain(f: float, m: float, l: float, fp: float, sigma: float) -> float:
    """Ratio of counting asymptotics comparing sizes f and f + fp, in log space."""
    a = sigma * sqrt(f)
    b = sigma * sqrt(f + fp)
    lr = (log_q_asymptotic(f + fp, b) - log_q_asymptotic(f, a)
          + log_q_asymptotic(m, l) - log_q_asymptotic(m + fp, l + b - a))
    return float(np.exp(lr))


def map_rn_limit(f, m, l, sigma):
    """Large-fp limit of :func:`map_rn_chain`."""
    return float((f / m) ** 2.5 * (l / (sigma * sqrt(f))) ** 0.5 * np.exp(2.25 * (sigma ** 2 - l ** 2 / m)))


def rn_bound_check(k_values=(50, 100, 200), gamma: float = 0.25, sigma: float = 1.0, alpha: float = 0.1,
                   f: int = 10 ** 6, grid: int = 25, fp_factors=(1e2, 1e4, 1e6, 1e8)) -> dict:
    """Evaluate both sides of the RN comparison against their displayed bounds.

    Tree side: exact Catalan ratios for k' in {k, 10k, 100k}. Map side: the
    counting-asymptotic chain over a grid of the event {alpha sqrt f <= l <=
    sqrt f / alpha, m >= alpha f}, for several large f' and in the limit.
    """
    if not (0 < gamma <= 1 and 0 < alpha < 1 and sigma > 0):
        raise InadmissibleParameters("need 0 < gamma <= 1, 0 < alpha < 1, sigma > 0")
    tree_bound = gamma ** -1.5
    tree = []
    for k in k_values:
        for kp in (k, 10 * k, 100 * k):
            v = tree_rn_ratio(int(k), int(kp), gamma)
            tree.append({"k": int(k), "k_prime": int(kp), "ratio": v, "bound": 1.05 * tree_bound,
                         "ok": v <= 1.05 * tree_bound})
    map_bound = alpha ** -3 * sigma ** -0.5 * np.exp(2.25 * sigma ** 2)
    ls = np.geomspace(alpha * sqrt(f), sqrt(f) / alpha, grid)
    ms = np.geomspace(alpha * f, f, grid)
    lim = max(map_rn_limit(f, m, l, sigma) for m in ms for l in ls)
    chain = {}
    for fac in fp_factors:
        chain[str(fac)] = max(map_rn_chain(f, m, l, fac * f, sigma) for m in ms for l in ls)
    return {
        "gamma": gamma, "sigma": sigma, "alpha": alpha, "f": f,
        "tree": tree,
        "tree_ok": all(t["ok"] for t in tree),
        "map_bound": float(map_bound),
        "map_limit_max": lim,
        "map_chain_max": chain,
        "map_ok": bool(max([lim] + list(chain.values())) <= map_bound),
    }


# Donsker

def rescaled_excursion_max(k: int, samples: int, rng) -> np.ndarray:
    """Samples of max C / sqrt(2k) for uniform Dyck paths with 2k steps."""
    out = np.empty(samples)
    for i in range(samples):
        out[i] = K.dyck_max(rng.random(2 * k + 1), k)
    return out / np.sqrt(2 * k)


def donsker_samples(k_small: int, k_large: int, samples: int, seed: int):
    """Rescaled excursion maxima at both sizes; both scales draw from the same stream."""
    if k_small < 1 or k_large < k_small:
        raise InadmissibleParameters("need 1 <= k_small <= k_large")
    a = rescaled_excursion_max(k_small, samples, replicate_rng(seed, "donsker", 0))
    b = rescaled_excursion_max(k_large, samples, replicate_rng(seed, "donsker", 0))
    return a, b


def donsker_diagnostic(k_small: int, k_large: int, samples: int, seed: int) -> float:
    """KS distance between rescaled excursion maxima at two sizes (0 when they are equal)."""
    a, b = donsker_samples(k_small, k_large, samples, seed)
    return float(ks_2samp(a, b).statistic)


# peeling increments

def peel_tail_experiment(f: int, l: int, spine: int, min_increments: int, seed: int, window: float = 0.25,
                         a_max: int = 100, fit_max: Optional[int] = None, threads: int = 1,
                         check_balls: bool = True):
    """Pool peeling increments over hosts until ``min_increments`` are collected.

    Hosts are drawn in batches of fixed size and consumed in index order, so
    the pooled series only depends on the seed. The CCDF slope is fitted on
    a = 1..fit_max (default spine/2, where censoring at the spine end does
    not yet bend the tail).
    """
    series = IncrementSeries()
    batch = 16
    start = 0
    hosts = 0
    while len(series.increments) < min_increments:
        def one(i, rng):
            return peel_increments(sample_peeling_host(f, l, spine, rng, window), 0, check_balls=check_balls)

        for s in run_replicates(one, seed, "peel", batch, threads, prefix=(start,)):
            series.extend(s)
            hosts += 1
        start += 1
    table = increment_tail_ccdf(series, a_max)
    fit_max = spine // 2 if fit_max is None else fit_max
    a, ccdf = table[:fit_max, 0], table[:fit_max, 1]
    ok = ccdf > 0
    slope = float(np.polyfit(np.log(a[ok]), np.log(ccdf[ok]), 1)[0])
    return {"series": series, "table": table, "slope": slope, "fit_max": fit_max, "hosts": hosts,
            "sup_a_ccdf": float(table[:, 2].max()), "balls_checked": check_balls}


def claim_experiment(samples: int, seed: int, a_max: int = 1000, tail_exponent: float = 1.5):
    """a * P(O >= tau_1 + ... + tau_a) for a = 1..a_max from one Monte-Carlo batch."""
    from .peeling import overshoot_vs_tau_oracle

    a = np.arange(1, a_max + 1)
    est = overshoot_vs_tau_oracle(a, samples, replicate_rng(seed, "claim", samples), tail_exponent)
    return np.column_stack([a, est, a * est])
