from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import bfs_oracle
from tdquad.errors import DegenerateSamples, InadmissibleParameters, TooFewSamples
from tdquad.experiments import (boundary_overshoots, check_spine_subadditivity, claim_experiment,
                                diameter_experiment, donsker_diagnostic, donsker_samples, fit_tail_exponent,
                                map_rn_chain, map_rn_limit, overshoot_window, replicate_rng, rn_bound_check, run_replicates,
                                sample_spine_host, spine_distances, tree_diameters, tree_rn_ratio)
from tdquad.gluing import glue
from tdquad.maps import faces
from tdquad.quads import sample_simple_boundary_quad
from tdquad.trees import catalan, sample_uniform_tree, tree_map


def pareto(n, e, rng):
    return (1.0 - rng.random(n)) ** (-1.0 / e)


def test_replicate_streams_are_keyed():
    a = replicate_rng(7, "overshoot", 3).random(4)
    assert np.array_equal(a, replicate_rng(7, "overshoot", 3).random(4))
    assert not np.array_equal(a, replicate_rng(7, "overshoot", 4).random(4))
    assert not np.array_equal(a, replicate_rng(7, "diameter", 3).random(4))


def test_run_replicates_ignores_thread_count():
    fn = lambda i, r: (i, r.random())
    assert run_replicates(fn, 5, "claim", 20, 1) == run_replicates(fn, 5, "claim", 20, 4)


@pytest.mark.parametrize("method", ["ccdf_regression", "hill"])
def test_fit_recovers_synthetic_exponent(method):
    x = pareto(100000, 1.5, np.random.default_rng(1))
    fit = fit_tail_exponent(x, method, bootstrap=50, rng=np.random.default_rng(2))
    assert abs(fit.exponent + 1.5) < 0.1
    assert fit.ci_low <= fit.exponent <= fit.ci_high
    assert fit.sample_count == 100000 and fit.method == method


@pytest.mark.parametrize("method", ["ccdf_regression", "hill"])
def test_fit_is_scale_invariant(method):
    x = pareto(5000, 0.5, np.random.default_rng(3))
    a = fit_tail_exponent(x, method, bootstrap=0).exponent
    b = fit_tail_exponent(7.5 * x, method, bootstrap=0).exponent
    assert abs(a - b) < 1e-9


def test_lattice_fit_on_odd_support():
    # largest odd k with k^-1.5 >= U, so P(X >= k) = k^-1.5 exactly at odd k
    u = 1.0 - np.random.default_rng(4).random(100000)
    x = 2 * np.floor((u ** (-1 / 1.5) + 1) / 2) - 1
    fit = fit_tail_exponent(x, bootstrap=0, x_min=3, lattice=2)
    assert abs(fit.exponent + 1.5) < 0.05
    # the real-valued grid reads the flat steps between odd values
    assert abs(fit_tail_exponent(x, bootstrap=0, x_min=2).exponent + 1.5) > abs(fit.exponent + 1.5)


def test_overshoot_window():
    assert overshoot_window(100000, 316) == 158
    assert overshoot_window(100000, 949) == 158
    assert overshoot_window(100000, 100) == 50
    assert overshoot_window(3, 1) == 1


def test_fit_errors():
    with pytest.raises(DegenerateSamples):
        fit_tail_exponent(np.full(500, 3.0))
    with pytest.raises(TooFewSamples):
        fit_tail_exponent(np.arange(1, 100))
    with pytest.raises(InadmissibleParameters):
        fit_tail_exponent(np.arange(1, 300), method="mle")


def overshoot_oracle(q, anchor, W):
    """Direct loops over half-edges and faces."""
    m = q.map
    L = q.boundary.shape[0]
    bv = q.boundary_vertices()
    label = {}
    for i, v in enumerate(bv):
        r = (i - anchor) % L
        label[int(v)] = r - L if r > L // 2 else r
    bd = set(q.boundary.tolist()) | set(m.twin[q.boundary].tolist())
    os_ = 0
    for h in range(m.n_half_edges):
        if m.origin[h] == bv[anchor] and h not in bd:
            z = label.get(int(m.origin[m.twin[h]]))
            if z is not None and 1 <= z <= W:
                os_ = max(os_, z)
    fd = faces(m)
    o = 0
    for fi in range(fd.count):
        if fi == fd.root_face:
            continue
        labs = [label.get(int(m.origin[h])) for h in fd.face(fi)]
        labs = [z for z in labs if z is not None]
        if any(-W <= z <= 0 for z in labs):
            o = max([o] + [z for z in labs if 1 <= z <= W])
    return os_, o


@settings(max_examples=15)
@given(st.integers(0, 2 ** 32 - 1), st.integers(0, 30))
def test_boundary_overshoots_match_oracle(seed, anchor):
    q = sample_simple_boundary_quad(200, 15, 0.3, np.random.default_rng(seed))
    anchor = anchor % q.boundary.shape[0]
    W = q.boundary.shape[0] // 4
    os_, o = boundary_overshoots(q, anchor)
    assert (os_, o) == overshoot_oracle(q, anchor, W)
    assert o >= os_ and o >= 1


@settings(max_examples=15)
@given(st.integers(0, 2 ** 32 - 1))
def test_tree_diameters(seed):
    rng = np.random.default_rng(seed)
    q = sample_simple_boundary_quad(150, 12, 0.3, rng)
    t = sample_uniform_tree(q.half_perimeter, rng)
    d, _ = glue(q, t)
    dm, dt = tree_diameters(d)
    tm = tree_map(t)
    assert dt == max(bfs_oracle(tm, v).max() for v in range(t.size + 1))
    assert dm == max(bfs_oracle(d.map, int(v))[d.tree_vertex].max() for v in d.tree_vertex)
    assert dm <= dt


def test_diameter_experiment_series():
    series, rows = diameter_experiment([300, 100], replicates=3, seed=1, window=0.3)
    assert [p["f"] for p in series.points] == [100, 300]
    assert len(rows) == 6
    assert all(p["map_le_tree_fraction"] == 1.0 for p in series.points)
    with pytest.raises(InadmissibleParameters):
        diameter_experiment([100], alpha=1.0)


def test_spine_distances_are_subadditive():
    host = sample_spine_host(3000, 160, 6, np.random.default_rng(5))
    ns, D = spine_distances(host, [1, 2, 4, 6])
    assert ns == [0, 1, 2, 4, 6] and D[0, 0] == 0
    assert np.array_equal(D, D.T)
    assert check_spine_subadditivity(ns, D)
    assert np.all(D[0, 1:] <= np.array(ns[1:]))  # the spine itself is a path
    bad = D.copy()
    bad[0, -1] = bad[0, 1] + bad[1, -1] + 1
    assert not check_spine_subadditivity(ns, bad)


def rn_oracle(k, kp, gamma):
    rs = range(0, int((1 - gamma) * k) + 1)
    return max(Fraction(catalan(k - r), catalan(k)) / Fraction(catalan(k + kp - r), catalan(k + kp)) for r in rs)


@pytest.mark.parametrize("k, kp", [(10, 10), (30, 300), (100, 100)])
def test_tree_rn_ratio_matches_catalan_fractions(k, kp):
    assert tree_rn_ratio(k, kp, 0.25) == pytest.approx(float(rn_oracle(k, kp, 0.25)), rel=1e-12)


def test_tree_rn_frozen_values():
    # exact big-integer evaluation, frozen
    assert tree_rn_ratio(100, 100, 0.25) == pytest.approx(3.837310265972002, rel=1e-12)
    assert tree_rn_ratio(200, 20000, 0.25) == pytest.approx(7.780119808029886, rel=1e-12)
    assert tree_rn_ratio(100, 100, 1.0) == 1.0


def test_map_rn_chain_tends_to_limit():
    f, m, l, s = 1e6, 3e5, 800.0, 1.0
    lim = map_rn_limit(f, m, l, s)
    gaps = [abs(map_rn_chain(f, m, l, c * f, s) - lim) for c in (1e2, 1e4, 1e6)]
    assert gaps[0] > gaps[1] > gaps[2] and gaps[2] < 2e-3 * lim


def test_rn_bound_check_report():
    r = rn_bound_check(k_values=(20,), grid=5, fp_factors=(1e4,))
    assert r["tree_ok"] and r["map_ok"]
    assert len(r["tree"]) == 3
    with pytest.raises(InadmissibleParameters):
        rn_bound_check(gamma=0.0)


def test_donsker():
    assert donsker_diagnostic(50, 50, 300, 4) == 0.0
    a, b = donsker_samples(20, 80, 200, 4)
    assert a.shape == b.shape == (200,)
    assert np.all(a > 0) and np.all(a <= np.sqrt(20 / 2) + 1e-12)  # max height k over sqrt(2k)
    with pytest.raises(InadmissibleParameters):
        donsker_diagnostic(80, 20, 10, 0)


def test_donsker_scale_stability():
    assert donsker_diagnostic(2000, 8000, 10000, 1) < 0.05


def test_claim_table():
    t = claim_experiment(20000, 3, a_max=50)
    assert t.shape == (50, 3)
    assert np.all(np.diff(t[:, 1]) <= 0)
    assert np.allclose(t[:, 2], t[:, 0] * t[:, 1])
