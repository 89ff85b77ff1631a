"""Acceptance suite: one test per criterion, each printing a PASS or FAIL line.

The statistical criteria run at full scale, so this module takes roughly
twenty minutes on one core. Select it alone with ``pytest tests/test_acceptance.py -s``.
"""
import os
import sys
from collections import Counter
from contextlib import contextmanager

import numpy as np
import pytest
from scipy.stats import chisquare

from conftest import bfs_oracle
from tdquad.cli import run
from tdquad.enumeration import enumerate_simple_boundary_quads
from tdquad.gluing import cut, decorated_key, glue, quotient_chain_distance
from tdquad.maps import bfs_distances
from tdquad.quads import as_simple, sample_simple_boundary_quad, simple_count
from tdquad.reports import (claim_report, diameter_report, overshoot_report, peel_tail_report, rn_report,
                            subadditive_report)
from tdquad.trees import (all_trees, catalan, contour_distance, contour_of, explore_tree, exploration_probability,
                          sample_uniform_tree, tree_map)

SEED = 20261016


@contextmanager
def criterion(n, label, capsys):
    """Print 'PASS|FAIL criterion n: label' straight to the terminal, then re-raise failures."""
    ok = False
    try:
        yield
        ok = True
    finally:
        with capsys.disabled():
            sys.stdout.write(f"\n{'PASS' if ok else 'FAIL'} criterion {n}: {label}\n")


def report_lines(rep):
    return "; ".join(f"{k}={'ok' if v else 'NO'}" for k, v in rep.criteria.items())


def test_01_bijection_counting(capsys):
    with criterion(1, "glue injective, |image| = |Q| C_k, cut o glue = id for 2f + k <= 12", capsys):
        sizes = [(f, k) for f in range(7) for k in range(1, 13) if 2 * f + k <= 12]
        pairs = 0
        for f, k in sizes:
            quads = [as_simple(m) for m in enumerate_simple_boundary_quads(f, k)]
            assert len(quads) == simple_count(f, k)
            trees = all_trees(k)
            image = set()
            for q in quads:
                for t in trees:
                    d, _ = glue(q, t)
                    image.add(decorated_key(d))
                    q2, t2 = cut(d)
                    assert t2 == t and q2.map == q.map
            assert len(image) == len(quads) * catalan(k)
            pairs += len(image)
        assert pairs == 28895  # sum of |Q^b_{f,k}| C_k over the range, from the exact counts


def test_02_metric_oracles(capsys):
    with criterion(2, "contour_distance = tree BFS, quotient_chain_distance = glued BFS (100 instances each)",
                   capsys):
        rng = np.random.default_rng([SEED, 2])
        for _ in range(100):
            k = int(rng.integers(1, 501))
            t = sample_uniform_tree(k, rng)
            c = contour_of(t)
            i = int(rng.integers(2 * k + 1))
            d = bfs_oracle(tree_map(t), int(t.visit[i]))
            for j in range(2 * k + 1):
                assert contour_distance(c, i, j) == d[t.visit[j]]
        for _ in range(100):
            l = int(rng.integers(2, 25))  # the 0.25 window keeps l <= 30
            q = sample_simple_boundary_quad(8 * l, l, 0.25, rng)
            assert q.half_perimeter <= 30
            dq, cert = glue(q, sample_uniform_tree(q.half_perimeter, rng))
            x = int(rng.integers(dq.map.vertex_count))
            ref = bfs_distances(dq.map, [x])
            for y in rng.choice(dq.map.vertex_count, size=min(8, dq.map.vertex_count), replace=False):
                assert quotient_chain_distance(q, cert, x, int(y)) == ref[y]


def test_03_tree_sampler_laws(capsys):
    with criterion(3, "chi-square over the 14 trees at k=4 p > 0.001, exploration TV < 0.02 at k=6 j=3",
                   capsys):
        rng = np.random.default_rng([SEED, 3])
        idx = {t: i for i, t in enumerate(all_trees(4))}
        counts = Counter(idx[sample_uniform_tree(4, rng)] for _ in range(100000))
        p = chisquare([counts[i] for i in range(14)]).pvalue
        print(f"chi-square p = {p:.4f}")
        assert len(idx) == 14 and p > 0.001
        seen = Counter()
        n = 100000
        for _ in range(n):
            mt = explore_tree(sample_uniform_tree(6, rng), 3)
            seen[mt.key()] += 1
        exact = {}
        for t in all_trees(6):
            mt = explore_tree(t, 3)
            exact[mt.key()] = float(exploration_probability(mt, 6))
        assert abs(sum(exact.values()) - 1) < 1e-12
        tv = 0.5 * sum(abs(seen[key] / n - exact.get(key, 0.0)) for key in set(seen) | set(exact))
        print(f"exploration TV = {tv:.4f}")
        assert tv < 0.02


@pytest.fixture(scope="module")
def out_dir(tmp_path_factory):
    return tmp_path_factory.mktemp("acceptance")


@pytest.mark.slow
def test_04_overshoot_tails(capsys):
    with criterion(4, "O^s exponent in [-1.8, -1.2], O exponent in [-0.75, -0.3] at f=1e5, l=3 sqrt f", capsys):
        rep = overshoot_report(SEED, f=100000, replicates=1000)
        fits = rep.data["fits"]
        print(f"O^s {fits['simple']['exponent']:.3f}, O {fits['full']['exponent']:.3f}, "
              f"O over the perimeter window {fits['full_perimeter_window']['exponent']:.3f}")
        assert rep.passed, report_lines(rep)


@pytest.mark.slow
def test_05_peeling(capsys):
    with criterion(5, "ball containment on every layer, CCDF slope in [-1.6, -0.8], sup a CCDF stable", capsys):
        rep = peel_tail_report(SEED, f=100000, spine=40, min_increments=4000)
        s = rep.data["series"]
        print(f"slope {s['slope']:.3f}, sup {s['sup_a_ccdf']:.3f} vs {s['sup_a_ccdf_half']:.3f} on half")
        assert rep.passed, report_lines(rep)


def test_06_claim_oracle(capsys):
    with criterion(6, "sup_{a<=1000} a P(O >= tau_1 + ... + tau_a) finite and stable at 1e6 samples", capsys):
        rep = claim_report(SEED, samples=10 ** 6, a_max=1000)
        print(f"sup {rep.data['series']['sup']:.4f}, half samples {rep.data['series']['sup_half_samples']:.4f}")
        assert rep.passed, report_lines(rep)


@pytest.mark.slow
def test_07_diameter_scaling(capsys):
    with criterion(7, "median diam/f^(1/4) decreasing over f in 1e3..1e5, lower bound in >= 95%", capsys):
        rep = diameter_report(SEED, f_grid=(1000, 10000, 100000), sigma=1.0, replicates=50)
        for p in rep.data["series"]["points"]:
            print(f"f={p['f']}: median {p['median_diam_over_f14']:.3f}, bound {p['lower_bound_fraction']:.2f}")
        assert rep.passed, report_lines(rep)


@pytest.mark.slow
def test_08_subadditive_constant(capsys):
    with criterion(8, "median d(kappa_0, kappa_n)/n decreasing over n in 5..40, subadditivity exact", capsys):
        rep = subadditive_report(SEED, n_grid=(5, 10, 20, 40), replicates=50)
        print("medians", [p["median_ratio"] for p in rep.data["series"]["points"]])
        assert rep.passed, report_lines(rep)


def test_09_rn_bounds(capsys):
    with criterion(9, "tree ratio <= 1.05 gamma^(-3/2), map chain <= alpha^(-3) sigma^(-1/2) e^(9 sigma^2/4)",
                   capsys):
        rep = rn_report(k_values=(50, 100, 200), gamma=0.25, sigma=1.0, alpha=0.1)
        r = rep.data["series"]
        assert max(t["ratio"] for t in r["tree"]) <= 1.05 * 0.25 ** -1.5
        assert rep.passed, report_lines(rep)


SMALL_RUNS = [
    ("overshoot", "--f", 3000, "--replicates", 300, "--bootstrap", 20),
    ("diameter", "--f", "200,400", "--replicates", 4),
    ("subadditive", "--n", "1,2,4", "--f", 3000, "--replicates", 4),
    ("rn", "--k", "20,40"),
    ("donsker", "--k-small", 50, "--k-large", 200, "--samples", 500),
    ("peel-tail", "--f", 3000, "--spine", 12, "--min-increments", 1000, "--a-max", 20),
    ("claim", "--samples", 20000, "--a-max", 100),
]


def _contents(d):
    return {n: (d / n).read_bytes() for n in sorted(os.listdir(d))}


def test_10_determinism(out_dir, capsys):
    with criterion(10, "every experiment byte-identical across thread counts", capsys):
        for argv in SMALL_RUNS:
            outs = []
            for threads in (1, 3):
                d = out_dir / f"{argv[0]}-{threads}"
                code = run(["experiment"] + [str(a) for a in argv] +
                           ["--seed", str(SEED), "--threads", str(threads), "--out", str(d)])
                assert code == 0, argv[0]
                outs.append(_contents(d))
            assert outs[0] == outs[1], argv[0]
            assert "report.json" in outs[0] and any(n.endswith(".png") for n in outs[0])
