"""Experiment reports: run an experiment, judge it against its criteria, lay out artifacts.

Every builder returns an :class:`ExperimentReport` whose ``data`` is the JSON
report (config echo, seed, series, fits, pass/fail per criterion). Tables
become CSV files and figures PNG files next to it. Nothing here depends on
the thread count, so reports are identical for any ``threads``.
"""
from dataclasses import asdict, dataclass, field
from math import sqrt
from typing import Callable, Dict

import numpy as np

from . import plotting
from .experiments import (claim_experiment, diameter_experiment, donsker_samples, overshoot_experiment,
                          peel_tail_experiment, rn_bound_check, subadditive_experiment)
from .peeling import IncrementSeries, increment_tail_ccdf
from scipy.stats import ks_2samp


@dataclass
class ExperimentReport:
    name: str
    data: dict
    tables: Dict[str, tuple] = field(default_factory=dict)  # file -> (rows, columns)
    figures: Dict[str, Callable] = field(default_factory=dict)  # file -> draw(path)

    @property
    def criteria(self) -> Dict[str, bool]:
        return self.data["criteria"]

    @property
    def passed(self) -> bool:
        return all(self.criteria.values())


def _report(name, config, seed, series, fits, criteria):
    return {"experiment": name, "config": config, "seed": seed, "series": series, "fits": fits,
            "criteria": {k: bool(v) for k, v in criteria.items()}}


def _strictly_decreasing(v):
    return all(b < a for a, b in zip(v, v[1:]))


def overshoot_report(seed, f=100000, l=None, replicates=1000, anchors=2, window=0.25, bootstrap=200, threads=1):
    l = int(round(3 * sqrt(f))) if l is None else l
    cfg = dict(f=f, l=l, replicates=replicates, anchors=anchors, window=window, bootstrap=bootstrap)
    r = overshoot_experiment(f, l, replicates, seed, anchors, window, threads, bootstrap)
    crit = {
        "simple overshoot exponent in [-1.8, -1.2]": -1.8 <= r.simple.exponent <= -1.2,
        "overshoot exponent in [-0.75, -0.3]": -0.75 <= r.full.exponent <= -0.3,
        "O >= O^s on every replicate": bool(np.all(r.o_samples >= r.os_samples)),
    }
    fits = {"simple": asdict(r.simple), "full": asdict(r.full), "full_perimeter_window": asdict(r.full_wide)}
    series = {"window": r.window, "perimeter_window": int(np.median(r.realized[:, 1])) // 2,
              "realized_median": np.median(r.realized, axis=0).tolist(),
              "maps": int(r.realized.shape[0])}
    rows = [(i, int(a), int(b), int(c)) for i, (a, b, c) in
            enumerate(zip(r.os_samples, r.o_samples, r.o_wide_samples))]
    rep = ExperimentReport("overshoot", _report("overshoot", cfg, seed, series, fits, crit))
    rep.tables["overshoots.csv"] = (rows, ["replicate", "simple_overshoot", "overshoot", "overshoot_perimeter_window"])
    rep.tables["maps.csv"] = ([tuple(x) for x in r.realized.tolist()], ["faces", "half_perimeter"])
    rep.figures["overshoot_tails.png"] = lambda p: plotting.plot_tails(
        p, {"O^s": r.os_samples, "O": r.o_samples, "O, window l/2": r.o_wide_samples},
        {"O^s": r.simple, "O": r.full, "O, window l/2": r.full_wide}, "boundary overshoots")
    return rep


def diameter_report(seed, f_grid=(1000, 10000, 100000), sigma=1.0, alpha=2.0, replicates=50, window=0.1,
                    threads=1):
    cfg = dict(f=list(f_grid), sigma=sigma, alpha=alpha, replicates=replicates, window=window)
    series, rows = diameter_experiment(f_grid, sigma, alpha, replicates, seed, window, threads)
    pts = series.points
    med = [p["median_diam_over_f14"] for p in pts]
    crit = {
        "median diam/f^(1/4) strictly decreasing": _strictly_decreasing(med),
        f"diam >= f^(1/4)/(log f)^{alpha:g} in >= 95% of replicates": all(
            p["lower_bound_fraction"] >= 0.95 for p in pts),
        "diam in map <= diam in tree on every replicate": all(p["map_le_tree_fraction"] == 1.0 for p in pts),
    }
    rep = ExperimentReport("diameter", _report("diameter", cfg, seed, asdict(series), {}, crit))
    rep.tables["series.csv"] = (pts, None)
    rep.tables["replicates.csv"] = (rows, None)
    fs = [p["f"] for p in pts]
    rep.figures["diameter_scaling.png"] = lambda p: plotting.plot_series(
        p, fs, {"median diam / f^(1/4)": med,
                "median diam (log f)^a / f^(1/4)": [q["median_diam_log_over_f14"] for q in pts]},
        "f", "normalized diameter", "decoration diameter", logx=True)
    return rep


def subadditive_report(seed, n_grid=(5, 10, 20, 40), f=100000, sigma=3.0, replicates=50, window=0.25, threads=1):
    cfg = dict(n=list(n_grid), f=f, sigma=sigma, replicates=replicates, window=window)
    series, extra = subadditive_experiment(n_grid, f, replicates, seed, sigma, window, threads)
    pts = series.points
    med = [p["median_ratio"] for p in pts]
    crit = {
        "median d(kappa_0, kappa_n)/n decreasing in n": _strictly_decreasing(med),
        "subadditivity along the spine on every instance": extra["subadditive_all"],
        "d(kappa_0, kappa_n)/n <= 1 on every instance": all(p["max_ratio"] <= 1.0 for p in pts),
    }
    rep = ExperimentReport("subadditive", _report("subadditive", cfg, seed, asdict(series), {}, crit))
    rep.tables["series.csv"] = (pts, None)
    ns = [p["n"] for p in pts]
    rep.tables["ratios.csv"] = ([[i] + row for i, row in enumerate(extra["ratios"].tolist())],
                                ["replicate"] + [f"n={n}" for n in ns])
    rep.figures["spine_ratios.png"] = lambda p: plotting.plot_series(
        p, ns, {"median": med, "max": [q["max_ratio"] for q in pts]}, "n", "d(kappa_0, kappa_n) / n",
        "distances along the spine", logx=True)
    return rep


def rn_report(k_values=(50, 100, 200), gamma=0.25, sigma=1.0, alpha=0.1, f=10 ** 6):
    cfg = dict(k=list(k_values), gamma=gamma, sigma=sigma, alpha=alpha, f=f)
    r = rn_bound_check(k_values, gamma, sigma, alpha, f)
    crit = {
        "tree-side ratio <= 1.05 gamma^(-3/2)": r["tree_ok"],
        "map-side chain <= alpha^(-3) sigma^(-1/2) exp(9 sigma^2/4)": r["map_ok"],
    }
    rep = ExperimentReport("rn", _report("rn", cfg, None, r, {}, crit))
    rep.tables["tree_ratios.csv"] = (r["tree"], None)
    ys = {}
    for t in r["tree"]:
        ys.setdefault(f"k'={t['k_prime'] // t['k']}k", []).append(t["ratio"])
    ks = sorted({t["k"] for t in r["tree"]})
    ys["bound"] = [r["tree"][0]["bound"]] * len(ks)
    rep.figures["tree_ratios.png"] = lambda p: plotting.plot_series(
        p, ks, ys, "k", "max ratio", "tree-side exploration ratios", logx=True)
    return rep


def donsker_report(seed, k_small=2000, k_large=8000, samples=10000):
    cfg = dict(k_small=k_small, k_large=k_large, samples=samples)
    a, b = donsker_samples(k_small, k_large, samples, seed)
    ks = float(ks_2samp(a, b).statistic)
    crit = {"KS distance < 0.05": ks < 0.05}
    rep = ExperimentReport("donsker", _report("donsker", cfg, seed, {"ks": ks}, {}, crit))
    rep.tables["maxima.csv"] = (list(zip(a.tolist(), b.tolist())), [f"k={k_small}", f"k={k_large}"])
    rep.figures["maxima.png"] = lambda p: plotting.plot_histograms(
        p, {f"k={k_small}": a, f"k={k_large}": b}, "max C / sqrt(2k)", "rescaled excursion maxima")
    return rep


def peel_tail_report(seed, f=100000, l=None, spine=40, min_increments=4000, window=0.25, a_max=100,
                     fit_max=None, threads=1):
    l = int(round(3 * sqrt(f))) if l is None else l
    cfg = dict(f=f, l=l, spine=spine, min_increments=min_increments, window=window, a_max=a_max,
               fit_max=fit_max)
    r = peel_tail_experiment(f, l, spine, min_increments, seed, window, a_max, fit_max, threads)
    inc = r["series"].increments
    half = IncrementSeries(inc[:len(inc) // 2], 0)
    sup_half = float(increment_tail_ccdf(half, a_max, min_count=1)[:, 2].max())
    sup_all = r["sup_a_ccdf"]
    crit = {
        "ball containment on every layer": r["balls_checked"],
        "increment CCDF slope in [-1.6, -0.8]": -1.6 <= r["slope"] <= -0.8,
        "sup a CCDF(a) stable within factor 2 under doubling": 0.5 <= sup_all / sup_half <= 2.0,
    }
    series = {"slope": r["slope"], "fit_max": r["fit_max"], "hosts": r["hosts"], "increments": len(inc),
              "sup_a_ccdf": sup_all, "sup_a_ccdf_half": sup_half}
    rep = ExperimentReport("peel-tail", _report("peel-tail", cfg, seed, series, {}, crit))
    rep.tables["ccdf.csv"] = (r["table"].tolist(), ["a", "ccdf", "a_ccdf"])
    rep.tables["increments.csv"] = ([(i, x) for i, x in enumerate(inc)], ["index", "increment"])
    rep.figures["increment_ccdf.png"] = lambda p: plotting.plot_table(
        p, r["table"], "a", ["P(increment >= a)", "a P(increment >= a)"], "peeling increments")
    return rep


def claim_report(seed, samples=10 ** 6, a_max=1000, tail_exponent=1.5):
    cfg = dict(samples=samples, a_max=a_max, tail_exponent=tail_exponent)
    full = claim_experiment(samples, seed, a_max, tail_exponent)
    half = claim_experiment(samples // 2, seed, a_max, tail_exponent)
    s_full, s_half = float(full[:, 2].max()), float(half[:, 2].max())
    crit = {
        "sup a P(O >= tau_1 + ... + tau_a) finite": bool(np.isfinite(s_full) and s_full > 0),
        "sup stable within factor 2 between sample sizes": 0.5 <= s_full / s_half <= 2.0,
    }
    series = {"sup": s_full, "sup_half_samples": s_half}
    rep = ExperimentReport("claim", _report("claim", cfg, seed, series, {}, crit))
    rep.tables["claim.csv"] = (full.tolist(), ["a", "probability", "a_probability"])
    rep.figures["claim.png"] = lambda p: plotting.plot_table(
        p, full, "a", ["P(O >= tau_1 + ... + tau_a)", "a P(...)"], "overshoot against hitting times")
    return rep


BUILDERS = {
    "overshoot": overshoot_report,
    "diameter": diameter_report,
    "subadditive": subadditive_report,
    "rn": rn_report,
    "donsker": donsker_report,
    "peel-tail": peel_tail_report,
    "claim": claim_report,
}
