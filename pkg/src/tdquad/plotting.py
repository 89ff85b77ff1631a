"""Figures for experiment reports, rendered off-screen to PNG.

PNG output from the Agg backend is a pure function of the drawing commands
once the metadata chunk (which would carry the matplotlib version) is
dropped, so reruns with the same data give byte-identical files. Text is
kept to the bundled DejaVu font for the same reason.
"""
import io

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .io import atomic_write_bytes  # noqa: E402

_STYLE = {"font.family": "DejaVu Sans", "font.size": 9, "figure.dpi": 100, "svg.hashsalt": "tdquad",
          "path.simplify": False}


def _save(fig, path):
    buf = io.BytesIO()
    fig.savefig(buf, format="png", metadata={"Software": None})
    plt.close(fig)
    atomic_write_bytes(path, buf.getvalue())


def _ccdf(x):
    xs = np.sort(np.asarray(x))
    xs = xs[xs > 0]
    u = np.unique(xs)
    return u, 1.0 - np.searchsorted(xs, u, side="left") / xs.shape[0]


def plot_tails(path, samples: dict, fits: dict = None, title: str = ""):
    """Log-log empirical CCDFs, with the fitted slope drawn over its window."""
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(5, 4))
        for name in sorted(samples):
            u, p = _ccdf(samples[name])
            if u.size == 0:
                continue
            (line,) = ax.loglog(u, p, drawstyle="steps-post", label=name)
            fit = (fits or {}).get(name)
            if fit is not None and np.isfinite(fit.exponent):
                lo = fit.x_min
                hi = fit.x_max if np.isfinite(fit.x_max) else u.max()
                xx = np.array([lo, hi], float)
                p0 = np.interp(lo, u, p)
                ax.loglog(xx, p0 * (xx / lo) ** fit.exponent, "--", color=line.get_color(),
                          label=f"{name} fit {fit.exponent:.2f}")
        ax.set_xlabel("k")
        ax.set_ylabel("P(X >= k)")
        ax.set_title(title)
        ax.legend(loc="lower left")
        _save(fig, path)


def plot_series(path, x, ys: dict, xlabel: str, ylabel: str, title: str = "", logx: bool = False):
    """One marker line per named series."""
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(5, 4))
        for name in sorted(ys):
            ax.plot(x, ys[name], "o-", label=name)
        if logx:
            ax.set_xscale("log")
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        ax.set_title(title)
        ax.legend()
        _save(fig, path)


def plot_table(path, table, xlabel: str, ylabels, title: str = "", loglog: bool = True):
    """Columns 1.. of a 2-d table against column 0, one panel each."""
    table = np.asarray(table, float)
    n = table.shape[1] - 1
    with plt.rc_context(_STYLE):
        fig, axes = plt.subplots(1, n, figsize=(4 * n, 3.5), squeeze=False)
        for j, ax in enumerate(axes[0]):
            y = table[:, j + 1]
            ok = y > 0 if loglog else np.ones_like(y, bool)
            ax.plot(table[ok, 0], y[ok], ".-")
            if loglog:
                ax.set_xscale("log")
                ax.set_yscale("log")
            ax.set_xlabel(xlabel)
            ax.set_ylabel(ylabels[j])
        fig.suptitle(title)
        _save(fig, path)


def plot_histograms(path, samples: dict, xlabel: str, title: str = "", bins: int = 40):
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(5, 4))
        allv = np.concatenate([np.asarray(v, float) for v in samples.values()])
        edges = np.linspace(allv.min(), allv.max(), bins + 1)
        for name in sorted(samples):
            ax.hist(samples[name], bins=edges, density=True, histtype="step", label=name)
        ax.set_xlabel(xlabel)
        ax.set_title(title)
        ax.legend()
        _save(fig, path)
