"""Figures written next to the TSV reports."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "figure.figsize": (6.4, 3.6),
    "figure.dpi": 120,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 9,
    "legend.frameon": False,
}


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def plot_ranks(report, path):
    """Rank histogram and the cumulative hits curve of one report."""
    ranks = np.asarray(report.ranks)
    n = report.num_candidates
    with plt.rc_context(STYLE):
        fig, (ax1, ax2) = plt.subplots(1, 2)
        bins = min(50, max(1, n))
        ax1.hist(ranks, bins=bins, range=(1, n + 1), color="#3b6ea5")
        ax1.set_xlabel("rank")
        ax1.set_ylabel("test samples")
        ax1.set_title(f"MR {report.mr:.1f} of {n}")
        ks = np.arange(1, n + 1)
        frac = np.searchsorted(np.sort(ranks), ks, side="right") / len(ranks)
        ax2.plot(ks, frac, color="#c0504d")
        ax2.set_xscale("log")
        ax2.set_ylim(0, 1.02)
        ax2.set_xlabel("k")
        ax2.set_ylabel("hits@k")
        ax2.set_title(f"rank-AUC {100 * report.auc:.2f}")
        if report.label:
            fig.suptitle(report.label)
        return _save(fig, path)


def plot_loss(history, path):
    h = np.asarray(history, dtype=float)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.plot(np.arange(1, len(h) + 1), h, lw=0.8, color="#7f7f7f", label="epoch mean")
        w = min(50, len(h))
        if w > 1:
            smooth = np.convolve(h, np.ones(w) / w, mode="valid")
            ax.plot(np.arange(w, len(h) + 1), smooth, color="#3b6ea5", label=f"moving average ({w})")
        ax.set_xlabel("epoch")
        ax.set_ylabel("BPR loss")
        ax.legend()
        return _save(fig, path)


def plot_sweep(trials, path):
    """Validation rank-AUC of every sweep configuration."""
    aucs = [rep.auc for _, rep in trials]
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        x = np.arange(len(aucs))
        ax.bar(x, aucs, color="#3b6ea5")
        best = int(np.argmax(aucs))
        ax.bar([best], [aucs[best]], color="#c0504d")
        ax.set_xlabel("configuration")
        ax.set_ylabel("validation rank-AUC")
        ax.set_ylim(0, 1)
        return _save(fig, path)
