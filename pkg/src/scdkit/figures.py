"""Report figures, rendered headless to files next to the delimited output."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .trials import eer, eer_threshold

_FIG_DPI = 150


def plot_score_distributions(scores, path: str) -> str:
    """Target/nontarget cosine score histograms with the EER operating point."""
    targets = [s for s, is_target in scores if is_target]
    nontargets = [s for s, is_target in scores if not is_target]
    fig, ax = plt.subplots(figsize=(6, 4))
    bins = np.linspace(
        min(min(targets), min(nontargets)), max(max(targets), max(nontargets)), 40
    )
    ax.hist(nontargets, bins=bins, alpha=0.6, label=f"nontarget (n={len(nontargets)})")
    ax.hist(targets, bins=bins, alpha=0.6, label=f"target (n={len(targets)})")
    threshold = eer_threshold(scores)
    ax.axvline(threshold, color="k", linestyle="--", linewidth=1, label="EER threshold")
    ax.set_xlabel("cosine score")
    ax.set_ylabel("trials")
    ax.set_title(f"verification scores, EER = {eer(scores):.2f}%")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=_FIG_DPI)
    plt.close(fig)
    return path


def plot_det_curve(scores, path: str) -> str:
    """False-negative vs false-positive rate over the threshold sweep."""
    values = sorted({s for s, _ in scores})
    targets = np.sort(np.array([s for s, it in scores if it]))
    nontargets = np.sort(np.array([s for s, it in scores if not it]))
    fnr = [np.searchsorted(targets, t, side="left") / len(targets) for t in values]
    fpr = [(len(nontargets) - np.searchsorted(nontargets, t, side="left")) / len(nontargets)
           for t in values]
    fig, ax = plt.subplots(figsize=(5, 5))
    ax.plot(np.array(fpr) * 100, np.array(fnr) * 100, lw=1.5)
    lim = max(1.0, np.percentile(np.array(fpr) * 100, 99), np.percentile(np.array(fnr) * 100, 99))
    ax.plot([0, 100], [0, 100], "k:", lw=0.8)
    e = eer(scores)
    ax.plot([e], [e], "ro", ms=5, label=f"EER = {e:.2f}%")
    ax.set_xlim(0, min(100, lim * 1.3))
    ax.set_ylim(0, min(100, lim * 1.3))
    ax.set_xlabel("false positive rate (%)")
    ax.set_ylabel("false negative rate (%)")
    ax.set_title("detection trade-off")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=_FIG_DPI)
    plt.close(fig)
    return path


def plot_change_density(specs, path: str) -> str:
    """Distribution of per-utterance change counts with the mean marked."""
    counts = [spec.reference.n_noninitial_tags() for spec in specs]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.hist(counts, bins=range(0, max(counts) + 2), align="left", rwidth=0.9)
    mean = sum(counts) / len(counts)
    ax.axvline(mean, color="k", linestyle="--", linewidth=1, label=f"mean = {mean:.2f}")
    ax.set_xlabel("non-initial change tags per utterance")
    ax.set_ylabel("utterances")
    ax.set_title("speaker-change density")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=_FIG_DPI)
    plt.close(fig)
    return path


def plot_error_rates(rates: dict[str, float], path: str) -> str:
    """Bar chart of whichever corpus error rates are present."""
    names = list(rates)
    values = [rates[n] for n in names]
    fig, ax = plt.subplots(figsize=(6, 4))
    bars = ax.bar(names, values)
    for bar, v in zip(bars, values):
        ax.annotate(
            f"{v:.2f}",
            (bar.get_x() + bar.get_width() / 2, v),
            ha="center",
            va="bottom",
            fontsize=9,
        )
    ax.set_ylabel("percent")
    ax.set_title("corpus error rates")
    fig.tight_layout()
    fig.savefig(path, dpi=_FIG_DPI)
    plt.close(fig)
    return path
