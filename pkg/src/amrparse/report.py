"""Figure rendering for the reporting paths (training curves, source stats)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .stats import SOURCES  # noqa: E402

_SOURCE_TITLES = {"vocab": "vocabulary", "src": "source copy", "tgt": "target copy"}


def _save(fig, path):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=120, metadata={"Software": None})
    plt.close(fig)


def save_training_curves(metrics, path) -> None:
    """Loss and dev Smatch per epoch, side by side."""
    epochs = [m.epoch for m in metrics]
    fig, (ax_loss, ax_f1) = plt.subplots(1, 2, figsize=(9, 3.5))
    ax_loss.plot(epochs, [m.loss for m in metrics], color="tab:red")
    ax_loss.set_xlabel("epoch")
    ax_loss.set_ylabel("training loss")
    ax_loss.grid(alpha=0.3)
    ax_f1.plot(epochs, [m.dev_f1 for m in metrics], color="tab:blue", label="dev F1")
    ax_f1.plot(epochs, [m.best_f1 for m in metrics], color="tab:blue",
               linestyle="--", alpha=0.5, label="best F1")
    ax_f1.set_xlabel("epoch")
    ax_f1.set_ylabel("Smatch F1")
    ax_f1.set_ylim(0.0, 1.05)
    ax_f1.legend(loc="lower right", frameon=False)
    ax_f1.grid(alpha=0.3)
    fig.tight_layout()
    _save(fig, path)


def save_source_stats_figure(stats: dict, path) -> None:
    """Grouped bars: frequency, precision and recall per node source."""
    import numpy as np

    measures = ("frequency", "precision", "recall")
    colors = ("tab:gray", "tab:blue", "tab:orange")
    x = np.arange(len(SOURCES))
    width = 0.27
    fig, ax = plt.subplots(figsize=(6, 3.5))
    for i, (measure, color) in enumerate(zip(measures, colors)):
        values = [getattr(stats[z], measure) for z in SOURCES]
        bars = ax.bar(x + (i - 1) * width, values, width, label=measure, color=color)
        ax.bar_label(bars, fmt="%.2f", fontsize=7)
    ax.set_xticks(x)
    ax.set_xticklabels([_SOURCE_TITLES[z] for z in SOURCES])
    ax.set_ylim(0.0, 1.1)
    ax.set_ylabel("score")
    ax.legend(frameon=False, ncol=3, loc="upper center")
    fig.tight_layout()
    _save(fig, path)


def write_metrics_tsv(metrics, path) -> None:
    lines = ["epoch\tloss\tdev_f1\tbest_f1\tseconds"]
    for m in metrics:
        lines.append(f"{m.epoch}\t{m.loss:.6f}\t{m.dev_f1:.4f}\t{m.best_f1:.4f}\t{m.seconds:.2f}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
