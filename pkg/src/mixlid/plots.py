"""Matplotlib figure output for training curves and evaluation reports.

Figures are written straight to files (Agg backend); nothing is shown
interactively.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .evaluation import ConfusionMatrix, Metrics
from .wordmodel import TrainHistory


def save_history_figure(history: TrainHistory, path, title: str = "training") -> None:
    """Loss curve plus train/dev accuracy curves, one PNG."""
    epochs = [row.epoch for row in history.epochs]
    fig, (ax_loss, ax_acc) = plt.subplots(1, 2, figsize=(9, 3.5))
    ax_loss.plot(epochs, [row.loss for row in history.epochs], color="tab:red")
    ax_loss.set_xlabel("epoch")
    ax_loss.set_ylabel("loss")
    ax_loss.set_title(f"{title}: loss")
    ax_acc.plot(epochs, [row.train_acc for row in history.epochs],
                label="train", color="tab:blue")
    ax_acc.plot(epochs, [row.dev_acc for row in history.epochs],
                label="dev", color="tab:green")
    ax_acc.set_xlabel("epoch")
    ax_acc.set_ylabel("accuracy")
    ax_acc.set_ylim(0.0, 1.02)
    ax_acc.set_title(f"{title}: accuracy")
    ax_acc.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_confusion_figure(matrices: dict[str, ConfusionMatrix], path,
                          native_name: str = "native", en_name: str = "en") -> None:
    """One heatmap panel per model, predicted classes as rows."""
    names = list(matrices)
    fig, axes = plt.subplots(1, len(names), figsize=(4.2 * len(names), 3.8),
                             squeeze=False)
    labels = [native_name, en_name]
    for ax, name in zip(axes[0], names):
        cm = matrices[name]
        grid = np.array([[cm[gold, pred] for gold in (0, 1)] for pred in (0, 1)])
        ax.imshow(grid, cmap="Blues")
        for row in range(2):
            for col in range(2):
                ax.text(col, row, str(grid[row, col]), ha="center", va="center",
                        color="black")
        ax.set_xticks([0, 1], labels)
        ax.set_yticks([0, 1], labels)
        ax.set_xlabel("gold")
        ax.set_ylabel("predicted")
        ax.set_title(name)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_metrics_figure(rows: dict[str, Metrics], path) -> None:
    """Grouped bar chart of the four metrics per model."""
    cells = ["accuracy", "precision", "recall", "f1"]
    names = list(rows)
    x = np.arange(len(cells))
    width = 0.8 / max(1, len(names))
    fig, ax = plt.subplots(figsize=(7, 3.8))
    for i, name in enumerate(names):
        values = [rows[name].cells()[c] or 0.0 for c in cells]
        ax.bar(x + i * width, values, width, label=name)
    ax.set_xticks(x + width * (len(names) - 1) / 2, cells)
    ax.set_ylim(0, 105)
    ax.set_ylabel("%")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
