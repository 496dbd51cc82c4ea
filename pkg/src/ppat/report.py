"""Report rendering: metrics files (JSON/CSV) and matplotlib figures for
training curves, fold accuracies, ablation rows, and the 12-frame strip.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")  # headless rendering only

import matplotlib.pyplot as plt
import numpy as np

from .model import EpochStats
from .raster import rasterize_sequence
from .sketch import Sketch, decompose


def write_metrics_json(metrics, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(metrics, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def write_fold_csv(metrics_list: Sequence[Mapping], path: str | Path) -> Path:
    """One row per (run, fold) with the shared metric columns."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["run_id", "row", "fold", "acc", "recall_pos", "recall_neg", "mean_acc"])
        for metrics in metrics_list:
            for fold in metrics["folds"]:
                writer.writerow(
                    [
                        metrics["run_id"],
                        metrics.get("row", ""),
                        fold["fold"],
                        f"{fold['acc']:.6f}",
                        f"{fold['recall_pos']:.6f}",
                        f"{fold['recall_neg']:.6f}",
                        f"{metrics['mean_acc']:.6f}",
                    ]
                )
    return path


def plot_training_curve(log: Sequence[EpochStats], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    epochs = [s.epoch for s in log]
    fig, ax_loss = plt.subplots(figsize=(7, 4))
    ax_loss.plot(epochs, [s.mean_loss for s in log], color="tab:red", label="mean loss")
    ax_loss.set_xlabel("epoch")
    ax_loss.set_ylabel("mean loss", color="tab:red")
    ax_acc = ax_loss.twinx()
    ax_acc.plot(
        epochs, [s.train_accuracy for s in log], color="tab:blue", label="train accuracy"
    )
    ax_acc.set_ylabel("train accuracy", color="tab:blue")
    ax_acc.set_ylim(0.0, 1.05)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_fold_accuracies(metrics_by_name: Mapping[str, Mapping], path: str | Path) -> Path:
    """Grouped per-fold bars for one or more runs sharing a fold plan."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    names = list(metrics_by_name)
    n_folds = len(next(iter(metrics_by_name.values()))["folds"])
    width = 0.8 / max(1, len(names))
    fig, ax = plt.subplots(figsize=(8, 4))
    for i, name in enumerate(names):
        metrics = metrics_by_name[name]
        accs = [fold["acc"] for fold in metrics["folds"]]
        positions = np.arange(n_folds) + i * width
        ax.bar(positions, accs, width=width, label=f"{name} (mean {metrics['mean_acc']:.3f})")
    ax.set_xticks(np.arange(n_folds) + 0.4 - width / 2)
    ax.set_xticklabels([f"fold {i}" for i in range(n_folds)])
    ax.set_ylabel("accuracy")
    ax.set_ylim(0.0, 1.05)
    ax.legend(loc="lower right")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_ablation_rows(rows: Sequence[Mapping], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    names = [row["row"] for row in rows]
    means = [row["mean_acc"] for row in rows]
    fig, ax = plt.subplots(figsize=(7, 3.5))
    ax.barh(names, means, color="tab:purple")
    for i, mean in enumerate(means):
        ax.text(mean + 0.01, i, f"{mean:.3f}", va="center")
    ax.set_xlabel("mean 5-fold accuracy")
    ax.set_xlim(0.0, 1.1)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_frame_strip(sketch: Sketch, path: str | Path, size: int = 96) -> Path:
    """The 12 cumulative frames left-to-right, top-to-bottom."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    seq = decompose(sketch)
    frames = rasterize_sequence(seq, size, size)
    fig, axes = plt.subplots(2, 6, figsize=(12, 4.4))
    for i, (axis, frame) in enumerate(zip(axes.ravel(), frames)):
        axis.imshow(frame.to_array())
        axis.set_title(f"{i + 1} ({seq.cumulative_counts[i]} strokes)", fontsize=8)
        axis.axis("off")
    fig.suptitle(sketch.sketch_id)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
