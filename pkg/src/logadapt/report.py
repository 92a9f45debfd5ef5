"""Report rendering: delimited per-task tables and summary figures.

Every evaluation run writes a machine-readable JSON bundle plus a CSV of
per-task metrics and PNG figures rendered from the same data, so results
can be inspected without extra tooling.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .evaluate import DetectionReport

_CSV_FIELDS = ("task_id", "tp", "fp", "fn", "tn", "precision", "recall", "f1")


def write_metrics_csv(reports: list[DetectionReport], path: str | Path) -> None:
    """Per-task metric table; undefined metrics stay empty cells."""
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(_CSV_FIELDS)
        for report in reports:
            c = report.confusion
            writer.writerow(
                [
                    report.task_id,
                    c.tp,
                    c.fp,
                    c.fn,
                    c.tn,
                    _cell(report.precision),
                    _cell(report.recall),
                    _cell(report.f1),
                ]
            )


def _cell(value: float | None) -> str:
    return "" if value is None else f"{value:.6f}"


def write_results_json(reports: list[DetectionReport], summary: dict, path: str | Path) -> None:
    """Deterministic result bundle: per-task rows without wall-clock."""
    payload = {
        "schema": "logadapt-results/1",
        "tasks": [r.as_dict(include_timings=False) for r in reports],
        "summary": {k: v for k, v in summary.items() if k != "timing"},
    }
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, indent=2)
        handle.write("\n")


def write_timings_json(reports: list[DetectionReport], summary: dict, path: str | Path,
                       extra: dict | None = None) -> None:
    """Wall-clock measurements, kept apart from the deterministic results."""
    payload = {
        "schema": "logadapt-timings/1",
        "per_task": [
            {"task_id": r.task_id, "train_time_s": r.train_time_s, "test_time_s": r.test_time_s}
            for r in reports
        ],
        "aggregate": summary.get("timing", {}),
    }
    if extra:
        payload.update(extra)
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, indent=2)
        handle.write("\n")


def render_metrics_figure(reports: list[DetectionReport], summary: dict, path: str | Path) -> None:
    """Grouped per-task precision/recall/F1 bars with macro-F1 reference."""
    n = len(reports)
    x = np.arange(n)
    width = 0.27

    def series(values):
        return [v if v is not None else 0.0 for v in values]

    fig, ax = plt.subplots(figsize=(max(6.0, 0.45 * n + 2.0), 4.0))
    ax.bar(x - width, series([r.precision for r in reports]), width, label="precision")
    ax.bar(x, series([r.recall for r in reports]), width, label="recall")
    ax.bar(x + width, series([r.f1 for r in reports]), width, label="f1")
    macro_f1 = summary["macro"]["f1"]
    if macro_f1 is not None:
        ax.axhline(macro_f1, color="black", linestyle="--", linewidth=1.0,
                   label=f"macro f1 = {macro_f1:.3f}")
    ax.set_xticks(x)
    ax.set_xticklabels([r.task_id for r in reports], rotation=90, fontsize=7)
    ax.set_ylim(0.0, 1.05)
    ax.set_ylabel("score")
    ax.set_title("Per-task detection metrics")
    ax.legend(loc="lower right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_confusion_figure(summary: dict, path: str | Path) -> None:
    """Pooled confusion counts on a log scale."""
    pooled = summary["micro"]["confusion"]
    labels = ["tp", "fp", "fn", "tn"]
    values = [max(pooled[k], 0) for k in labels]
    fig, ax = plt.subplots(figsize=(4.5, 3.5))
    bars = ax.bar(labels, values, color=["#2a9d8f", "#e76f51", "#e9c46a", "#8ab17d"])
    ax.set_yscale("symlog")
    ax.set_ylabel("events")
    ax.set_title("Pooled confusion counts")
    for bar, value in zip(bars, values):
        ax.annotate(str(value), (bar.get_x() + bar.get_width() / 2, value),
                    ha="center", va="bottom", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_training_curve(telemetry_path: str | Path, path: str | Path) -> None:
    """Mean query loss per meta-epoch from the training telemetry log."""
    epochs = []
    losses = []
    with open(telemetry_path, encoding="utf-8") as handle:
        for line in handle:
            if not line.strip():
                continue
            record = json.loads(line)
            epochs.append(record["epoch"])
            losses.append(record["mean_loss"])
    fig, ax = plt.subplots(figsize=(5.0, 3.5))
    ax.plot(epochs, losses, marker="o", markersize=3)
    ax.set_xlabel("meta-epoch")
    ax.set_ylabel("mean query loss")
    ax.set_title("Meta-training loss")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
