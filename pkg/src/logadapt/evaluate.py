"""Per-event confusion accounting, metrics, aggregation, and timing.

Anomalous is the positive class. Metrics with a zero denominator are
reported as ``None`` (an explicit undefined marker), never silently 0 or
1; extreme class imbalance makes that case common, and conflating it with
a real score would corrupt aggregates.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import LengthMismatch


@dataclass
class Confusion:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def add(self, other: "Confusion") -> "Confusion":
        return Confusion(
            self.tp + other.tp, self.fp + other.fp, self.fn + other.fn, self.tn + other.tn
        )

    def as_dict(self) -> dict:
        return {"tp": self.tp, "fp": self.fp, "fn": self.fn, "tn": self.tn}


def confusion(pred: np.ndarray, truth: np.ndarray) -> Confusion:
    """Elementwise confusion counts; anomalous (True) is positive."""
    pred = np.asarray(pred, dtype=bool)
    truth = np.asarray(truth, dtype=bool)
    if pred.shape != truth.shape:
        raise LengthMismatch(f"{pred.shape} predictions vs {truth.shape} labels")
    return Confusion(
        tp=int(np.sum(pred & truth)),
        fp=int(np.sum(pred & ~truth)),
        fn=int(np.sum(~pred & truth)),
        tn=int(np.sum(~pred & ~truth)),
    )


def metrics(c: Confusion) -> tuple[float | None, float | None, float | None]:
    """(precision, recall, f1); None marks an undefined metric.

    precision = tp/(tp+fp), recall = tp/(tp+fn), f1 = 2PR/(P+R). f1 is
    defined only when both P and R are defined and nonzero.
    """
    precision = c.tp / (c.tp + c.fp) if (c.tp + c.fp) > 0 else None
    recall = c.tp / (c.tp + c.fn) if (c.tp + c.fn) > 0 else None
    if precision is not None and recall is not None and precision > 0 and recall > 0:
        f1 = 2.0 * precision * recall / (precision + recall)
    else:
        f1 = None
    return precision, recall, f1


@dataclass
class DetectionReport:
    """Predictions and scores for one task, plus wall-clock timings."""

    task_id: str
    predicted: np.ndarray
    confusion: Confusion
    precision: float | None
    recall: float | None
    f1: float | None
    train_time_s: float = 0.0
    test_time_s: float = 0.0

    @classmethod
    def from_predictions(
        cls,
        task_id: str,
        predicted: np.ndarray,
        truth: np.ndarray,
        train_time_s: float = 0.0,
        test_time_s: float = 0.0,
    ) -> "DetectionReport":
        c = confusion(predicted, truth)
        precision, recall, f1 = metrics(c)
        return cls(task_id, np.asarray(predicted, dtype=bool), c, precision, recall, f1,
                   train_time_s, test_time_s)

    def as_dict(self, include_timings: bool = True) -> dict:
        row = {
            "task_id": self.task_id,
            "confusion": self.confusion.as_dict(),
            "precision": _round_metric(self.precision),
            "recall": _round_metric(self.recall),
            "f1": _round_metric(self.f1),
        }
        if include_timings:
            row["train_time_s"] = self.train_time_s
            row["test_time_s"] = self.test_time_s
        return row


def _round_metric(value: float | None) -> float | None:
    return None if value is None else round(value, 6)


def _pct(value: float | None) -> float | None:
    """Percentage with 2 decimal places, as in result tables."""
    return None if value is None else round(100.0 * value, 2)


def _macro(values: list[float | None]) -> tuple[float | None, int]:
    """(mean of defined values, count of undefined values)."""
    defined = [v for v in values if v is not None]
    undefined = len(values) - len(defined)
    if not defined:
        return None, undefined
    return float(np.mean(defined)), undefined


def aggregate(reports: list[DetectionReport]) -> dict:
    """Micro (pooled confusion) and macro (mean of defined per-task
    metrics) aggregates, plus total and mean timings."""
    if not reports:
        raise ValueError("aggregate requires at least one report")
    pooled = Confusion()
    for report in reports:
        pooled = pooled.add(report.confusion)
    micro_p, micro_r, micro_f1 = metrics(pooled)
    macro_p, undef_p = _macro([r.precision for r in reports])
    macro_r, undef_r = _macro([r.recall for r in reports])
    macro_f1, undef_f1 = _macro([r.f1 for r in reports])
    train_times = [r.train_time_s for r in reports]
    test_times = [r.test_time_s for r in reports]
    return {
        "tasks": len(reports),
        "micro": {
            "confusion": pooled.as_dict(),
            "precision": _round_metric(micro_p),
            "recall": _round_metric(micro_r),
            "f1": _round_metric(micro_f1),
            "precision_pct": _pct(micro_p),
            "recall_pct": _pct(micro_r),
            "f1_pct": _pct(micro_f1),
        },
        "macro": {
            "precision": _round_metric(macro_p),
            "recall": _round_metric(macro_r),
            "f1": _round_metric(macro_f1),
            "precision_pct": _pct(macro_p),
            "recall_pct": _pct(macro_r),
            "f1_pct": _pct(macro_f1),
            "undefined_counts": {"precision": undef_p, "recall": undef_r, "f1": undef_f1},
        },
        "timing": {
            "train_total_s": float(np.sum(train_times)),
            "train_mean_s": float(np.mean(train_times)),
            "test_total_s": float(np.sum(test_times)),
            "test_mean_s": float(np.mean(test_times)),
        },
    }


# Sections whose wall time never counts toward reported training time.
# Representation construction is measured but excluded by convention, and
# prediction time is reported separately as testing time.
EXCLUDED_FROM_TRAIN = frozenset({"represent", "predict"})


@dataclass
class TimingSheet:
    """Accumulated wall-clock seconds per labeled section."""

    sections: dict[str, float] = field(default_factory=dict)

    def add(self, section: str, seconds: float) -> None:
        self.sections[section] = self.sections.get(section, 0.0) + seconds

    @property
    def train_time_s(self) -> float:
        return sum(v for k, v in self.sections.items() if k not in EXCLUDED_FROM_TRAIN)

    @property
    def test_time_s(self) -> float:
        return self.sections.get("predict", 0.0)


def timed(section: str, thunk: Callable, sheet: TimingSheet | None = None):
    """Run ``thunk`` and return (result, monotonic wall seconds).

    When a sheet is given the seconds are also accumulated under
    ``section``, so callers can report training time that excludes
    sections like "represent".
    """
    start = time.perf_counter()
    result = thunk()
    seconds = time.perf_counter() - start
    if sheet is not None:
        sheet.add(section, seconds)
    return result, seconds
