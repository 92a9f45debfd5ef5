"""Constrained sampling of consecutive log splits into tasks.

A split is accepted when it has the exact requested length, overlaps no
previously reserved range of its corpus, and its anomalous fraction lies
inside the spec's inclusive bounds. Meta-testing query splits are drawn
with stratified start offsets over equal-width strata so the tasks spread
across the corpus's collection span.

Start offsets are drawn uniformly over the offsets that do not overlap a
reserved range (computed from the reservation gap structure), and the
anomaly-fraction constraint is rejection-sampled on top. This yields the
same distribution as uniform-then-reject while failing fast when no
non-overlapping offset exists at all.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ExhaustedAttempts
from .ingest import LogSplit
from .seeds import substream


@dataclass(frozen=True)
class SplitSpec:
    """Exact event count and inclusive anomalous-fraction bounds."""

    length: int
    anomaly_min: float = 0.0
    anomaly_max: float = 1.0

    def __post_init__(self):
        if self.length < 1:
            raise ValueError(f"split length must be >= 1, got {self.length}")
        if not 0.0 <= self.anomaly_min <= self.anomaly_max <= 1.0:
            raise ValueError(
                f"need 0 <= anomaly_min <= anomaly_max <= 1, got "
                f"[{self.anomaly_min}, {self.anomaly_max}]"
            )


@dataclass
class SamplerConfig:
    seed: int = 0
    max_attempts: int = 10_000
    reserved_ranges: list[tuple[int, int]] = field(default_factory=list)

    def __post_init__(self):
        if self.max_attempts < 1:
            raise ValueError(f"max_attempts must be >= 1, got {self.max_attempts}")
        for start, end in self.reserved_ranges:
            if start < 0 or end < start:
                raise ValueError(f"bad reserved range ({start}, {end})")


@dataclass(frozen=True)
class Task:
    """A (support, query) pair of disjoint consecutive splits."""

    task_id: str
    system_id: str
    support: LogSplit
    query: LogSplit


# Split-sampling presets mirroring the experiment layout: sources use
# 10,000-event splits with 0.01-0.5% anomalies; target support splits are
# 2,000 events with a tighter anomaly band and target query splits 10,000
# events with the wide band. Two target profiles cover the lower and
# higher anomaly-rate regimes.
PRESETS: dict[str, tuple[SplitSpec, SplitSpec]] = {
    "source": (SplitSpec(10_000, 0.0001, 0.005), SplitSpec(10_000, 0.0001, 0.005)),
    "tbird": (SplitSpec(2_000, 0.002, 0.005), SplitSpec(10_000, 0.0001, 0.005)),
    "spirit": (SplitSpec(2_000, 0.002, 0.007), SplitSpec(10_000, 0.0001, 0.007)),
}


class _Budget:
    """Shared attempt counter for one sampling job."""

    def __init__(self, limit: int):
        self.limit = limit
        self.used = 0
        self.rejected_fractions: dict[float, int] = {}

    def spend(self, cap: int | None = None) -> bool:
        ceiling = self.limit if cap is None else min(self.limit, cap)
        if self.used >= ceiling:
            return False
        self.used += 1
        return True

    def reject(self, fraction: float) -> None:
        key = round(fraction, 4)
        self.rejected_fractions[key] = self.rejected_fractions.get(key, 0) + 1

    def exhausted(self, what: str) -> ExhaustedAttempts:
        return ExhaustedAttempts(
            f"no satisfying split found for {what} after {self.used} attempts; "
            f"rejected-fraction histogram: {self.rejected_fractions}",
            attempts=self.used,
            fraction_histogram=self.rejected_fractions,
        )


def _merge_ranges(ranges: list[tuple[int, int]]) -> list[tuple[int, int]]:
    merged: list[tuple[int, int]] = []
    for start, end in sorted(ranges):
        if merged and start <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], end))
        else:
            merged.append((start, end))
    return merged


def _valid_start_segments(
    reserved: list[tuple[int, int]],
    corpus_len: int,
    length: int,
    window: tuple[int, int] | None = None,
) -> list[tuple[int, int]]:
    """Segments (first_start, count) of offsets whose split fits a free gap.

    ``window`` optionally restricts starts to [lo, hi).
    """
    lo, hi = window if window is not None else (0, corpus_len)
    hi = min(hi, corpus_len - length + 1)
    lo = max(lo, 0)
    segments = []
    cursor = 0
    for r_start, r_end in _merge_ranges(reserved) + [(corpus_len, corpus_len)]:
        gap_start, gap_end = cursor, r_start
        cursor = max(cursor, r_end)
        first = max(gap_start, lo)
        last = min(gap_end - length, hi - 1)
        if last >= first:
            segments.append((first, last - first + 1))
    return segments


class _CorpusSampler:
    """Stateful sampler over one corpus: prefix sums plus reservations."""

    def __init__(self, corpus: LogSplit, rng: np.random.Generator,
                 reserved: list[tuple[int, int]] | None = None):
        self.corpus = corpus
        self.rng = rng
        self.reserved: list[tuple[int, int]] = list(reserved or [])
        flags = np.fromiter((e.is_anomaly for e in corpus.events), dtype=np.int64,
                            count=len(corpus.events))
        self._prefix = np.concatenate([[0], np.cumsum(flags)])

    def anomaly_fraction(self, start: int, length: int) -> float:
        base = start - self.corpus.start_seq
        count = int(self._prefix[base + length] - self._prefix[base])
        return count / length

    def draw_start(self, length: int, window: tuple[int, int] | None = None) -> int | None:
        """Uniform draw over non-overlapping start offsets; None if empty."""
        base_window = None
        if window is not None:
            base_window = (window[0] - self.corpus.start_seq, window[1] - self.corpus.start_seq)
        segments = _valid_start_segments(
            [(s - self.corpus.start_seq, e - self.corpus.start_seq) for s, e in self.reserved],
            len(self.corpus),
            length,
            base_window,
        )
        total = sum(count for _, count in segments)
        if total == 0:
            return None
        pick = int(self.rng.integers(total))
        for first, count in segments:
            if pick < count:
                return first + pick + self.corpus.start_seq
            pick -= count
        raise AssertionError("unreachable")

    def sample(
        self,
        spec: SplitSpec,
        budget: _Budget,
        window: tuple[int, int] | None = None,
        what: str = "split",
        cap: int | None = None,
    ) -> LogSplit:
        """Draw until a split satisfies the fraction bounds; reserves it.

        ``cap`` optionally stops this call once the shared budget reaches
        it, leaving the remaining attempts to the caller's fallback.
        """
        if spec.length > len(self.corpus):
            raise budget.exhausted(f"{what} (requested {spec.length} events from a "
                                   f"{len(self.corpus)}-event corpus)")
        while True:
            if not budget.spend(cap):
                raise budget.exhausted(what)
            start = self.draw_start(spec.length, window)
            if start is None:
                raise budget.exhausted(f"{what} (no non-overlapping start offsets left)")
            fraction = self.anomaly_fraction(start, spec.length)
            if spec.anomaly_min <= fraction <= spec.anomaly_max:
                self.reserved.append((start, start + spec.length))
                return self.corpus.slice(start, spec.length)
            budget.reject(fraction)

    def checkpoint(self) -> list[tuple[int, int]]:
        return list(self.reserved)

    def rollback(self, saved: list[tuple[int, int]]) -> None:
        self.reserved = list(saved)


def sample_split(
    corpus: LogSplit, spec: SplitSpec, config: SamplerConfig,
    rng: np.random.Generator | None = None,
) -> tuple[LogSplit, list[tuple[int, int]]]:
    """Sample one constrained split; returns it plus the updated
    reservation list (the input config is not mutated)."""
    rng = rng if rng is not None else substream(config.seed, f"sampler:{corpus.system_id}")
    sampler = _CorpusSampler(corpus, rng, config.reserved_ranges)
    split = sampler.sample(spec, _Budget(config.max_attempts))
    return split, sampler.checkpoint()


def _sample_pair(
    sampler: _CorpusSampler,
    first_spec: SplitSpec,
    second_spec: SplitSpec,
    budget: _Budget,
    window: tuple[int, int] | None,
    what: str,
) -> tuple[LogSplit, LogSplit]:
    """Sample two disjoint splits, preferring starts inside ``window``.

    The pair is retried as a unit so a committed first split can never
    strand the second. Both splits first try the window (keeping each
    task's splits inside its own stratum, which also stops small splits
    from fragmenting the corpus for later large ones); either side widens
    to the whole corpus when its windowed draw is exhausted, spending at
    most half the budget before widening.
    """
    first_window = window
    second_window = window
    while True:
        saved = sampler.checkpoint()
        cap = budget.limit // 2 if first_window is not None else None
        try:
            first = sampler.sample(first_spec, budget, first_window,
                                   f"{what} (first split)", cap)
        except ExhaustedAttempts:
            if first_window is not None and budget.used < budget.limit:
                first_window = None
                continue
            raise
        cap = budget.limit // 2 if second_window is not None else None
        try:
            second = sampler.sample(second_spec, budget, second_window,
                                    f"{what} (second split)", cap)
            return first, second
        except ExhaustedAttempts:
            sampler.rollback(saved)
            if budget.used >= budget.limit:
                raise budget.exhausted(what)
            if second_window is not None and budget.used > budget.limit // 4:
                second_window = None
            elif first_window is not None and budget.used > budget.limit // 2:
                first_window = None


def build_meta_training_tasks(
    sources: list[LogSplit], spec: SplitSpec, config: SamplerConfig
) -> list[Task]:
    """One task per source corpus: support and query are two disjoint
    splits both satisfying ``spec``."""
    tasks = []
    for corpus in sources:
        rng = substream(config.seed, f"sampler:{corpus.system_id}")
        sampler = _CorpusSampler(corpus, rng, config.reserved_ranges)
        budget = _Budget(config.max_attempts)
        support, query = _sample_pair(
            sampler, spec, spec, budget, None, f"training task on {corpus.system_id}"
        )
        tasks.append(Task(f"train-{corpus.system_id}", corpus.system_id, support, query))
    return tasks


def build_meta_testing_tasks(
    target: LogSplit,
    count: int,
    support_spec: SplitSpec,
    query_spec: SplitSpec,
    config: SamplerConfig,
) -> list[Task]:
    """``count`` mutually disjoint (support, query) tasks on one target.

    Query starts are stratified: the corpus is divided into ``count``
    equal-width strata and task j first tries offsets inside stratum j,
    widening to the whole corpus only when the stratum is infeasible.
    """
    rng = substream(config.seed, f"sampler:{target.system_id}")
    sampler = _CorpusSampler(target, rng, config.reserved_ranges)
    tasks = []
    n = len(target)
    for j in range(count):
        budget = _Budget(config.max_attempts)
        stratum = (
            target.start_seq + (j * n) // count,
            target.start_seq + ((j + 1) * n) // count,
        )
        query, support = _sample_pair(
            sampler,
            query_spec,
            support_spec,
            budget,
            stratum,
            f"testing task {j} on {target.system_id}",
        )
        tasks.append(Task(f"{target.system_id}-task{j:02d}", target.system_id, support, query))
    return tasks


def tasks_to_manifest(tasks: list[Task], seed: int) -> dict:
    """JSON-serializable manifest sufficient to reconstruct the tasks."""
    return {
        "schema": "logadapt-task-manifest/1",
        "seed": seed,
        "tasks": [
            {
                "task_id": t.task_id,
                "system_id": t.system_id,
                "support": {"start": t.support.start_seq, "length": len(t.support)},
                "query": {"start": t.query.start_seq, "length": len(t.query)},
            }
            for t in tasks
        ],
    }


def tasks_from_manifest(manifest: dict, corpora: dict[str, LogSplit]) -> list[Task]:
    """Rebuild tasks byte-identically from a manifest and its corpora."""
    tasks = []
    for row in manifest["tasks"]:
        corpus = corpora[row["system_id"]]
        tasks.append(
            Task(
                row["task_id"],
                row["system_id"],
                corpus.slice(row["support"]["start"], row["support"]["length"]),
                corpus.slice(row["query"]["start"], row["query"]["length"]),
            )
        )
    return tasks


def write_manifest(tasks: list[Task], seed: int, path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(tasks_to_manifest(tasks, seed), handle, indent=2)
        handle.write("\n")


def preset_specs(profile: str, count_overrides: dict | None = None) -> tuple[SplitSpec, SplitSpec]:
    """(support_spec, query_spec) for a named profile, with optional
    field overrides {support_length, query_length, ...}."""
    if profile not in PRESETS:
        raise ValueError(f"unknown profile {profile!r}; choose from {sorted(PRESETS)}")
    support, query = PRESETS[profile]
    overrides = count_overrides or {}
    field_map = {"length": "length", "min": "anomaly_min", "max": "anomaly_max"}

    def apply(spec: SplitSpec, prefix: str) -> SplitSpec:
        kwargs = {
            target: overrides[f"{prefix}_{short}"]
            for short, target in field_map.items()
            if f"{prefix}_{short}" in overrides
        }
        return replace(spec, **kwargs) if kwargs else spec

    return apply(support, "support"), apply(query, "query")
