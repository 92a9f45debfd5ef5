import json

import numpy as np
import pytest

from logadapt.errors import ExhaustedAttempts
from logadapt.ingest import LogEvent, LogSplit
from logadapt.tasks import (
    PRESETS,
    SamplerConfig,
    SplitSpec,
    build_meta_testing_tasks,
    build_meta_training_tasks,
    preset_specs,
    sample_split,
    tasks_from_manifest,
    tasks_to_manifest,
)


def make_corpus(flags, system_id="sys"):
    events = [
        LogEvent(
            seq=i,
            timestamp=i,
            label="ANOM" if flag else "-",
            component="comp",
            level="INFO",
            message=f"event {i}",
        )
        for i, flag in enumerate(flags)
    ]
    return LogSplit(system_id, 0, events)


def bursty_corpus(n, rate, burst, rng, system_id="sys"):
    flags = np.zeros(n, dtype=bool)
    target = int(n * rate)
    placed = 0
    while placed < target:
        start = int(rng.integers(0, n - burst))
        flags[start : start + burst] = True
        placed = int(flags.sum())
    return make_corpus(flags, system_id)


def overlaps(a, b):
    return a[0] < b[1] and b[0] < a[1]


def split_range(split):
    return (split.start_seq, split.start_seq + len(split))


def test_sample_split_respects_spec():
    rng = np.random.default_rng(0)
    corpus = bursty_corpus(40_000, 0.003, 8, rng)
    spec = SplitSpec(2_000, 0.001, 0.01)
    config = SamplerConfig(seed=1)
    split, reserved = sample_split(corpus, spec, config)
    assert len(split) == 2_000
    fraction = split.anomaly_count() / len(split)
    assert spec.anomaly_min <= fraction <= spec.anomaly_max
    assert [e.seq for e in split.events] == list(
        range(split.start_seq, split.start_seq + 2_000)
    )
    assert reserved == [split_range(split)]


def test_sample_split_vacuous_spec_first_draw():
    corpus = make_corpus([False] * 100)
    spec = SplitSpec(10, 0.0, 1.0)
    split, _ = sample_split(corpus, spec, SamplerConfig(seed=3))
    assert len(split) == 10


def test_sample_split_infeasible_fraction():
    corpus = make_corpus([False] * 500)
    spec = SplitSpec(100, 0.01, 0.5)
    with pytest.raises(ExhaustedAttempts) as err:
        sample_split(corpus, spec, SamplerConfig(seed=0, max_attempts=50))
    assert err.value.attempts == 50
    assert sum(err.value.fraction_histogram.values()) == 50
    assert set(err.value.fraction_histogram) == {0.0}


def test_sample_split_no_room_left():
    corpus = make_corpus([False] * 100)
    config = SamplerConfig(seed=0, reserved_ranges=[(0, 100)])
    with pytest.raises(ExhaustedAttempts):
        sample_split(corpus, SplitSpec(10, 0.0, 1.0), config)


def test_sample_split_corpus_too_small():
    corpus = make_corpus([False] * 5)
    with pytest.raises(ExhaustedAttempts):
        sample_split(corpus, SplitSpec(10, 0.0, 1.0), SamplerConfig(seed=0))


def test_sample_split_deterministic():
    rng = np.random.default_rng(4)
    corpus = bursty_corpus(20_000, 0.004, 6, rng)
    spec = SplitSpec(1_000, 0.0, 0.02)
    first, _ = sample_split(corpus, spec, SamplerConfig(seed=11))
    second, _ = sample_split(corpus, spec, SamplerConfig(seed=11))
    assert first.start_seq == second.start_seq


def test_sampled_splits_disjoint_and_exact():
    rng = np.random.default_rng(5)
    corpus = bursty_corpus(60_000, 0.003, 6, rng)
    spec = SplitSpec(1_500, 0.0005, 0.01)
    config = SamplerConfig(seed=2)
    reserved: list[tuple[int, int]] = []
    splits = []
    for _ in range(12):
        config.reserved_ranges = reserved
        split, reserved = sample_split(corpus, spec, config)
        splits.append(split)
    ranges = [split_range(s) for s in splits]
    for i in range(len(ranges)):
        for j in range(i + 1, len(ranges)):
            assert not overlaps(ranges[i], ranges[j])
    for split in splits:
        fraction = split.anomaly_count() / len(split)
        assert spec.anomaly_min <= fraction <= spec.anomaly_max


def test_build_meta_training_tasks_counts():
    rng = np.random.default_rng(6)
    sources = [
        bursty_corpus(60_000, 0.002, 6, rng, "alpha"),
        bursty_corpus(60_000, 0.002, 6, rng, "beta"),
    ]
    spec = SplitSpec(5_000, 0.0001, 0.01)
    tasks = build_meta_training_tasks(sources, spec, SamplerConfig(seed=7))
    assert len(tasks) == 2
    assert {t.system_id for t in tasks} == {"alpha", "beta"}
    for task in tasks:
        assert not overlaps(split_range(task.support), split_range(task.query))

    single = build_meta_training_tasks(sources[:1], spec, SamplerConfig(seed=7))
    assert len(single) == 1

    again = build_meta_training_tasks(sources, spec, SamplerConfig(seed=7))
    assert [
        (split_range(t.support), split_range(t.query)) for t in again
    ] == [(split_range(t.support), split_range(t.query)) for t in tasks]


def test_build_meta_testing_tasks_disjoint_and_spread():
    rng = np.random.default_rng(8)
    corpus = bursty_corpus(250_000, 0.003, 6, rng, "target")
    support_spec = SplitSpec(1_000, 0.001, 0.01)
    query_spec = SplitSpec(5_000, 0.0001, 0.01)
    count = 20
    tasks = build_meta_testing_tasks(corpus, count, support_spec, query_spec,
                                     SamplerConfig(seed=9))
    assert len(tasks) == count
    ranges = []
    for task in tasks:
        ranges.append(split_range(task.support))
        ranges.append(split_range(task.query))
    assert len(ranges) == 2 * count
    for i in range(len(ranges)):
        for j in range(i + 1, len(ranges)):
            assert not overlaps(ranges[i], ranges[j])
    stratum_width = len(corpus) / count
    strata = {int(task.query.start_seq // stratum_width) for task in tasks}
    assert len(strata) >= (count + 1) // 2


def test_build_meta_testing_tasks_minimal_layout():
    # 12,000 events, anomalies at seq 0..9. The only feasible layout is
    # support [0, 2000) and query [2000, 12000).
    flags = [i < 10 for i in range(12_000)]
    corpus = make_corpus(flags)
    support_spec = SplitSpec(2_000, 0.002, 0.01)
    query_spec = SplitSpec(10_000, 0.0, 0.0001)
    tasks = build_meta_testing_tasks(
        corpus, 1, support_spec, query_spec, SamplerConfig(seed=5, max_attempts=40_000)
    )
    task = tasks[0]
    assert split_range(task.support) == (0, 2_000)
    assert split_range(task.query) == (2_000, 12_000)


def test_build_meta_testing_tasks_blocked_corpus():
    corpus = make_corpus([False] * 30_000)
    config = SamplerConfig(seed=0, reserved_ranges=[(0, 30_000)], max_attempts=100)
    with pytest.raises(ExhaustedAttempts):
        build_meta_testing_tasks(corpus, 1, SplitSpec(1_000), SplitSpec(5_000), config)


def test_manifest_roundtrip():
    rng = np.random.default_rng(10)
    corpus = bursty_corpus(80_000, 0.003, 6, rng, "target")
    tasks = build_meta_testing_tasks(
        corpus, 4, SplitSpec(1_000, 0.0, 0.02), SplitSpec(5_000, 0.0, 0.02),
        SamplerConfig(seed=12),
    )
    manifest = tasks_to_manifest(tasks, seed=12)
    rebuilt = tasks_from_manifest(json.loads(json.dumps(manifest)), {"target": corpus})
    for original, copy in zip(tasks, rebuilt):
        assert copy.task_id == original.task_id
        assert copy.support.events == original.support.events
        assert copy.query.events == original.query.events


def test_presets_match_experiment_layout():
    support, query = PRESETS["source"]
    assert support.length == 10_000 and query.length == 10_000
    assert support.anomaly_min == 0.0001 and support.anomaly_max == 0.005
    support, query = PRESETS["tbird"]
    assert support.length == 2_000
    assert (support.anomaly_min, support.anomaly_max) == (0.002, 0.005)
    assert (query.anomaly_min, query.anomaly_max) == (0.0001, 0.005)
    support, query = PRESETS["spirit"]
    assert (support.anomaly_min, support.anomaly_max) == (0.002, 0.007)
    assert (query.anomaly_min, query.anomaly_max) == (0.0001, 0.007)


def test_preset_overrides():
    support, query = preset_specs("tbird", {"support_length": 200, "query_length": 1000})
    assert support.length == 200
    assert query.length == 1000
    assert support.anomaly_min == 0.002
    with pytest.raises(ValueError):
        preset_specs("nope")


def test_bound_arithmetic_of_source_preset():
    # A 10,000-event split within [0.0001, 0.005] has 1..50 anomalies.
    spec = PRESETS["source"][0]
    low = int(np.ceil(spec.anomaly_min * spec.length))
    high = int(np.floor(spec.anomaly_max * spec.length))
    assert (low, high) == (1, 50)
