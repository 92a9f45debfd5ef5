import itertools

import numpy as np
import pytest

from logadapt.errors import InfeasibleRate
from logadapt.ingest import write_canonical
from logadapt.synth import (
    ANOMALY_POOL,
    AnomalyFamily,
    BENCHMARK_SOURCES,
    BENCHMARK_TARGETS,
    ComponentSpec,
    SystemProfile,
    generate_corpus,
    load_profile,
    make_benchmark,
    profile_from_dict,
    profile_to_dict,
    save_profile,
)


def tiny_profile(rate=0.01, cluster=(3, 6), noise=0.05, seed=0):
    return SystemProfile(
        system_id="toy",
        components=(
            ComponentSpec("compa", (("INFO", "service heartbeat ok"),
                                    ("DEBUG", "cache refreshed entries <n>"))),
            ComponentSpec("compb", (("INFO", "request completed in <n> ms"),)),
        ),
        anomaly_families=(
            AnomalyFamily("BADNESS", "ERROR", ("something went badly wrong <n>",)),
        ),
        anomaly_rate=rate,
        cluster_length=cluster,
        template_noise=noise,
        seed=seed,
    )


def anomaly_runs(split):
    runs = []
    for is_anomaly, group in itertools.groupby(split.events, key=lambda e: e.is_anomaly):
        if is_anomaly:
            runs.append(len(list(group)))
    return runs


def test_zero_rate_means_zero_anomalies():
    corpus = generate_corpus(tiny_profile(rate=0.0), 2_000)
    assert corpus.anomaly_count() == 0
    assert len(corpus) == 2_000


def test_rate_band():
    profile = tiny_profile(rate=0.003, cluster=(3, 9), seed=1)
    corpus = generate_corpus(profile, 100_000)
    assert 270 <= corpus.anomaly_count() <= 330


def test_regeneration_is_byte_identical(tmp_path):
    profile = tiny_profile(rate=0.005, seed=7)
    first = tmp_path / "a.jsonl"
    second = tmp_path / "b.jsonl"
    write_canonical(generate_corpus(profile, 20_000), first)
    write_canonical(generate_corpus(profile, 20_000), second)
    assert first.read_bytes() == second.read_bytes()


def test_anomalies_cluster():
    profile = tiny_profile(rate=0.004, cluster=(4, 9), seed=3)
    corpus = generate_corpus(profile, 50_000)
    runs = anomaly_runs(corpus)
    assert runs
    assert float(np.mean(runs)) >= 4.0
    assert min(runs) >= 4


def test_components_belong_to_lexicon():
    profile = tiny_profile(seed=4)
    corpus = generate_corpus(profile, 5_000)
    names = {c.name for c in profile.components}
    assert {e.component for e in corpus.events} <= names


def test_timestamps_strictly_increasing():
    corpus = generate_corpus(tiny_profile(seed=5), 5_000)
    ts = [e.timestamp for e in corpus.events]
    assert all(a < b for a, b in zip(ts, ts[1:]))


def test_seq_contiguous():
    corpus = generate_corpus(tiny_profile(seed=6), 3_000)
    assert [e.seq for e in corpus.events] == list(range(3_000))


def test_infeasible_rate_rounds_to_zero():
    with pytest.raises(InfeasibleRate):
        generate_corpus(tiny_profile(rate=0.0001), 100)


def test_infeasible_cluster_bounds():
    # 10 anomalies requested but the smallest burst is 50 events.
    with pytest.raises(InfeasibleRate):
        generate_corpus(tiny_profile(rate=0.001, cluster=(50, 60)), 10_000)


def test_anomaly_labels_carry_family_tag():
    corpus = generate_corpus(tiny_profile(rate=0.01, seed=8), 5_000)
    labels = {e.label for e in corpus.events if e.is_anomaly}
    assert labels == {"BADNESS"}


def test_profile_json_roundtrip(tmp_path):
    profile = tiny_profile(rate=0.002, seed=9)
    path = tmp_path / "profile.json"
    save_profile(profile, path)
    loaded = load_profile(path)
    assert profile_to_dict(loaded) == profile_to_dict(profile)
    assert profile_from_dict(profile_to_dict(profile)) == profile


def test_benchmark_structure():
    profiles = make_benchmark(seed=0)
    assert set(profiles) == set(BENCHMARK_SOURCES) | set(BENCHMARK_TARGETS)
    ids = [p.system_id for p in profiles.values()]
    assert len(set(ids)) == 4

    lexicons = {name: {c.name for c in p.components} for name, p in profiles.items()}
    for a, b in itertools.combinations(lexicons, 2):
        assert not (lexicons[a] & lexicons[b]), (a, b)

    families = {name: {f.tag for f in p.anomaly_families} for name, p in profiles.items()}
    for a, b in itertools.combinations(families, 2):
        shared = families[a] & families[b]
        overlap = len(shared) / min(len(families[a]), len(families[b]))
        assert overlap >= 0.30, (a, b, overlap)

    # The two sources jointly cover every target family; neither alone does.
    source_union = set().union(*(families[s] for s in BENCHMARK_SOURCES))
    for target in BENCHMARK_TARGETS:
        assert families[target] <= source_union
        for source in BENCHMARK_SOURCES:
            assert not families[target] <= families[source]


def test_benchmark_rate_contrast():
    profiles = make_benchmark(seed=0)
    rates = {name: p.anomaly_rate for name, p in profiles.items()}
    lows = sorted(rates.values())[:2]
    highs = sorted(rates.values())[2:]
    assert max(lows) < min(highs)


def test_benchmark_generates_sane_corpus():
    profiles = make_benchmark(seed=1)
    profile = profiles["cascade"]
    corpus = generate_corpus(profile, 30_000)
    target = profile.anomaly_rate * 30_000
    assert 0.9 * target - 1 <= corpus.anomaly_count() <= 1.1 * target + 1
    tags = {e.label for e in corpus.events if e.is_anomaly}
    assert tags <= {f.tag for f in profile.anomaly_families}
    assert ANOMALY_POOL["OVERTEMP"].tag in {f.tag for f in profile.anomaly_families}
