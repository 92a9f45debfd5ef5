"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with:  pytest tests/test_acceptance.py -v -s

The suite is property-based plus a scaled-down qualitative reproduction
of the comparative claims on the synthetic benchmark; every tolerance is
pinned here.
"""

import json
import time
from pathlib import Path

import numpy as np
import pytest

from reference_impls import (
    brute_force_counts,
    brute_force_metrics,
    finite_difference_grads,
    max_relative_error,
    reference_wordpiece,
)

from logadapt.cli import main as cli_main
from logadapt.evaluate import aggregate, confusion, metrics
from logadapt.experiments import embed_task
from logadapt.ingest import LogEvent, LogSplit
from logadapt.meta import EmbeddedSplit, EmbeddedTask, MetaConfig, meta_test, meta_train, supervised_train
from logadapt.model import Window, backward, forward, init_params, make_windows
from logadapt.represent import HashingProvider, Vocabulary, preprocess, wordpiece_tokenize
from logadapt.seeds import substream
from logadapt.synth import (
    BENCHMARK_SOURCES,
    BENCHMARK_TARGET_PROFILES,
    BENCHMARK_TARGETS,
    generate_corpus,
    make_benchmark,
)
from logadapt.tasks import (
    SamplerConfig,
    SplitSpec,
    build_meta_testing_tasks,
    build_meta_training_tasks,
    preset_specs,
    sample_split,
)
from test_represent import GOLDEN_CASES

SEED = 7

# Benchmark experiment configuration (shared by the meta-benefit and
# multi-source criteria; the latter uses the lighter settings below).
BENCH_DIM = 512
BENCH_HIDDEN = 16
BENCH_PROVIDER_SEED = 12345
BENCH_CONFIG = MetaConfig(
    inner_lr=0.01,
    meta_lr=0.01,
    inner_steps=5,
    finetune_steps=60,
    meta_epochs=50,
    window_size=2,
    finetune_optimizer="adamw",
)
SOURCE_EVENTS = 60_000
TARGET_EVENTS = 400_000

ABLATION_DIM = 256
ABLATION_CONFIG = MetaConfig(
    inner_lr=0.01,
    meta_lr=0.01,
    inner_steps=5,
    finetune_steps=40,
    meta_epochs=30,
    window_size=2,
    finetune_optimizer="adamw",
)
ABLATION_SEEDS = (101, 102, 103)
ABLATION_TASKS_PER_TARGET = 6


def _pass(name: str, detail: str = "") -> None:
    suffix = f" ({detail})" if detail else ""
    print(f"\nACCEPTANCE {name}: PASS{suffix}")


# --------------------------------------------------------------------------
# Criterion: gradient oracle


def test_gradient_oracle():
    start = time.perf_counter()
    rng = np.random.default_rng(2024)
    checked = 0
    worst = 0.0
    for case in range(20):
        n_events = int(rng.integers(1, 7))
        params = init_params(12, 8, rng)
        window = Window(rng.normal(size=(n_events, 12)), rng.random(n_events) < 0.5)
        weights = (float(rng.uniform(0.2, 2.0)), float(rng.uniform(0.5, 10.0)))
        _, cache = forward(params, window)
        analytic = backward(params, window, cache, weights)
        numeric = finite_difference_grads(params, window, weights, eps=1e-4)
        err = max_relative_error(analytic, numeric)
        worst = max(worst, err)
        assert err <= 1e-4, f"case {case}: relative error {err}"
        checked += 1
    elapsed = time.perf_counter() - start
    assert checked >= 20
    assert elapsed < 30.0, f"gradient oracle took {elapsed:.1f}s"
    _pass("gradient-oracle", f"20 configs, worst rel err {worst:.2e}, {elapsed:.1f}s")


# --------------------------------------------------------------------------
# Criteria: meta-learning benefit and multi-source benefit (synth benchmark)


@pytest.fixture(scope="module")
def benchmark_corpora():
    profiles = make_benchmark(SEED)
    corpora = {}
    for name, profile in profiles.items():
        n = SOURCE_EVENTS if name in BENCHMARK_SOURCES else TARGET_EVENTS
        corpora[name] = generate_corpus(profile, n)
    return corpora


def _embed_tasks(tasks, dim):
    provider = HashingProvider(dim, seed=BENCH_PROVIDER_SEED)
    return [embed_task(t, provider) for t in tasks]


def _evaluate_macro_f1(theta, embedded_by_target, config):
    per_target = {}
    for target, embedded in embedded_by_target.items():
        reports = [meta_test(theta, et, config) for et in embedded]
        summary = aggregate(reports)
        per_target[target] = summary["macro"]["f1"] if summary["macro"]["f1"] is not None else 0.0
    return float(np.mean(list(per_target.values()))), per_target


def _build_benchmark_tasks(corpora, seed, tasks_per_target, dim):
    source_spec, _ = preset_specs("source")
    train_tasks = build_meta_training_tasks(
        [corpora[s] for s in BENCHMARK_SOURCES], source_spec, SamplerConfig(seed=seed)
    )
    embedded_train = {t.system_id: e for t, e in zip(train_tasks, _embed_tasks(train_tasks, dim))}
    embedded_test = {}
    for target in BENCHMARK_TARGETS:
        specs = preset_specs(BENCHMARK_TARGET_PROFILES[target])
        tasks = build_meta_testing_tasks(
            corpora[target], tasks_per_target, specs[0], specs[1], SamplerConfig(seed=seed)
        )
        embedded_test[target] = _embed_tasks(tasks, dim)
    return embedded_train, embedded_test


def test_meta_learning_benefit(benchmark_corpora):
    start = time.perf_counter()
    embedded_train, embedded_test = _build_benchmark_tasks(
        benchmark_corpora, SEED, tasks_per_target=20, dim=BENCH_DIM
    )
    for target, embedded in embedded_test.items():
        assert len(embedded) == 20, target
    theta0 = init_params(BENCH_DIM, BENCH_HIDDEN, substream(SEED, "init"))
    theta_star = meta_train(theta0, list(embedded_train.values()), BENCH_CONFIG)

    meta_f1, meta_per = _evaluate_macro_f1(theta_star, embedded_test, BENCH_CONFIG)
    none_f1, none_per = _evaluate_macro_f1(theta0, embedded_test, BENCH_CONFIG)
    elapsed = time.perf_counter() - start

    assert meta_f1 >= 0.90, f"meta-trained macro-F1 {meta_f1:.3f} < 0.90 ({meta_per})"
    assert meta_f1 - none_f1 >= 0.15, (
        f"gap {meta_f1 - none_f1:.3f} < 0.15 (meta {meta_per}, no-meta {none_per})"
    )
    assert elapsed < 600.0, f"meta-benefit experiment took {elapsed:.0f}s"
    _pass(
        "meta-learning-benefit",
        f"macro-F1 meta {meta_f1:.3f} vs no-meta {none_f1:.3f}, {elapsed:.0f}s",
    )


def test_multi_source_benefit(benchmark_corpora):
    scores = {"both": [], "aurora": [], "borealis": []}
    for seed in ABLATION_SEEDS:
        embedded_train, embedded_test = _build_benchmark_tasks(
            benchmark_corpora, seed, ABLATION_TASKS_PER_TARGET, ABLATION_DIM
        )
        theta0 = init_params(ABLATION_DIM, BENCH_HIDDEN, substream(seed, "init"))
        variants = {
            "both": list(embedded_train.values()),
            "aurora": [embedded_train["aurora"]],
            "borealis": [embedded_train["borealis"]],
        }
        for name, tasks in variants.items():
            theta = meta_train(theta0, tasks, ABLATION_CONFIG)
            f1, _ = _evaluate_macro_f1(theta, embedded_test, ABLATION_CONFIG)
            scores[name].append(f1)
    means = {name: float(np.mean(vals)) for name, vals in scores.items()}
    for single in ("aurora", "borealis"):
        assert means["both"] >= means[single] + 0.05, (
            f"two-source {means['both']:.3f} vs {single}-only {means[single]:.3f}"
        )
    _pass(
        "multi-source-benefit",
        f"two-source {means['both']:.3f}, aurora {means['aurora']:.3f}, "
        f"borealis {means['borealis']:.3f} (3 seeds)",
    )


# --------------------------------------------------------------------------
# Criterion: first-order degenerate-case exactness


def test_fomaml_degenerate_exactness():
    rng = np.random.default_rng(55)

    def toy_split(n=60, dim=10):
        x = rng.normal(size=(n, dim))
        y = rng.random(n) < 0.3
        x[y] += 1.0
        return EmbeddedSplit(x, y)

    tasks = [
        EmbeddedTask(f"t{i}", "sys", toy_split(), toy_split()) for i in range(3)
    ]
    theta0 = init_params(10, 6, np.random.default_rng(7))
    for epochs in (1, 2, 5, 9):
        config = MetaConfig(
            inner_lr=0.05, meta_lr=0.01, inner_steps=0, meta_epochs=epochs,
            window_size=8, outer_optimizer="sgd",
        )
        via_meta = meta_train(theta0, tasks, config)
        via_supervised = supervised_train(theta0, [t.query for t in tasks], config)
        for a, b in zip(via_meta.blocks(), via_supervised.blocks()):
            assert np.array_equal(a, b), f"trajectory diverges at {epochs} epochs"
    _pass("fomaml-degenerate-exactness", "bitwise equal at 1, 2, 5, 9 epochs")


# --------------------------------------------------------------------------
# Criterion: sampler conformance


def _random_corpus(rng, n, rate, burst):
    flags = np.zeros(n, dtype=bool)
    target = int(n * rate)
    while int(flags.sum()) < target:
        start = int(rng.integers(0, n - burst))
        flags[start : start + burst] = True
    events = [
        LogEvent(i, i, "ANOM" if flag else "-", "comp", "INFO", f"event {i}")
        for i, flag in enumerate(flags)
    ]
    return LogSplit("sys", 0, events)


def test_sampler_conformance():
    rng = np.random.default_rng(99)
    total = 0
    for corpus_idx in range(10):
        corpus = _random_corpus(rng, 120_000, float(rng.uniform(0.002, 0.01)), int(rng.integers(3, 9)))
        spec = SplitSpec(
            length=int(rng.integers(100, 500)),
            anomaly_min=0.0,
            anomaly_max=float(rng.uniform(0.01, 0.05)),
        )
        config = SamplerConfig(seed=corpus_idx, max_attempts=50_000)
        reserved: list[tuple[int, int]] = []
        splits = []
        for _ in range(100):
            config.reserved_ranges = reserved
            split, reserved = sample_split(corpus, spec, config)
            splits.append(split)
        # Brute-force verification of every property.
        ranges = []
        for split in splits:
            assert len(split) == spec.length
            seqs = [e.seq for e in split.events]
            assert seqs == list(range(split.start_seq, split.start_seq + spec.length))
            count = sum(1 for e in split.events if e.is_anomaly)
            fraction = count / spec.length
            assert spec.anomaly_min <= fraction <= spec.anomaly_max
            ranges.append((split.start_seq, split.start_seq + spec.length))
        for i in range(len(ranges)):
            for j in range(i + 1, len(ranges)):
                a, b = ranges[i], ranges[j]
                assert not (a[0] < b[1] and b[0] < a[1]), (a, b)
        total += len(splits)
    assert total == 1000
    _pass("sampler-conformance", "1000 splits, zero violations")


# --------------------------------------------------------------------------
# Criterion: tokenizer oracle


def test_tokenizer_oracle():
    rng = np.random.default_rng(321)
    alphabet = "abcde"
    mismatches = 0
    checked = 0
    for _ in range(50):
        entries = set()
        for _ in range(int(rng.integers(3, 14))):
            word = "".join(rng.choice(list(alphabet), size=int(rng.integers(1, 6))))
            entries.add("##" + word if rng.random() < 0.5 else word)
        vocab = Vocabulary.from_tokens(sorted(entries))
        for _ in range(20):
            words = [
                "".join(rng.choice(list(alphabet), size=int(rng.integers(1, 9))))
                for _ in range(int(rng.integers(1, 6)))
            ]
            text = " ".join(words)
            if wordpiece_tokenize(text, vocab) != reference_wordpiece(text, vocab):
                mismatches += 1
            checked += 1
    assert checked == 1000
    assert mismatches == 0
    _pass("tokenizer-oracle", "1000 strings, zero mismatches")


# --------------------------------------------------------------------------
# Criterion: preprocessing golden suite


def test_preprocessing_golden_suite():
    assert len(GOLDEN_CASES) >= 22  # 2 substitution examples + 20 derived
    assert ("/home/user/docs/file123.txt", "file path") in GOLDEN_CASES
    assert ("P00:1A:2B:**:**:**", "mac address") in GOLDEN_CASES
    for raw, expected in GOLDEN_CASES:
        assert preprocess(raw) == expected, raw
    _pass("preprocessing-golden-suite", f"{len(GOLDEN_CASES)} cases string-exact")


# --------------------------------------------------------------------------
# Criterion: metric oracle


def test_metric_oracle():
    rng = np.random.default_rng(777)
    undefined_seen = 0
    for _ in range(1000):
        n = int(rng.integers(0, 60))
        pred = rng.random(n) < rng.uniform(0.0, 1.0)
        truth = rng.random(n) < rng.uniform(0.0, 0.4)
        c = confusion(pred, truth)
        tp, fp, fn, tn = brute_force_counts(pred, truth)
        assert (c.tp, c.fp, c.fn, c.tn) == (tp, fp, fn, tn)
        precision, recall, f1 = metrics(c)
        ref_p, ref_r, ref_f1 = brute_force_metrics(tp, fp, fn)
        for got, want in ((precision, ref_p), (recall, ref_r), (f1, ref_f1)):
            if want is None:
                assert got is None
                undefined_seen += 1
            else:
                assert got is not None and abs(got - want) <= 1e-12
    assert undefined_seen > 0  # zero-denominator cases yield markers, never numbers
    _pass("metric-oracle", "1000 vectors within 1e-12, undefined marked")


# --------------------------------------------------------------------------
# Criterion: CLI determinism


CLI_CONFIG = """
seed = 11
represent.dim = 32
model.hidden_dim = 16
model.window_size = 50
meta.meta_epochs = 3
meta.inner_steps = 2
meta.finetune_steps = 2
sample.tasks = 3
sample.support_length = 600
sample.support_min = 0.0
sample.support_max = 0.05
sample.query_length = 1500
sample.query_min = 0.0
sample.query_max = 0.05
synth.source_events = 12000
synth.target_events = 15000
"""


def test_cli_determinism(tmp_path):
    config = tmp_path / "config.txt"
    config.write_text(CLI_CONFIG, encoding="utf-8")
    data = tmp_path / "data"
    assert cli_main(["synth", "benchmark", "--config", str(config), "--out", str(data)]) == 0
    data2 = tmp_path / "data2"
    assert cli_main(["synth", "benchmark", "--config", str(config), "--out", str(data2)]) == 0
    for name in ("aurora", "borealis", "cascade", "dunefield"):
        assert (data / f"{name}.jsonl").read_bytes() == (data2 / f"{name}.jsonl").read_bytes()

    outputs = []
    for run in ("a", "b"):
        train_out = tmp_path / f"train-{run}"
        eval_out = tmp_path / f"eval-{run}"
        assert cli_main([
            "train", str(data / "aurora.jsonl"), str(data / "borealis.jsonl"),
            "--config", str(config), "--out", str(train_out),
        ]) == 0
        assert cli_main([
            "adapt-eval", str(train_out / "model.cslm"), str(data / "cascade.jsonl"),
            "--config", str(config), "--out", str(eval_out),
        ]) == 0
        outputs.append((train_out, eval_out))

    (train_a, eval_a), (train_b, eval_b) = outputs
    for name in ("model.cslm", "manifest.json", "train_log.jsonl", "run_config.json"):
        assert (train_a / name).read_bytes() == (train_b / name).read_bytes(), name
    for name in ("results.json", "metrics.csv", "manifest.json", "run_config.json"):
        assert (eval_a / name).read_bytes() == (eval_b / name).read_bytes(), name
    # Per-task report files carry wall-clock fields; everything else in
    # them must match exactly.
    reports_a = sorted((eval_a / "reports").glob("*.json"))
    reports_b = sorted((eval_b / "reports").glob("*.json"))
    assert len(reports_a) == 3 and len(reports_b) == 3
    for a, b in zip(reports_a, reports_b):
        left = json.loads(a.read_text())
        right = json.loads(b.read_text())
        for row in (left, right):
            row.pop("train_time_s")
            row.pop("test_time_s")
        assert left == right
    _pass("determinism", "train + adapt-eval reruns byte-identical")
