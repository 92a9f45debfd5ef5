"""End-to-end experiment flows shared by the CLI and the test suite.

Each flow is deterministic given (config, seed): all randomness comes
from named substreams of the root seed, task layouts are recorded in a
manifest, and every artifact except the wall-clock timing file is
byte-reproducible on rerun.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from . import report as report_mod
from .config import RunConfig
from .errors import ConfigError
from .evaluate import DetectionReport, TimingSheet, aggregate, timed
from .hashing import fnv1a64_text
from .ingest import LogSplit, load_canonical, normalize_corpus, parse_raw_file, write_canonical
from .meta import EmbeddedSplit, EmbeddedTask, meta_test, meta_train
from .model import LstmParams, init_params, load_checkpoint, save_checkpoint
from .represent import (
    EmbeddingProvider,
    HashingProvider,
    embed_texts,
    load_embedding_table,
    preprocess,
    write_embedding_table,
)
from .seeds import substream
from .synth import (
    BENCHMARK_SOURCES,
    BENCHMARK_TARGET_PROFILES,
    BENCHMARK_TARGETS,
    generate_corpus,
    load_profile,
    make_benchmark,
    save_profile,
)
from .tasks import (
    SamplerConfig,
    Task,
    build_meta_testing_tasks,
    build_meta_training_tasks,
    preset_specs,
    write_manifest,
)


def build_provider(config: RunConfig) -> EmbeddingProvider:
    """Provider named by represent.provider: "hash" or "table:<path>"."""
    dim = config["represent.dim"]
    spec = config["represent.provider"]
    if spec == "hash":
        return HashingProvider(embedding_dim=dim, seed=config.representation_seed())
    path = spec.split(":", 1)[1]
    fallback = None
    if config["represent.table_fallback"]:
        fallback = HashingProvider(embedding_dim=dim, seed=config.representation_seed())
    return load_embedding_table(path, expected_dim=dim, fallback=fallback)


def embed_split(split: LogSplit, provider: EmbeddingProvider) -> EmbeddedSplit:
    """Preprocess every event's text and embed it; labels come along."""
    texts = [preprocess(e.text) for e in split.events]
    x = embed_texts(texts, provider)
    y = [e.is_anomaly for e in split.events]
    return EmbeddedSplit(x, np.asarray(y, dtype=bool))


def embed_task(task: Task, provider: EmbeddingProvider) -> EmbeddedTask:
    return EmbeddedTask(
        task.task_id,
        task.system_id,
        embed_split(task.support, provider),
        embed_split(task.query, provider),
    )


def _sampler_config(config: RunConfig) -> SamplerConfig:
    return SamplerConfig(seed=config["seed"], max_attempts=config["sample.max_attempts"])


def _source_spec(config: RunConfig):
    try:
        support_spec, _ = preset_specs("source", config.spec_overrides())
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return support_spec


def _target_specs(config: RunConfig, system_id: str):
    profile = config["sample.profile"]
    if not profile:
        profile = BENCHMARK_TARGET_PROFILES.get(system_id, "")
    if not profile:
        raise ConfigError(
            f"no sampling profile for target {system_id!r}; set sample.profile"
        )
    try:
        return preset_specs(profile, config.spec_overrides())
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _write_json(payload: dict, path: Path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, indent=2)
        handle.write("\n")


def run_ingest(input_path: str | Path, output_path: str | Path) -> int:
    """Raw log file to canonical JSON-lines; returns skipped-line count."""
    records, skipped = parse_raw_file(input_path)
    events = normalize_corpus(records)
    write_canonical(events, output_path)
    return skipped


def run_synth(
    config: RunConfig,
    what: str,
    out_dir: str | Path,
    events: int | None = None,
) -> list[Path]:
    """Generate corpora: ``what`` is "benchmark" or a profile JSON path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    if what == "benchmark":
        profiles = make_benchmark(config["seed"])
        profile_dir = out_dir / "profiles"
        profile_dir.mkdir(exist_ok=True)
        for name, profile in profiles.items():
            profile.template_noise = config["synth.template_noise"]
            n = (
                config["synth.source_events"]
                if name in BENCHMARK_SOURCES
                else config["synth.target_events"]
            )
            corpus = generate_corpus(profile, n)
            path = out_dir / f"{name}.jsonl"
            write_canonical(corpus, path)
            save_profile(profile, profile_dir / f"{name}.json")
            written.append(path)
        return written
    profile = load_profile(what)
    n = events if events is not None else 100_000
    corpus = generate_corpus(profile, n)
    path = out_dir / f"{profile.system_id}.jsonl"
    write_canonical(corpus, path)
    written.append(path)
    return written


def run_embed(config: RunConfig, corpus_path: str | Path, out_path: str | Path) -> dict:
    """Precompute embeddings for a corpus's unique preprocessed texts into
    a CSLG table; returns the manifest dict."""
    corpus = load_canonical(corpus_path)
    provider = build_provider(config)
    entries: list[tuple[int, object]] = []
    seen: set[int] = set()
    for event in corpus.events:
        text = preprocess(event.text)
        if not text:
            continue
        key = fnv1a64_text(text)
        if key in seen:
            continue
        seen.add(key)
        entries.append((key, provider.embed(text)))
    count = write_embedding_table(out_path, entries, provider.embedding_dim)
    manifest = {
        "schema": "logadapt-embed-manifest/1",
        "source": str(corpus_path),
        "table": str(out_path),
        "dim": provider.embedding_dim,
        "events": len(corpus.events),
        "unique_texts": count,
    }
    _write_json(manifest, Path(str(out_path) + ".manifest.json"))
    return manifest


def run_train(
    config: RunConfig,
    source_paths: list[str | Path],
    out_dir: str | Path,
    provider: EmbeddingProvider | None = None,
) -> Path:
    """Build meta-training tasks from the sources, meta-train, and write
    the checkpoint plus the task manifest; returns the checkpoint path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    sheet = TimingSheet()
    corpora = [load_canonical(p) for p in source_paths]
    spec = _source_spec(config)
    tasks = build_meta_training_tasks(corpora, spec, _sampler_config(config))
    write_manifest(tasks, config["seed"], out_dir / "manifest.json")

    provider = provider if provider is not None else build_provider(config)
    embedded, _ = timed("represent", lambda: [embed_task(t, provider) for t in tasks], sheet)

    theta0 = init_params(
        config["represent.dim"],
        config["model.hidden_dim"],
        substream(config["seed"], "init"),
    )
    meta_config = config.meta_config()
    telemetry_path = out_dir / "train_log.jsonl"
    with open(telemetry_path, "w", encoding="utf-8") as telemetry:
        theta_star, _ = timed(
            "train", lambda: meta_train(theta0, embedded, meta_config, telemetry), sheet
        )
    checkpoint_path = out_dir / "model.cslm"
    save_checkpoint(theta_star, checkpoint_path)
    _write_json(
        {"schema": "logadapt-run-config/1", "config": config.as_dict()},
        out_dir / "run_config.json",
    )
    report_mod.render_training_curve(telemetry_path, out_dir / "train_loss.png")
    _write_json(
        {
            "schema": "logadapt-timings/1",
            "sections": sheet.sections,
            "train_time_s": sheet.train_time_s,
        },
        out_dir / "timings.json",
    )
    return checkpoint_path


def run_adapt_eval(
    config: RunConfig,
    checkpoint_path: str | Path | None,
    target_path: str | Path,
    out_dir: str | Path,
    provider: EmbeddingProvider | None = None,
) -> tuple[list[DetectionReport], dict]:
    """Build meta-testing tasks on the target, adapt and evaluate per task,
    and write the report bundle.

    With ``checkpoint_path=None`` a randomly initialized model is
    fine-tuned identically (the no-meta-training baseline).
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    sheet = TimingSheet()
    corpus = load_canonical(target_path)
    support_spec, query_spec = _target_specs(config, corpus.system_id)
    tasks = build_meta_testing_tasks(
        corpus, config["sample.tasks"], support_spec, query_spec, _sampler_config(config)
    )
    write_manifest(tasks, config["seed"], out_dir / "manifest.json")

    if checkpoint_path is not None:
        theta = load_checkpoint(checkpoint_path)
        if theta.embedding_dim != config["represent.dim"]:
            raise ConfigError(
                f"checkpoint embedding dim {theta.embedding_dim} != "
                f"represent.dim {config['represent.dim']}"
            )
    else:
        theta = init_params(
            config["represent.dim"],
            config["model.hidden_dim"],
            substream(config["seed"], "init"),
        )

    provider = provider if provider is not None else build_provider(config)
    meta_config = config.meta_config()
    reports: list[DetectionReport] = []
    task_dir = out_dir / "reports"
    task_dir.mkdir(exist_ok=True)
    for task in tasks:
        embedded, _ = timed("represent", lambda t=task: embed_task(t, provider), sheet)
        report = meta_test(theta, embedded, meta_config, sheet)
        reports.append(report)
        _write_json(report.as_dict(include_timings=True), task_dir / f"{task.task_id}.json")

    summary = aggregate(reports)
    report_mod.write_results_json(reports, summary, out_dir / "results.json")
    report_mod.write_metrics_csv(reports, out_dir / "metrics.csv")
    report_mod.write_timings_json(
        reports, summary, out_dir / "timings.json",
        extra={"sections": sheet.sections},
    )
    figures_dir = out_dir / "figures"
    figures_dir.mkdir(exist_ok=True)
    report_mod.render_metrics_figure(reports, summary, figures_dir / "metrics_by_task.png")
    report_mod.render_confusion_figure(summary, figures_dir / "confusion_totals.png")
    _write_json(
        {"schema": "logadapt-run-config/1", "config": config.as_dict()},
        out_dir / "run_config.json",
    )
    return reports, summary


def run_ablate(
    config: RunConfig,
    variant: str,
    source_paths: list[str | Path],
    target_paths: list[str | Path],
    out_dir: str | Path,
    provider: EmbeddingProvider | None = None,
) -> dict:
    """Ablation runner.

    Variants: "multi-source" (train on all sources), "single-source:<id>"
    (train on one source), "no-meta" (skip meta-training and fine-tune a
    randomly initialized model with the identical protocol).
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    provider = provider if provider is not None else build_provider(config)

    checkpoint: Path | None = None
    if variant == "multi-source":
        selected = list(source_paths)
    elif variant.startswith("single-source:"):
        wanted = variant.split(":", 1)[1]
        selected = [p for p in source_paths if Path(p).stem == wanted]
        if not selected:
            raise ConfigError(f"single-source ablation: no source named {wanted!r}")
    elif variant == "no-meta":
        selected = []
    else:
        raise ConfigError(f"unknown ablation variant {variant!r}")

    if selected:
        checkpoint = run_train(config, selected, out_dir / "train", provider)

    results = {"variant": variant, "targets": {}}
    for target_path in target_paths:
        name = Path(target_path).stem
        _, summary = run_adapt_eval(
            config, checkpoint, target_path, out_dir / f"eval-{name}", provider
        )
        results["targets"][name] = {
            "macro_f1": summary["macro"]["f1"],
            "micro_f1": summary["micro"]["f1"],
            "macro_precision": summary["macro"]["precision"],
            "macro_recall": summary["macro"]["recall"],
        }
    _write_json(results, out_dir / "ablation.json")
    return results
