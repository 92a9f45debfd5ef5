"""Command-line entry point.

Subcommands wire ingestion, synthesis, embedding, meta-training,
adaptation, evaluation, and ablations into reproducible experiments.
Every command is deterministic under --seed; artifacts land under --out.

Exit codes: 0 success, 2 configuration error, 3 data or format error,
4 infeasible sampling.
"""

from __future__ import annotations

import argparse
import sys

from .config import RunConfig
from .errors import (
    ConfigError,
    DimMismatch,
    ExhaustedAttempts,
    FormatError,
    InfeasibleRate,
    LogAdaptError,
    MalformedLine,
    MissingEmbedding,
    NoTasks,
    SchemaError,
    ShapeMismatch,
)
from . import experiments

_EXIT_CONFIG = 2
_EXIT_DATA = 3
_EXIT_SAMPLING = 4

_DATA_ERRORS = (
    MalformedLine,
    SchemaError,
    FormatError,
    DimMismatch,
    MissingEmbedding,
    ShapeMismatch,
    NoTasks,
    OSError,
)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="config file with flat dotted keys")
    parser.add_argument("--seed", type=int, help="root seed (overrides config)")
    parser.add_argument("--out", default="out", help="output directory")


def _add_provider(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--provider",
        help="embedding provider: 'hash' or 'table:<path>' (overrides config)",
    )
    parser.add_argument("--dim", type=int, help="embedding dimension (overrides config)")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="logadapt",
        description="Cross-system log anomaly detection experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_ingest = sub.add_parser("ingest", help="raw log file to canonical JSON-lines")
    p_ingest.add_argument("input", help="raw log file (alert-label format)")
    p_ingest.add_argument("output", help="canonical JSON-lines output path")

    p_synth = sub.add_parser("synth", help="generate labeled synthetic corpora")
    p_synth.add_argument("what", help="'benchmark' or a profile JSON path")
    p_synth.add_argument("--events", type=int, help="event count for single-profile mode")
    _add_common(p_synth)

    p_embed = sub.add_parser("embed", help="precompute an embedding table for a corpus")
    p_embed.add_argument("corpus", help="canonical JSON-lines corpus")
    p_embed.add_argument("table", help="output CSLG table path")
    _add_common(p_embed)
    _add_provider(p_embed)

    p_train = sub.add_parser("train", help="meta-train on source corpora")
    p_train.add_argument("sources", nargs="+", help="canonical source corpora")
    _add_common(p_train)
    _add_provider(p_train)

    p_eval = sub.add_parser("adapt-eval", help="adapt to a target and evaluate")
    p_eval.add_argument("checkpoint", help="model checkpoint from 'train'")
    p_eval.add_argument("target", help="canonical target corpus")
    p_eval.add_argument("--tasks", type=int, help="number of meta-testing tasks")
    p_eval.add_argument("--profile", help="sampling profile: source, tbird, or spirit")
    _add_common(p_eval)
    _add_provider(p_eval)

    p_ablate = sub.add_parser("ablate", help="run an ablation variant end to end")
    p_ablate.add_argument(
        "variant", help="multi-source | single-source:<system> | no-meta"
    )
    p_ablate.add_argument("--sources", nargs="+", required=True)
    p_ablate.add_argument("--targets", nargs="+", required=True)
    p_ablate.add_argument("--tasks", type=int, help="number of meta-testing tasks")
    p_ablate.add_argument("--profile", help="sampling profile override")
    _add_common(p_ablate)
    _add_provider(p_ablate)

    return parser


def _load_config(args: argparse.Namespace) -> RunConfig:
    overrides: dict = {}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "provider", None) is not None:
        overrides["represent.provider"] = args.provider
    if getattr(args, "dim", None) is not None:
        overrides["represent.dim"] = args.dim
    if getattr(args, "tasks", None) is not None:
        overrides["sample.tasks"] = args.tasks
    if getattr(args, "profile", None) is not None:
        overrides["sample.profile"] = args.profile
    return RunConfig.load(getattr(args, "config", None), overrides)


def _dispatch(args: argparse.Namespace) -> None:
    if args.command == "ingest":
        skipped = experiments.run_ingest(args.input, args.output)
        print(f"wrote {args.output} (skipped {skipped} malformed lines)")
        return

    config = _load_config(args)
    if args.command == "synth":
        written = experiments.run_synth(config, args.what, args.out, args.events)
        for path in written:
            print(f"wrote {path}")
    elif args.command == "embed":
        manifest = experiments.run_embed(config, args.corpus, args.table)
        print(
            f"wrote {manifest['table']}: {manifest['unique_texts']} unique texts, "
            f"dim {manifest['dim']}"
        )
    elif args.command == "train":
        checkpoint = experiments.run_train(config, args.sources, args.out)
        print(f"wrote {checkpoint}")
    elif args.command == "adapt-eval":
        _, summary = experiments.run_adapt_eval(
            config, args.checkpoint, args.target, args.out
        )
        macro = summary["macro"]
        print(
            f"tasks={summary['tasks']} "
            f"macro P/R/F1 = {macro['precision_pct']}/{macro['recall_pct']}/{macro['f1_pct']} "
            f"(percent, undefined excluded)"
        )
    elif args.command == "ablate":
        results = experiments.run_ablate(
            config, args.variant, args.sources, args.targets, args.out
        )
        for name, scores in results["targets"].items():
            print(f"{args.variant} -> {name}: macro F1 = {scores['macro_f1']}")
    else:  # pragma: no cover - argparse enforces the choices
        raise ConfigError(f"unknown command {args.command!r}")


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        _dispatch(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return _EXIT_CONFIG
    except (ExhaustedAttempts, InfeasibleRate) as exc:
        print(f"sampling infeasible: {exc}", file=sys.stderr)
        return _EXIT_SAMPLING
    except _DATA_ERRORS as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return _EXIT_DATA
    except LogAdaptError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_DATA
    return 0


if __name__ == "__main__":
    sys.exit(main())
