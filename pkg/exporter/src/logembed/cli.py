"""Command line: logembed export --in corpus.jsonl --out table.cslg"""

from __future__ import annotations

import argparse
import sys

from .encoder import EncoderUnavailable
from .export import export_embeddings


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="logembed")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("export", help="embed a canonical corpus into a CSLG table")
    p.add_argument("--in", dest="input", required=True, help="canonical JSON-lines corpus")
    p.add_argument("--out", dest="output", required=True, help="output table path")
    p.add_argument("--encoder", default="bert-base-uncased",
                   help="encoder id, or 'local-random' for a seeded offline encoder")
    p.add_argument("--vocab", help="vocabulary file (one token per line) for local-random")
    p.add_argument("--batch", type=int, default=32, help="encoder batch size")
    p.add_argument("--max-subwords", type=int, default=128, help="truncation length")
    p.add_argument("--seed", type=int, default=0, help="weight seed for local-random")
    args = parser.parse_args(argv)

    try:
        manifest = export_embeddings(
            args.input,
            args.output,
            encoder_id=args.encoder,
            vocab_path=args.vocab,
            batch_size=args.batch,
            max_length=args.max_subwords,
            seed=args.seed,
        )
    except EncoderUnavailable as exc:
        print(f"encoder unavailable: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"export failed: {exc}", file=sys.stderr)
        return 3
    print(
        f"wrote {manifest.output_path}: {manifest.dedup_count} unique texts "
        f"from {manifest.corpus_events} events, dim {manifest.dim}"
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
