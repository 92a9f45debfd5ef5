"""Export pipeline: canonical corpus in, CSLG embedding table out.

The table format (little-endian) is the contract with the detection
pipeline: magic "CSLG", version u32 = 1, dim u32, count u64, then count
records of [key u64][dim x f32], where the key is the FNV-1a-64 hash of
the UTF-8 preprocessed event text. One record per unique preprocessed
text; events whose preprocessed text is empty are skipped (the consumer
maps empty text to the zero vector itself).
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .encoder import build_encoder
from .preprocess import preprocess
from .wordpiece import WordPieceVocab

CSLG_MAGIC = b"CSLG"
CSLG_VERSION = 1
_HEADER = struct.Struct("<4sIIQ")
_KEY = struct.Struct("<Q")

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF


def fnv1a64_text(text: str) -> int:
    h = _FNV_OFFSET
    for byte in text.encode("utf-8"):
        h ^= byte
        h = (h * _FNV_PRIME) & _MASK64
    return h


@dataclass
class ExportManifest:
    input_path: str
    encoder_id: str
    output_path: str
    dedup_count: int
    corpus_events: int
    dim: int
    num_layers: int
    max_length: int
    batch_size: int

    def as_dict(self) -> dict:
        return {
            "schema": "logembed-manifest/1",
            "input": self.input_path,
            "encoder": self.encoder_id,
            "output": self.output_path,
            "dedup_count": self.dedup_count,
            "corpus_events": self.corpus_events,
            "dim": self.dim,
            "encoder_layers": self.num_layers,
            "max_subwords": self.max_length,
            "batch_size": self.batch_size,
        }


def read_corpus_texts(path: str | Path) -> tuple[list[str], int]:
    """Unique preprocessed event texts of a canonical corpus, in first-seen
    order, plus the total event count."""
    unique: list[str] = []
    seen: set[str] = set()
    total = 0
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            row = json.loads(line)
            for key in ("component", "level", "message"):
                if key not in row:
                    raise ValueError(f"{path}:{lineno}: missing {key!r}")
            total += 1
            text = preprocess(f"{row['component']} {row['level']} {row['message']}")
            if text and text not in seen:
                seen.add(text)
                unique.append(text)
    return unique, total


def write_table(path: str | Path, keys: list[int], vectors: np.ndarray) -> None:
    dim = vectors.shape[1]
    if len(set(keys)) != len(keys):
        raise ValueError("duplicate keys in table")
    with open(path, "wb") as handle:
        handle.write(_HEADER.pack(CSLG_MAGIC, CSLG_VERSION, dim, len(keys)))
        for key, vec in zip(keys, vectors):
            handle.write(_KEY.pack(key))
            handle.write(np.asarray(vec, dtype="<f4").tobytes())


def export_embeddings(
    corpus_path: str | Path,
    output_path: str | Path,
    encoder_id: str = "bert-base-uncased",
    vocab_path: str | Path | None = None,
    batch_size: int = 32,
    max_length: int = 128,
    seed: int = 0,
) -> ExportManifest:
    """Embed every unique preprocessed event text and write the table.

    For the "local-random" encoder a vocabulary file may be supplied;
    otherwise one is derived from the corpus. Pre-trained encoders bring
    their own tokenizer.
    """
    texts, total = read_corpus_texts(corpus_path)
    vocab = None
    if encoder_id == "local-random":
        vocab = (
            WordPieceVocab.from_file(vocab_path)
            if vocab_path is not None
            else WordPieceVocab.from_texts(texts)
        )
    encoder = build_encoder(encoder_id, vocab=vocab, seed=seed, max_length=max_length)

    keys = [fnv1a64_text(text) for text in texts]
    if len(set(keys)) != len(keys):
        raise ValueError("key collision among unique texts")
    vectors = np.zeros((len(texts), encoder.hidden_size), dtype=np.float32)
    for start in range(0, len(texts), batch_size):
        chunk = texts[start : start + batch_size]
        vectors[start : start + len(chunk)] = encoder.embed_batch(chunk)
    write_table(output_path, keys, vectors)

    manifest = ExportManifest(
        input_path=str(corpus_path),
        encoder_id=encoder_id,
        output_path=str(output_path),
        dedup_count=len(texts),
        corpus_events=total,
        dim=encoder.hidden_size,
        num_layers=encoder.num_layers,
        max_length=max_length,
        batch_size=batch_size,
    )
    manifest_path = Path(str(output_path) + ".manifest.json")
    with open(manifest_path, "w", encoding="utf-8") as handle:
        json.dump(manifest.as_dict(), handle, indent=2)
        handle.write("\n")
    return manifest
