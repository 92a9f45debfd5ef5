"""Event text preprocessing and fixed-dimension vector representations.

The representation pipeline is: preprocess the composed event text, then
ask an embedding provider for a vector. Two providers exist:

* ``TableProvider`` looks vectors up in a precomputed CSLG table (written
  by an offline exporter or by ``logadapt embed``), keyed by the
  FNV-1a-64 hash of the preprocessed text.
* ``HashingProvider`` computes a deterministic feature-hashing vector on
  demand and needs no precomputed artifacts.
"""

from __future__ import annotations

import math
import re
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Protocol

import numpy as np

from .errors import DimMismatch, FormatError, MissingEmbedding
from .hashing import feature_hash64, fnv1a64_text

DEFAULT_EMBEDDING_DIM = 768
UNK_TOKEN = "[UNK]"

# Sensitive-variable substitution rules, applied in this order on
# lowercased text. Each matched span is replaced by a spelled-out,
# space-padded placeholder; the padding keeps placeholders from fusing
# with neighboring words when punctuation is deleted later, and the
# final whitespace collapse removes any doubled spaces.
#
# MAC-like: six colon-separated groups of two hex-or-star characters,
# optionally led by one letter (masked MACs appear as e.g. p00:1a:2b:**).
_MAC_RE = re.compile(r"(?<![0-9a-z:*])[a-z]?[0-9a-f*]{2}(?::[0-9a-f*]{2}){5}(?![0-9a-z:*])")
# Absolute path: slash-led token not preceded by a word character, so
# "input/output" survives but "(/var/run/x)" is caught.
_PATH_RE = re.compile(r"(?<![\w./\-*])/(?:[^\s/]+/)*[^\s/]+/?")
# IPv4-like dotted quad.
_IP_RE = re.compile(r"(?<![\d.])(?:\d{1,3}\.){3}\d{1,3}(?!\d)")
# Hex address: 0x-prefixed, or a bare hex run of 8+ characters containing
# both a digit and a hex letter (so decimal counters are left alone).
_HEX_RE = re.compile(r"\b0x[0-9a-f]+\b|\b(?=[0-9a-f]*\d)(?=[0-9a-f]*[a-f])[0-9a-f]{8,}\b")

SUBSTITUTION_RULES: tuple[tuple[re.Pattern, str], ...] = (
    (_MAC_RE, " mac address "),
    (_PATH_RE, " file path "),
    (_IP_RE, " ip address "),
    (_HEX_RE, " hex address "),
)

_WHITESPACE_RE = re.compile(r"\s+")
_NON_ALPHA_SPACE_RE = re.compile(r"[^a-z ]")


def preprocess(text: str) -> str:
    """Normalize raw event text to space-separated lowercase words.

    Steps, in order: lowercase; canonicalize all whitespace to single
    spaces; substitute sensitive variables (MAC-like token, absolute path,
    IPv4-like, hex address) with spelled-out placeholders; delete every
    character outside [a-z] and space; collapse runs of spaces and trim.
    The result may be empty. The function is idempotent.
    """
    out = text.lower()
    out = _WHITESPACE_RE.sub(" ", out)
    for pattern, replacement in SUBSTITUTION_RULES:
        out = pattern.sub(replacement, out)
    out = _NON_ALPHA_SPACE_RE.sub("", out)
    return _WHITESPACE_RE.sub(" ", out).strip()


@dataclass(frozen=True)
class Vocabulary:
    """Ordered subword vocabulary; continuation entries start with "##"."""

    tokens: tuple[str, ...]
    unk_token: str = UNK_TOKEN

    def __post_init__(self):
        if len(set(self.tokens)) != len(self.tokens):
            raise ValueError("vocabulary entries must be unique")
        if any(not t for t in self.tokens):
            raise ValueError("vocabulary entries must be non-empty")
        if self.unk_token not in self.tokens:
            raise ValueError(f"unk token {self.unk_token!r} missing from vocabulary")
        object.__setattr__(self, "_lookup", frozenset(self.tokens))

    def __contains__(self, token: str) -> bool:
        return token in self._lookup

    def __len__(self) -> int:
        return len(self.tokens)

    @classmethod
    def from_tokens(cls, tokens: Iterable[str], unk_token: str = UNK_TOKEN) -> "Vocabulary":
        toks = tuple(tokens)
        if unk_token not in toks:
            toks = (unk_token,) + toks
        return cls(toks, unk_token)

    @classmethod
    def from_file(cls, path: str | Path, unk_token: str = UNK_TOKEN) -> "Vocabulary":
        """Load a vocabulary file: UTF-8, one token per line."""
        with open(path, encoding="utf-8") as handle:
            tokens = [line.rstrip("\n") for line in handle if line.rstrip("\n")]
        return cls.from_tokens(tokens, unk_token)


def wordpiece_tokenize(text: str, vocab: Vocabulary) -> list[str]:
    """Greedy longest-match subword tokenization of preprocessed text.

    Each whitespace word is consumed by repeatedly taking the longest
    vocabulary entry matching at the current position; continuations must
    carry the "##" prefix. A word with no match at any point becomes a
    single unk token.
    """
    out: list[str] = []
    for word in text.split():
        pieces: list[str] = []
        start = 0
        while start < len(word):
            end = len(word)
            match = None
            while start < end:
                candidate = word[start:end]
                if start > 0:
                    candidate = "##" + candidate
                if candidate in vocab:
                    match = candidate
                    break
                end -= 1
            if match is None:
                pieces = [vocab.unk_token]
                break
            pieces.append(match)
            start = end
        out.extend(pieces)
    return out


class EmbeddingProvider(Protocol):
    """Deterministic mapping from preprocessed event text to a vector."""

    embedding_dim: int

    def embed(self, text: str) -> np.ndarray: ...


def hash_embed(text: str, dim: int, seed: int) -> np.ndarray:
    """Feature-hashing vector over the words of preprocessed text.

    Features are the word unigrams and adjacent-word bigrams. Each
    feature's 64-bit hash selects one coordinate (hash mod dim) and a sign
    (high hash bit); the vector of signed counts is scaled by
    1/sqrt(word count). Empty text maps to the zero vector.
    """
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    vec = np.zeros(dim, dtype=np.float64)
    tokens = text.split()
    if not tokens:
        return vec
    features = [(tok, b"u") for tok in tokens]
    features.extend((f"{a} {b}", b"b") for a, b in zip(tokens, tokens[1:]))
    for feature, kind in features:
        h = feature_hash64(feature, seed, kind)
        sign = 1.0 if (h >> 63) & 1 == 0 else -1.0
        vec[h % dim] += sign
    vec /= math.sqrt(len(tokens))
    return vec


@dataclass
class HashingProvider:
    """On-demand provider backed by ``hash_embed``; caches per unique text."""

    embedding_dim: int
    seed: int
    _cache: dict[str, np.ndarray] = field(default_factory=dict, repr=False)

    def embed(self, text: str) -> np.ndarray:
        cached = self._cache.get(text)
        if cached is None:
            cached = hash_embed(text, self.embedding_dim, self.seed)
            self._cache[text] = cached
        return cached


@dataclass
class TableProvider:
    """Provider backed by a precomputed table keyed by FNV-1a-64 of the text.

    When ``fallback`` is set, texts absent from the table are embedded with
    it instead of raising MissingEmbedding.
    """

    embedding_dim: int
    table: dict[int, np.ndarray]
    fallback: HashingProvider | None = None

    def embed(self, text: str) -> np.ndarray:
        key = fnv1a64_text(text)
        vec = self.table.get(key)
        if vec is not None:
            return vec
        if self.fallback is not None:
            return self.fallback.embed(text)
        raise MissingEmbedding(f"no table entry for text {text!r} (key {key:#018x})")


def embed_event(text: str, provider: EmbeddingProvider) -> np.ndarray:
    """Vector for one preprocessed event; empty text maps to zeros."""
    if not text:
        return np.zeros(provider.embedding_dim, dtype=np.float64)
    return provider.embed(text)


def embed_texts(texts: Iterable[str], provider: EmbeddingProvider) -> np.ndarray:
    """Stack per-event vectors into an (n, dim) float64 matrix."""
    rows = [embed_event(t, provider) for t in texts]
    if not rows:
        return np.zeros((0, provider.embedding_dim), dtype=np.float64)
    return np.stack(rows).astype(np.float64, copy=False)


# CSLG embedding-table format (little-endian):
#   magic "CSLG" | version u32 = 1 | dim u32 | count u64 |
#   count records of [key u64 = FNV-1a-64 of UTF-8 preprocessed text][dim f32]
CSLG_MAGIC = b"CSLG"
CSLG_VERSION = 1
_HEADER = struct.Struct("<4sIIQ")
_KEY = struct.Struct("<Q")


def write_embedding_table(path: str | Path, entries: Iterable[tuple[int, np.ndarray]], dim: int) -> int:
    """Write (key, vector) records as a CSLG table; returns the count.

    Vectors are stored as little-endian f32. Duplicate keys are rejected.
    """
    seen: set[int] = set()
    body = bytearray()
    count = 0
    for key, vec in entries:
        if key in seen:
            raise FormatError(f"duplicate key {key:#018x} in table entries")
        seen.add(key)
        arr = np.asarray(vec, dtype="<f4")
        if arr.shape != (dim,):
            raise DimMismatch(f"vector shape {arr.shape} does not match dim {dim}")
        body += _KEY.pack(key)
        body += arr.tobytes()
        count += 1
    with open(path, "wb") as handle:
        handle.write(_HEADER.pack(CSLG_MAGIC, CSLG_VERSION, dim, count))
        handle.write(bytes(body))
    return count


def read_embedding_table(path: str | Path) -> tuple[int, dict[int, np.ndarray]]:
    """Read a CSLG table; returns (dim, {key: f32 vector})."""
    with open(path, "rb") as handle:
        header = handle.read(_HEADER.size)
        if len(header) < _HEADER.size:
            raise FormatError("truncated CSLG header")
        magic, version, dim, count = _HEADER.unpack(header)
        if magic != CSLG_MAGIC:
            raise FormatError(f"bad magic {magic!r}, expected {CSLG_MAGIC!r}")
        if version != CSLG_VERSION:
            raise FormatError(f"unsupported CSLG version {version}")
        record_size = _KEY.size + 4 * dim
        table: dict[int, np.ndarray] = {}
        for _ in range(count):
            record = handle.read(record_size)
            if len(record) < record_size:
                raise FormatError("truncated CSLG record")
            (key,) = _KEY.unpack_from(record)
            if key in table:
                raise FormatError(f"duplicate key {key:#018x} in table")
            table[key] = np.frombuffer(record, dtype="<f4", offset=_KEY.size).copy()
        if handle.read(1):
            raise FormatError("trailing bytes after final CSLG record")
    return dim, table


def load_embedding_table(
    path: str | Path,
    expected_dim: int | None = None,
    fallback: HashingProvider | None = None,
) -> TableProvider:
    """Open a CSLG table as a provider.

    Raises FormatError on a bad file and DimMismatch when the file's
    dimension differs from ``expected_dim``.
    """
    dim, table = read_embedding_table(path)
    if expected_dim is not None and dim != expected_dim:
        raise DimMismatch(f"table dim {dim} != configured dim {expected_dim}")
    if fallback is not None and fallback.embedding_dim != dim:
        raise DimMismatch(f"fallback dim {fallback.embedding_dim} != table dim {dim}")
    return TableProvider(embedding_dim=dim, table=table, fallback=fallback)
