"""Stable 64-bit hashes used by file formats and feature hashing.

FNV-1a-64 is the on-disk key function of the CSLG embedding-table format
and must never change. Feature hashing uses keyed blake2b for speed; its
output feeds no file format, only the hashing embedding provider.
"""

from __future__ import annotations

from hashlib import blake2b

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF


def fnv1a64(data: bytes) -> int:
    """FNV-1a over bytes, 64-bit wraparound arithmetic."""
    h = FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * FNV_PRIME) & _MASK64
    return h


def fnv1a64_text(text: str) -> int:
    """FNV-1a-64 of the UTF-8 encoding of ``text`` (CSLG key function)."""
    return fnv1a64(text.encode("utf-8"))


def feature_hash64(feature: str, seed: int, kind: bytes) -> int:
    """Seeded 64-bit hash of one feature string.

    ``kind`` separates feature families (e.g. unigrams from bigrams) so the
    same string hashed under different families cannot collide trivially.
    """
    digest = blake2b(
        feature.encode("utf-8"),
        digest_size=8,
        key=(seed & _MASK64).to_bytes(8, "little"),
        person=kind,
    ).digest()
    return int.from_bytes(digest, "little")
