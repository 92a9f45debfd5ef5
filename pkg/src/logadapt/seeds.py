"""Per-purpose RNG substreams derived from one root seed.

Every random choice in the pipeline draws from a named substream so that
components (sampler, parameter init, generator, hashing provider) are
independently reproducible: changing how one component consumes randomness
cannot shift another component's stream.
"""

from __future__ import annotations

import numpy as np

from .hashing import fnv1a64_text

_MASK64 = 0xFFFFFFFFFFFFFFFF


def substream_seed(root_seed: int, purpose: str) -> int:
    """Stable 64-bit seed for the named purpose."""
    return (fnv1a64_text(purpose) ^ (root_seed & _MASK64)) & _MASK64


def substream(root_seed: int, purpose: str) -> np.random.Generator:
    """Generator for the named purpose, e.g. substream(seed, "sampler")."""
    return np.random.default_rng(
        np.random.SeedSequence([root_seed & _MASK64, fnv1a64_text(purpose)])
    )
