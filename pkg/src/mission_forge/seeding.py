"""Deterministic seed derivation and counter-based random generators.

Per-item seeds come from a keyed hash of the base seed and arbitrary
context parts (index, tick, entity id). Streams are independent of
evaluation order, so batch generation parallelizes without coupling the
random sequences of neighbouring items.
"""

from __future__ import annotations

import hashlib

import numpy as np

SEED_MASK = (1 << 64) - 1


def derive_seed(*parts: int | str) -> int:
    """Collapse context parts into a stable unsigned 64-bit seed."""
    h = hashlib.blake2b(digest_size=8)
    for p in parts:
        tag = b"i:" if isinstance(p, int) else b"s:"
        h.update(tag + str(p).encode("utf-8") + b"\x00")
    return int.from_bytes(h.digest(), "big") & SEED_MASK


def make_rng(*parts: int | str) -> np.random.Generator:
    """Counter-based generator keyed by the given context parts."""
    return np.random.Generator(np.random.Philox(derive_seed(*parts)))
