"""Labeled seed derivation so every stage and every artifact is reproducible in isolation."""

from __future__ import annotations

import hashlib

import numpy as np

_MASK_63 = (1 << 63) - 1


def derive_seed(seed: int, *labels) -> int:
    """Derive a child seed from a parent seed and a label path.

    Stable across platforms and Python versions (SHA-256 based, not ``hash()``).
    Labels may be strings or ints; the same (seed, labels) always yields the
    same child, and distinct label paths yield independent streams.
    """
    h = hashlib.sha256()
    h.update(str(int(seed)).encode("utf-8"))
    for label in labels:
        h.update(b"/")
        h.update(str(label).encode("utf-8"))
    return int.from_bytes(h.digest()[:8], "little") & _MASK_63


def rng_for(seed: int, *labels) -> np.random.Generator:
    """NumPy generator for a labeled sub-stream of ``seed``."""
    return np.random.default_rng(derive_seed(seed, *labels))
