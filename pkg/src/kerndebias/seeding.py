"""Deterministic per-purpose random generators derived from one seed."""

from __future__ import annotations

import zlib

import numpy as np


def rng_for(seed: int, label: str) -> np.random.Generator:
    """Generator for a named purpose; stable across runs and platforms."""
    entropy = np.random.SeedSequence([seed & 0xFFFFFFFFFFFFFFFF, zlib.crc32(label.encode("utf-8"))])
    return np.random.default_rng(entropy)
