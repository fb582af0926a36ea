"""Named, independent RNG substreams derived from one run seed.

Every random choice in a run (init, shuffle, split, synth) pulls from
its own substream, so changing how one stage consumes randomness never
perturbs the others.
"""
from __future__ import annotations

import zlib

import numpy as np

_MASK = (1 << 63) - 1


def substream(seed: int, name: str, *indices: int) -> np.random.Generator:
    """Deterministic generator for (seed, stream name, optional indices)."""
    key = [int(seed) & _MASK, zlib.crc32(name.encode("ascii"))]
    key.extend(int(i) & _MASK for i in indices)
    return np.random.default_rng(np.random.SeedSequence(key))


def derive_seed(seed: int, name: str, *indices: int) -> int:
    """A plain integer seed drawn from the named substream."""
    return int(substream(seed, name, *indices).integers(1 << 63))
