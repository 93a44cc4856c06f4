# spiralloc/sim/rng.py
"""Keyed random streams.

Each consumer draws from its own counter-based Philox stream derived from
(root seed, stream name, optional index), so adding or reordering draws in one
module never shifts another module's numbers.
"""
import zlib

import numpy as np


def stream_key(name):
    """Stable 32-bit key for a stream name."""
    return zlib.crc32(name.encode("utf-8"))


def make_rng(seed, name, *index):
    """
    Build an independent generator for one named stream.

    Args:
        seed: Root 64-bit seed
        name: Stream name, e.g. "obstacles" or "exploration"
        *index: Extra integers (run index, episode, ...) folded into the key

    Returns:
        numpy.random.Generator backed by Philox
    """
    entropy = [int(seed) & 0xFFFFFFFF, (int(seed) >> 32) & 0xFFFFFFFF, stream_key(name), *map(int, index)]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))
