"""Counter-based random streams.

Every random draw in the package comes from a Philox generator keyed by
``(seed, stream name, index)``, so a result never depends on the order in
which other random operations were evaluated.
"""
import zlib

import numpy as np


def stream(seed, name, *index):
    """Return an independent generator for ``(seed, name, *index)``."""
    key = [int(seed) & 0xFFFFFFFF, zlib.crc32(name.encode())]
    key.extend(int(i) & 0xFFFFFFFF for i in index)
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(key)))
