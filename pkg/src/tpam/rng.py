"""Named random streams derived from one integer seed."""

import zlib

import numpy as np


def stream(seed: int, name: str, *key: int) -> np.random.Generator:
    """Independent generator for ``(seed, name, *key)``.

    Streams with different names never share state, so e.g. the noise draw
    can be varied while the stored patterns stay fixed.
    """
    tag = zlib.crc32(name.encode())
    return np.random.default_rng(np.random.SeedSequence([int(seed), tag, *map(int, key)]))
