"""Counter-based random streams.

Every random draw in the package goes through :func:`generator`, which keys a
Philox-4x64 bit generator with ``SeedSequence(seed, spawn_key=key)``.  A
``(seed, key)`` pair names one stream; different keys are statistically
independent and can be produced in any order or on any worker.
"""

from __future__ import annotations

import numpy as np

RNG_ALGORITHM = "numpy.random.Philox (4x64, 10 rounds) keyed by SeedSequence(seed, spawn_key)"

#: rows per independently keyed sampling block
BLOCK_ROWS = 1 << 15

STREAM_A = 1
STREAM_B = 2
STREAM_BOOT = 3


def generator(seed: int, *key: int) -> np.random.Generator:
    if seed is None:
        raise ValueError("an explicit integer seed is required")
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def blocked(draw, seed: int, stream: int, rows: int, cols: int) -> np.ndarray:
    """Fill a ``rows x cols`` matrix block by block.

    ``draw(rng, shape)`` produces one block.  Block ``k`` always uses the key
    ``(stream, k)``, so the result does not depend on how blocks are scheduled.
    """
    out = np.empty((rows, cols), dtype=np.float64)
    for k, start in enumerate(range(0, rows, BLOCK_ROWS)):
        stop = min(rows, start + BLOCK_ROWS)
        out[start:stop] = draw(generator(seed, stream, k), (stop - start, cols))
    return out
