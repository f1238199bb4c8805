"""Counter-based uniforms addressed by (seed, stream id, pair index).

Pair indices are grouped into fixed blocks of ``BLOCK`` pairs. Block ``k``
draws from a Philox generator keyed by (stream id, seed) with its counter
starting at ``k << 64``, so the numbers for pair ``i`` depend only on the
seed and ``i``. Blocks are independent work units; the thread count only
changes scheduling, never output.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

BLOCK = 1 << 16

# Domain separation between simulators sharing a seed.
SOURCE_STREAM = 1
CASCADE_STREAM = 2


def thread_count() -> int:
    """Worker count, capped by the BELL_THREADS environment variable."""
    env = os.environ.get("BELL_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ValueError(f"BELL_THREADS={env!r} is not an integer") from None
    return min(8, os.cpu_count() or 1)


def block_uniforms(seed: int, stream_id: int, block: int, rows: int, width: int) -> np.ndarray:
    """Uniforms in [0, 1) for ``rows`` consecutive pairs starting at ``block * BLOCK``."""
    bitgen = np.random.Philox(key=(stream_id << 64) | seed, counter=block << 64)
    return np.random.Generator(bitgen).random((rows, width))


def pair_uniforms(seed: int, stream_id: int, n: int, width: int, threads: int | None = None) -> np.ndarray:
    """(n, width) array; row ``i`` is a pure function of (seed, stream_id, i)."""
    if n < 1:
        raise ValueError("n must be positive")
    if not 0 <= seed < 2**64:
        raise ValueError("seed must be an unsigned 64-bit integer")
    out = np.empty((n, width), dtype=np.float64)
    n_blocks = -(-n // BLOCK)

    def fill(k: int) -> None:
        lo = k * BLOCK
        hi = min(n, lo + BLOCK)
        # Always draw a full block so row i never depends on n.
        out[lo:hi] = block_uniforms(seed, stream_id, k, BLOCK, width)[: hi - lo]

    workers = min(threads or thread_count(), n_blocks)
    if workers <= 1:
        for k in range(n_blocks):
            fill(k)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(fill, range(n_blocks)))
    return out
