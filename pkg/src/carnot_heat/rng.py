"""Deterministic random streams.

Every stream is derived from one 64-bit base seed plus a text label and an
integer index, so results depend only on ``(seed, label, index)`` and never
on how the work is split between workers.
"""
import zlib
from concurrent.futures import ThreadPoolExecutor

import numpy as np

CHUNK = 2048


def label_key(label):
    return zlib.crc32(label.encode("utf8"))


def stream(seed, label, index=0):
    """Independent ``numpy.random.Generator`` for ``(seed, label, index)``."""
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, label_key(label), int(index)])
    return np.random.Generator(np.random.PCG64(ss))


def chunk_bounds(n, chunk=CHUNK):
    return [(lo, min(lo + chunk, n)) for lo in range(0, n, chunk)]


def run_chunks(fn, n, seed, label, workers=1, chunk=CHUNK):
    """Apply ``fn(lo, hi, rng)`` to fixed chunks of ``range(n)``.

    Chunk ``i`` always receives ``stream(seed, label, i)`` and results come
    back in chunk order, so the output is identical for any worker count.
    """
    bounds = chunk_bounds(n, chunk)
    jobs = [(lo, hi, stream(seed, label, i)) for i, (lo, hi) in enumerate(bounds)]
    if workers <= 1 or len(jobs) <= 1:
        return [fn(*job) for job in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda job: fn(*job), jobs))
