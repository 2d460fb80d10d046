"""Thread-count independent block decomposition.

Work is always cut into blocks of a fixed size, whatever the number of
workers, and partial results are combined in block order.  Floating point
results are therefore bit-identical for any ``threads``.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

BLOCK = 32768


def map_blocks(fn, items, threads=1):
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def block_slices(n, block=BLOCK):
    return [slice(i, min(i + block, n)) for i in range(0, n, block)]


def for_each_block(fn, n, threads=1, block=BLOCK):
    """Call ``fn(slice)`` over fixed blocks of ``range(n)``; ``fn`` writes in place."""
    map_blocks(fn, block_slices(n, block), threads)


def block_sum(values, threads=1, block=BLOCK):
    """Sum of ``values`` along axis 0, reduced block by block in fixed order."""
    values = np.asarray(values)
    parts = map_blocks(lambda s: values[s].sum(axis=0), block_slices(len(values), block), threads)
    total = np.zeros(values.shape[1:], dtype=values.dtype) if values.ndim > 1 else 0.0
    for p in parts:
        total = total + p
    return total


def prefix_sum(values, threads=1, block=BLOCK):
    """Inclusive prefix sum as a blocked scan: local scans, then block offsets."""
    values = np.asarray(values, dtype=float)
    out = np.empty_like(values)
    slices = block_slices(len(values), block)

    def local(s):
        np.cumsum(values[s], out=out[s])

    map_blocks(local, slices, threads)
    offsets = np.zeros(len(slices))
    for k in range(1, len(slices)):
        offsets[k] = offsets[k - 1] + out[slices[k - 1].stop - 1]

    def shift(k):
        if k:
            out[slices[k]] += offsets[k]

    map_blocks(shift, range(len(slices)), threads)
    return out
