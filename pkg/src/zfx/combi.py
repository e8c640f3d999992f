"""Subset enumeration helpers (numpy-backed) and an order-preserving parallel map."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from itertools import chain, combinations, islice

import numpy as np


def combinations_chunks(n: int, k: int, chunk: int = 1 << 20, start: int = 1):
    """Yield all k-subsets of [start, start+n) in lexicographic order as (rows, k) int64 arrays."""
    it = combinations(range(start, start + n), k)
    while True:
        block = list(islice(it, chunk))
        if not block:
            return
        flat = np.fromiter(chain.from_iterable(block), dtype=np.int64, count=len(block) * k)
        yield flat.reshape(len(block), k)


def sample_subsets(n: int, k: int, count: int, seed: int, start: int = 1) -> np.ndarray:
    """``count`` uniformly random k-subsets of [start, start+n), sorted within each row."""
    if not 1 <= k <= n:
        raise ValueError(f"cannot draw {k}-subsets of a {n}-set")
    rng = np.random.default_rng(seed)
    if count * n <= 1 << 24:
        keys = rng.random((count, n))
        rows = np.argpartition(keys, k - 1, axis=1)[:, :k] if k < n else np.tile(np.arange(n), (count, 1))
        return np.sort(rows, axis=1).astype(np.int64) + start
    # large ground sets: draw k values and redraw rows that collide
    rows = np.sort(rng.integers(0, n, size=(count, k)), axis=1)
    while True:
        bad = np.flatnonzero((np.diff(rows, axis=1) == 0).any(axis=1))
        if bad.size == 0:
            return rows.astype(np.int64) + start
        rows[bad] = np.sort(rng.integers(0, n, size=(bad.size, k)), axis=1)


def bit_length(arr: np.ndarray) -> np.ndarray:
    """Elementwise int.bit_length for nonnegative integers below 2^52."""
    _, exp = np.frexp(arr.astype(np.float64))
    return np.where(arr > 0, exp, 0).astype(np.int64)


def row_distance_to_uniform(block: np.ndarray, M: int) -> np.ndarray:
    """Distance from uniform on range(M) of the empirical law of each row of ``block``."""
    width = block.shape[1]
    eps = np.zeros(block.shape[0])
    for v in range(M):
        eps += np.abs(np.count_nonzero(block == v, axis=1) / width - 1.0 / M)
    return 0.5 * eps


def binom(n, k):
    return math.comb(n, k) if 0 <= k <= n else 0


def parallel_map(fn, items, workers: int = 1, chunksize: int = 1):
    """``list(map(fn, items))``, optionally spread over processes; result order is preserved."""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=max(1, chunksize)))
