"""Deterministic compensated summation of long exponential sums.

Terms are cut into fixed-size chunks.  Each chunk is reduced with numpy's
pairwise summation; the chunk partials are then combined over a fixed
binary tree whose nodes carry Neumaier (improved Kahan) error terms.  The
chunk size, not the thread count, fixes the reduction tree, so serial and
threaded runs agree bit for bit.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence

import numpy as np

CHUNK = 1 << 15
THREADS_ENV = "MODELSET_FB_THREADS"


def default_threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def _two_sum(a: float, b: float) -> tuple[float, float]:
    s = a + b
    if abs(a) >= abs(b):
        return s, (a - s) + b
    return s, (b - s) + a


def tree_reduce(partials: Sequence[float]) -> float:
    """Sum floats over a fixed pairwise tree, carrying rounding errors exactly."""
    if len(partials) == 0:
        return 0.0
    level = [(float(p), 0.0) for p in partials]
    while len(level) > 1:
        nxt = []
        for i in range(0, len(level) - 1, 2):
            (s1, c1), (s2, c2) = level[i], level[i + 1]
            s, err = _two_sum(s1, s2)
            nxt.append((s, c1 + c2 + err))
        if len(level) % 2:
            nxt.append(level[-1])
        level = nxt
    s, c = level[0]
    return s + c


def compensated_sum(values) -> complex | float:
    """Compensated sum of a real or complex 1-D array."""
    values = np.asarray(values)
    if values.size == 0:
        return 0.0
    parts = [values[i : i + CHUNK].sum() for i in range(0, values.size, CHUNK)]
    if np.iscomplexobj(values):
        return complex(tree_reduce([p.real for p in parts]), tree_reduce([p.imag for p in parts]))
    return tree_reduce(parts)


def chunked_sum(
    n_terms: int,
    term: Callable[[slice], np.ndarray],
    threads: int | None = None,
) -> complex:
    """Sum ``term(slice)`` over fixed chunks of ``range(n_terms)``.

    ``term`` receives a slice and returns the (complex) terms for it.  Chunks
    may be evaluated concurrently; the reduction order does not depend on
    ``threads``.
    """
    threads = default_threads() if threads is None else max(1, int(threads))
    slices = [slice(i, min(i + CHUNK, n_terms)) for i in range(0, n_terms, CHUNK)]
    if not slices:
        return 0j

    def part(s):
        v = np.asarray(term(s))
        return complex(v.sum())

    if threads > 1 and len(slices) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(part, slices))
    else:
        parts = [part(s) for s in slices]
    return complex(tree_reduce([p.real for p in parts]), tree_reduce([p.imag for p in parts]))


def unit_phase(x) -> np.ndarray:
    """``e(x) = exp(2 pi i x)`` with the argument reduced mod 1 first."""
    x = np.asarray(x, dtype=float)
    frac = x - np.round(x)
    return np.exp(2j * np.pi * frac)


class StreamSum:
    """Accumulate arrays batch by batch with the same chunk-then-tree reduction.

    Chunk boundaries follow the batch boundaries, which are fixed by the
    inputs, so repeated runs reduce in the same order.
    """

    def __init__(self):
        self._re: list[float] = []
        self._im: list[float] = []
        self.count = 0

    def add(self, values) -> None:
        values = np.asarray(values)
        for i in range(0, values.size, CHUNK):
            p = complex(values[i : i + CHUNK].sum())
            self._re.append(p.real)
            self._im.append(p.imag)
        self.count += values.size

    def total(self) -> complex:
        return complex(tree_reduce(self._re), tree_reduce(self._im))
