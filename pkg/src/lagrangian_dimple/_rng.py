"""Seeding contract shared by every stochastic routine.

A single integer seed reproduces the whole sample stream.  Streams are cut
into fixed-size blocks, each with its own child generator derived from
``(seed, block_index)``, so splitting the work across workers never changes
the numbers drawn.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterator, Sequence, TypeVar

import numpy as np

BLOCK_SIZE = 1 << 15

T = TypeVar("T")


def child_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=(int(index),)))


def derived_seed(seed: int, index: int) -> int:
    """Per-realization integer seed from ``(seed, index)``."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(index),))
    return int(ss.generate_state(1, np.uint64)[0])


def blocks(n: int, block_size: int = BLOCK_SIZE) -> Iterator[tuple[int, int, int]]:
    """Yield ``(block_index, start, size)`` covering ``range(n)``."""
    for b, start in enumerate(range(0, n, block_size)):
        yield b, start, min(block_size, n - start)


def parallel_map(fn: Callable[[int], T], items: Sequence[int], workers: int = 1) -> list[T]:
    """Order-preserving map; results never depend on ``workers``."""
    if workers <= 1 or len(items) <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))
