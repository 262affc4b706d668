"""Trial blocking and worker dispatch shared by all Monte Carlo loops.

Trials are cut into fixed-size blocks. Block ``b`` of grid point ``p`` always
draws from the substream keyed ``(seed, tag, p, b, link)``, so results do not
depend on how blocks are spread over workers.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

T = TypeVar("T")
R = TypeVar("R")

BLOCK_SIZE = 1 << 16


def blocks(trials: int, block_size: int = BLOCK_SIZE) -> list[tuple[int, int]]:
    """``(block_index, block_length)`` pairs covering ``trials``."""
    if trials < 0:
        raise ValueError("trials must be non-negative")
    return [
        (b, min(block_size, trials - start))
        for b, start in enumerate(range(0, trials, block_size))
    ]


def map_tasks(fn: Callable[[T], R], tasks: Sequence[T], workers: int = 1) -> list[R]:
    """Evaluate ``fn`` over ``tasks`` and return results in task order."""
    if workers < 1:
        raise ValueError("workers must be >= 1")
    if workers == 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks, chunksize=max(1, len(tasks) // (4 * workers))))


def proportion_halfwidth(count: int, trials: int, z: float = 1.96) -> float:
    """95% normal-approximation half-width; rule of three at the boundaries."""
    if trials <= 0:
        raise ValueError("trials must be positive")
    if count == 0 or count == trials:
        return 3.0 / trials
    p = count / trials
    return z * (p * (1 - p) / trials) ** 0.5


def mean_halfwidth(total: float, total_sq: float, n: int, z: float = 1.96) -> tuple[float, float]:
    """Sample mean and 95% half-width from running sums."""
    mean = total / n
    if n < 2:
        return mean, float("inf")
    var = max(total_sq - n * mean * mean, 0.0) / (n - 1)
    return mean, z * (var / n) ** 0.5


def fsum_columns(rows: Iterable[Sequence[float]]) -> list[float]:
    """Column sums with exact rounding, independent of row order."""
    cols = list(zip(*rows))
    return [math.fsum(c) for c in cols]
