"""Deterministic chunked Monte Carlo over worker threads.

Samples are split into fixed-size chunks, each with its own substream
spawned from the run seed, so estimates depend on the seed only and not on
how many workers process the chunks. Chunk results are merged in chunk
order.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, Optional, TypeVar

import numpy as np

logger = logging.getLogger(__name__)

CHUNK_SIZE = 1 << 15

T = TypeVar("T")


def chunk_plan(samples: int, chunk_size: int = CHUNK_SIZE) -> List[int]:
    full, rest = divmod(samples, chunk_size)
    return [chunk_size] * full + ([rest] if rest else [])


def map_chunks(
    kernel: Callable[[np.random.Generator, int], T],
    samples: int,
    seed: int,
    workers: Optional[int] = None,
    chunk_size: int = CHUNK_SIZE,
) -> List[T]:
    """Run ``kernel(rng, count)`` per chunk; results come back in chunk order."""
    sizes = chunk_plan(samples, chunk_size)
    streams = np.random.SeedSequence(seed).spawn(len(sizes))
    jobs = [(np.random.default_rng(stream), size) for stream, size in zip(streams, sizes)]
    workers = max(1, min(workers or 1, len(jobs)))
    logger.debug(f"Monte Carlo: {samples} samples in {len(jobs)} chunks on {workers} workers")
    if workers == 1:
        return [kernel(rng, size) for rng, size in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda job: kernel(*job), jobs))


@dataclass
class Moments:
    """Running count, sum and sum of squares of a real array-valued sample."""

    count: int
    total: np.ndarray
    total_sq: np.ndarray

    @classmethod
    def of(cls, values: np.ndarray) -> "Moments":
        """Moments of samples stacked along axis 0."""
        return cls(count=len(values), total=values.sum(axis=0), total_sq=(values * values).sum(axis=0))

    def merge(self, other: "Moments") -> "Moments":
        return Moments(self.count + other.count, self.total + other.total, self.total_sq + other.total_sq)

    @property
    def mean(self) -> np.ndarray:
        return self.total / self.count

    @property
    def std_error(self) -> np.ndarray:
        variance = (self.total_sq - self.total * self.total / self.count) / max(self.count - 1, 1)
        return np.sqrt(np.maximum(variance, 0.0) / self.count)


def pool_moments(parts: List[Moments]) -> Moments:
    pooled = parts[0]
    for part in parts[1:]:
        pooled = pooled.merge(part)
    return pooled
