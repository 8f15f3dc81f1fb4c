"""Streaming primes from a segmented sieve of Eratosthenes."""

from __future__ import annotations

import math
from typing import Iterator

import numpy as np

from settings import config, get_logger

logger = get_logger(__name__)


class PrimeStream:
    """
    The primes a_0 = 2 < a_1 = 3 < ... in order, sieved segment by segment.

    Sieving primes up to sqrt(segment end) are kept and extended as the frontier
    moves; the stream never ends.

    Attributes:
        segment_size (int): Length of each sieved segment.
        frontier (int): Every prime below it has been found.
    """

    def __init__(self, segment_size: int | None = None):
        self.segment_size = segment_size or config.sieve_segment_size
        if self.segment_size < 2:
            raise ValueError(f"Segment size must be at least 2, got {self.segment_size}")
        self.frontier = 2
        self._found: list[np.ndarray] = []
        self._count = 0
        self._base = np.array([], dtype=np.int64)

    def __len__(self) -> int:
        return self._count

    def _base_primes(self, limit: int) -> np.ndarray:
        """Primes up to `limit`, by a plain sieve (limit is at most sqrt of the frontier)."""
        if self._base.size and self._base[-1] >= limit:
            return self._base[self._base <= limit]
        size = max(limit + 1, 2)
        is_prime = np.ones(size, dtype=bool)
        is_prime[:2] = False
        for p in range(2, math.isqrt(limit) + 1):
            if is_prime[p]:
                is_prime[p * p::p] = False
        self._base = np.flatnonzero(is_prime).astype(np.int64)
        return self._base

    def _sieve_next_segment(self) -> None:
        low = self.frontier
        high = low + self.segment_size
        candidates = np.ones(high - low, dtype=bool)
        for p in self._base_primes(math.isqrt(high - 1)):
            p = int(p)
            start = max(p * p, -(-low // p) * p)
            candidates[start - low::p] = False
        segment = np.flatnonzero(candidates).astype(np.int64) + low
        self._found.append(segment)
        self._count += segment.size
        self.frontier = high
        logger.debug(f"Sieved [{low}, {high}): {segment.size} primes, {self._count} in total")

    def take(self, count: int) -> np.ndarray:
        """The first `count` primes as an int64 array."""
        while self._count < count:
            self._sieve_next_segment()
        if len(self._found) > 1:
            self._found = [np.concatenate(self._found)]
        return self._found[0][:count] if self._found else np.array([], dtype=np.int64)

    def nth(self, index: int) -> int:
        """a_index, 0-based (nth(4) = 11)."""
        return int(self.take(index + 1)[index])

    def up_to(self, limit: int) -> np.ndarray:
        """Every prime <= limit."""
        while self.frontier <= limit:
            self._sieve_next_segment()
        primes = self.take(self._count)
        return primes[primes <= limit]

    def __iter__(self) -> Iterator[int]:
        index = 0
        while True:
            yield self.nth(index)
            index += 1
