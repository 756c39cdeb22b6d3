"""Deterministic, splittable random streams.

A stream is identified by ``(seed, path)``. Children are derived by extending
the path, so two streams with different paths never share state and the same
``(seed, path)`` always yields the same draws. The underlying bit generator is
Philox (counter-based), keyed through :class:`numpy.random.SeedSequence`.
"""

from __future__ import annotations

import zlib
from typing import MutableSequence, Sequence, TypeVar

import numpy as np

T = TypeVar("T")

_BUFFER = 256


def _path_key(part: int | str) -> int:
    if isinstance(part, str):
        return zlib.crc32(part.encode("utf-8"))
    if part < 0:
        raise ValueError("stream ids must be non-negative")
    return int(part)


class RandomStream:
    """Seeded uniform source with cheap scalar draws."""

    __slots__ = ("seed", "path", "_gen", "_buf", "_pos")

    def __init__(self, seed: int, path: Sequence[int | str] = ()):
        if seed < 0:
            raise ValueError("seed must be non-negative")
        self.seed = int(seed)
        self.path = tuple(path)
        ss = np.random.SeedSequence(self.seed, spawn_key=tuple(_path_key(p) for p in self.path))
        self._gen = np.random.Generator(np.random.Philox(ss))
        self._buf: list[float] = []
        self._pos = 0

    def __repr__(self) -> str:
        return f"RandomStream(seed={self.seed}, path={self.path!r})"

    def child(self, *ids: int | str) -> "RandomStream":
        return RandomStream(self.seed, self.path + ids)

    def random(self) -> float:
        """Uniform float in [0, 1)."""
        if self._pos >= len(self._buf):
            self._buf = self._gen.random(_BUFFER).tolist()
            self._pos = 0
        u = self._buf[self._pos]
        self._pos += 1
        return u

    def bit(self) -> int:
        return 1 if self.random() < 0.5 else 0

    def bernoulli(self, p: float) -> bool:
        return self.random() < p

    def below(self, n: int) -> int:
        """Uniform integer in [0, n)."""
        if n <= 0:
            raise ValueError("n must be positive")
        return min(int(self.random() * n), n - 1)

    def getrandbits(self, k: int) -> int:
        out = 0
        for _ in range(k):
            out = (out << 1) | self.bit()
        return out

    def shuffle(self, items: MutableSequence[T]) -> None:
        for i in range(len(items) - 1, 0, -1):
            j = self.below(i + 1)
            items[i], items[j] = items[j], items[i]

    def sample(self, items: Sequence[T], k: int) -> list[T]:
        pool = list(items)
        if k > len(pool):
            raise ValueError("sample larger than population")
        for i in range(k):
            j = i + self.below(len(pool) - i)
            pool[i], pool[j] = pool[j], pool[i]
        return pool[:k]

    def choice(self, items: Sequence[T]) -> T:
        return items[self.below(len(items))]
