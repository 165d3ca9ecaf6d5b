"""Splittable, counter-based random streams.

Every sampler in the package takes a ``numpy.random.Generator``. A
:class:`Stream` names a position in a tree of independent generators so that
trial ``j`` of experiment ``e`` always sees the same numbers, however the
trials are scheduled.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass

import numpy as np


def _key_word(part: int | str) -> int:
    if isinstance(part, str):
        return zlib.crc32(part.encode("utf-8"))
    if part < 0:
        raise ValueError("stream keys must be non-negative")
    return int(part)


@dataclass(frozen=True)
class Stream:
    seed: int
    key: tuple[int, ...] = ()

    def branch(self, *parts: int | str) -> Stream:
        return Stream(self.seed, self.key + tuple(_key_word(p) for p in parts))

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=self.key)
        return np.random.Generator(np.random.Philox(ss))


def make_rng(seed: int, *parts: int | str) -> np.random.Generator:
    return Stream(seed).branch(*parts).generator()
