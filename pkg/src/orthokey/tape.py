"""Public random tape with hierarchical, labelled substreams."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np


def _label_key(parts: tuple) -> tuple[int, ...]:
    text = "/".join(str(p) for p in parts)
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return tuple(int.from_bytes(digest[i:i + 4], "little") for i in range(0, 16, 4))


@dataclass(frozen=True)
class RandomTape:
    """A root seed plus a label path.

    ``tape.rng("round1", "alice")`` always returns a generator producing the
    same stream for the same seed and label path; different label paths give
    independent streams (they seed separate ``SeedSequence`` spawn keys).
    """

    seed: int
    path: tuple = ()

    def child(self, *label) -> RandomTape:
        return RandomTape(self.seed, self.path + tuple(label))

    def rng(self, *label) -> np.random.Generator:
        key = _label_key(self.path + tuple(label))
        return np.random.default_rng(np.random.SeedSequence(self.seed, spawn_key=key))

    def bits(self, count: int, *label) -> np.ndarray:
        return self.rng(*label).integers(0, 2, size=count, dtype=np.uint8)

    @property
    def label(self) -> str:
        return "/".join(str(p) for p in self.path)


def as_generator(source, *label) -> np.random.Generator:
    """Accept a tape (drawing the labelled stream) or a ready generator."""
    if isinstance(source, RandomTape):
        return source.rng(*label)
    if isinstance(source, np.random.Generator):
        return source
    raise TypeError(f"expected RandomTape or numpy Generator, got {type(source).__name__}")
