"""
Seeded, splittable random sources.

A RandomSource names a root seed, a bit-generator algorithm and a spawn key; the same
triple always yields the same draw sequence. Child sources are split deterministically
through numpy's SeedSequence so that parallel replications stay reproducible.
"""

from typing import List, Literal, Tuple, Union

import numpy as np
from pydantic import Field

from app.schemas.base import HawkesBaseModel

Algorithm = Literal["PCG64", "PCG64DXSM", "Philox", "SFC64", "MT19937"]

_BIT_GENERATORS = {
    "PCG64": np.random.PCG64,
    "PCG64DXSM": np.random.PCG64DXSM,
    "Philox": np.random.Philox,
    "SFC64": np.random.SFC64,
    "MT19937": np.random.MT19937,
}


class RandomSource(HawkesBaseModel):
    """Root seed plus algorithm identifier; spawn_key addresses a child stream."""

    seed: int = Field(..., ge=0, lt=2**64, description="64-bit root seed")
    algorithm: Algorithm = Field("PCG64", description="numpy bit generator")
    spawn_key: Tuple[int, ...] = Field(default=(), description="Path of spawned children")

    def seed_sequence(self) -> np.random.SeedSequence:
        return np.random.SeedSequence(self.seed, spawn_key=self.spawn_key)

    def generator(self) -> np.random.Generator:
        """A fresh Generator positioned at the start of this source's stream."""
        return np.random.Generator(_BIT_GENERATORS[self.algorithm](self.seed_sequence()))

    def spawn(self, n: int) -> List["RandomSource"]:
        """n independent child sources."""
        return [
            RandomSource(seed=self.seed, algorithm=self.algorithm, spawn_key=self.spawn_key + (k,))
            for k in range(n)
        ]


RandomLike = Union[RandomSource, np.random.Generator, int]


def as_generator(rng: RandomLike) -> np.random.Generator:
    """Accept a RandomSource, a ready Generator or a plain integer seed."""
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RandomSource):
        return rng.generator()
    return RandomSource(seed=int(rng)).generator()


def spawn_generators(rng: RandomLike, n: int) -> List[np.random.Generator]:
    """n independent generators split deterministically from one source."""
    if isinstance(rng, np.random.Generator):
        return rng.spawn(n)
    source = rng if isinstance(rng, RandomSource) else RandomSource(seed=int(rng))
    return [child.generator() for child in source.spawn(n)]
