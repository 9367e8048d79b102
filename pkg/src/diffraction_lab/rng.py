"""Seeded, splittable random streams and deterministic replica execution."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from threadpoolctl import threadpool_limits


@dataclass(frozen=True)
class RandomSource:
    """PCG64 stream identified by a seed and a spawn path.

    Children are addressed by position, so the stream handed to replica ``i``
    does not depend on how replicas are scheduled.
    """

    seed: int
    spawn_key: tuple = ()
    algorithm: str = "PCG64"

    def __post_init__(self):
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    def seed_sequence(self) -> np.random.SeedSequence:
        return np.random.SeedSequence(int(self.seed), spawn_key=self.spawn_key)

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.PCG64(self.seed_sequence()))

    def spawn(self, n: int) -> list:
        return [RandomSource(self.seed, self.spawn_key + (i,), self.algorithm) for i in range(n)]


def as_generator(rng) -> np.random.Generator:
    """Accept a RandomSource, a Generator or an integer seed."""
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RandomSource):
        return rng.generator()
    if isinstance(rng, (int, np.integer)):
        return RandomSource(int(rng)).generator()
    raise TypeError(f"cannot build a generator from {type(rng).__name__}")


def as_source(rng) -> RandomSource:
    if isinstance(rng, RandomSource):
        return rng
    if isinstance(rng, (int, np.integer)):
        return RandomSource(int(rng))
    raise TypeError("replica runs need a RandomSource or an integer seed")


def run_replicas(fn, source, n: int, workers: int = 1) -> list:
    """Evaluate ``fn(generator)`` on ``n`` child streams of ``source``.

    Results land in fixed slots, so the output is identical for any number of
    workers. BLAS threads are pinned to one per replica.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    if workers < 1:
        raise ValueError("workers must be at least 1")
    children = as_source(source).spawn(n)
    out = [None] * n

    def job(i):
        out[i] = fn(children[i].generator())

    with threadpool_limits(1):
        if workers == 1:
            for i in range(n):
                job(i)
        else:
            with ThreadPoolExecutor(workers) as ex:
                list(ex.map(job, range(n)))
    return out
