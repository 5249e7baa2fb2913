"""Keyed hashing, seeded vocabulary permutation and shard partitioning.

Everything here is pinned bit-exactly: the PRF and the permutation are
built on SplitMix64 so that an encoder and a decoder written elsewhere
reproduce the same shards for the same (context, key).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np
from numba import njit

from .core import MASK64, DomainError, ParameterError

GOLDEN = 0x9E3779B97F4A7C15
C1 = 0x9E3779B97F4A7C15
C2 = 0xBF58476D1CE4E5B9
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_TWO_M53 = 2.0 ** -53


def mix64(z: int) -> int:
    """SplitMix64 finalizer."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


class SplitMix64:
    """The SplitMix64 generator; small draws (messages, sampler, attacks) go through this."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN) & MASK64
        return mix64(self.state)

    def next_unit(self) -> float:
        """Uniform in [0, 1) with 53 bits of precision."""
        return (self.next_u64() >> 11) * _TWO_M53

    def next_unit_open(self) -> float:
        """Uniform in (0, 1]."""
        return ((self.next_u64() >> 11) + 1) * _TWO_M53

    def next_below(self, n: int) -> int:
        return self.next_u64() % n


def prf_hash(x_prev2: int, x_prev1: int, key: int) -> int:
    """Seed for one (context, key) pair."""
    inner = mix64((key ^ ((x_prev2 + 1) * C1)) & MASK64)
    return mix64(inner ^ (((x_prev1 + 1) * C2) & MASK64))


# vectorised SplitMix64 stream: output n (1-based) is mix64(seed + n * GOLDEN)
def splitmix_block(seed: int, count: int) -> np.ndarray:
    with np.errstate(over="ignore"):
        z = np.uint64(seed) + np.arange(1, count + 1, dtype=np.uint64) * np.uint64(GOLDEN)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
    return z ^ (z >> np.uint64(31))


@njit(cache=True)
def _fisher_yates(seed, V):
    perm = np.arange(V)
    state = seed
    golden = np.uint64(GOLDEN)
    m1 = np.uint64(_M1)
    m2 = np.uint64(_M2)
    for n in range(V - 1, 0, -1):
        state = state + golden
        z = state
        z = (z ^ (z >> np.uint64(30))) * m1
        z = (z ^ (z >> np.uint64(27))) * m2
        z = z ^ (z >> np.uint64(31))
        j = np.int64(z % np.uint64(n + 1))
        tmp = perm[n]
        perm[n] = perm[j]
        perm[j] = tmp
    return perm


def permutation(seed: int, V: int) -> np.ndarray:
    """Permuted vocabulary: ``perm[pos]`` is the token at position ``pos``."""
    return _fisher_yates(np.uint64(seed & MASK64), V)


def shard_sizes(V: int, d: int) -> tuple[int, ...]:
    n = 1 << d
    q, rem = divmod(V, n)
    return tuple(q + 1 if u < rem else q for u in range(n))


@dataclass(frozen=True, eq=False)
class ShardAssignment:
    shard_of: np.ndarray  # token id -> shard index, read-only
    shard_sizes: tuple[int, ...]

    def __eq__(self, other):
        if not isinstance(other, ShardAssignment):
            return NotImplemented
        return self.shard_sizes == other.shard_sizes and np.array_equal(self.shard_of, other.shard_of)

    __hash__ = None

    @property
    def num_shards(self) -> int:
        return len(self.shard_sizes)

    def members(self, u: int) -> np.ndarray:
        return np.flatnonzero(self.shard_of == u)


@lru_cache(maxsize=4096)
def permute_and_partition(seed: int, V: int, d: int) -> ShardAssignment:
    if d < 0 or (1 << d) > V:
        raise ParameterError(f"2^d = {1 << d} shards do not fit a vocabulary of {V}")
    sizes = shard_sizes(V, d)
    dtype = np.uint8 if d <= 8 else np.int32
    pos_shard = np.repeat(np.arange(1 << d, dtype=dtype), sizes)
    shard_of = np.empty(V, dtype=dtype)
    shard_of[permutation(seed, V)] = pos_shard
    shard_of.setflags(write=False)
    return ShardAssignment(shard_of, sizes)


def context_assignments(x_prev2: int, x_prev1: int, keys: Sequence[int], V: int, d: int) -> list[ShardAssignment]:
    return [permute_and_partition(prf_hash(x_prev2, x_prev1, key), V, d) for key in keys]


def evergreen_membership(assignments: Sequence[ShardAssignment], p: int) -> np.ndarray:
    """Boolean mask over the vocabulary: tokens outside shard ``p`` under every permutation."""
    if not assignments:
        raise ParameterError("need at least one shard assignment")
    n = assignments[0].num_shards
    if not 0 <= p < n:
        raise DomainError(f"shard index {p} outside [0, {n})")
    mask = assignments[0].shard_of != p
    for a in assignments[1:]:
        mask &= a.shard_of != p
    return mask


def evergreen_ratios(V: int, d: int, k: int, trials: int, seed: int = 0, context: tuple[int, int] = (0, 1)) -> np.ndarray:
    """|E|/V for ``trials`` independent random key tuples and random block values."""
    rng = SplitMix64(seed)
    out = np.empty(trials)
    for n in range(trials):
        keys = [rng.next_u64() for _ in range(k)]
        p = rng.next_below(1 << d)
        # bypass the cache: every tuple is fresh
        assignments = [permute_and_partition.__wrapped__(prf_hash(*context, key), V, d) for key in keys]
        out[n] = evergreen_membership(assignments, p).sum() / V
    return out
