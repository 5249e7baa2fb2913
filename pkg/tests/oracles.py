"""Slow, straight-line reference implementations used to check the fast paths."""

import math

MASK = (1 << 64) - 1


def splitmix_stream(seed):
    state = seed & MASK
    while True:
        state = (state + 0x9E3779B97F4A7C15) & MASK
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
        yield z ^ (z >> 31)


def finalize(z):
    z &= MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
    return z ^ (z >> 31)


def ref_hash(a, b, key):
    z = finalize(key ^ (((a + 1) * 0x9E3779B97F4A7C15) & MASK))
    return finalize(z ^ (((b + 1) * 0xBF58476D1CE4E5B9) & MASK))


def ref_permutation(seed, V):
    vocab = list(range(V))
    draws = splitmix_stream(seed)
    for n in range(V - 1, 0, -1):
        j = next(draws) % (n + 1)
        vocab[n], vocab[j] = vocab[j], vocab[n]
    return vocab


def ref_shard_of(seed, V, d):
    """Token -> shard from explicit shard lists (larger shards first)."""
    perm = ref_permutation(seed, V)
    n = 2 ** d
    big, small = math.ceil(V / n), V // n
    shards, pos = [], 0
    for u in range(n):
        size = big if u < V % n else small
        shards.append(perm[pos:pos + size])
        pos += size
    out = [None] * V
    for u, members in enumerate(shards):
        for v in members:
            out[v] = u
    return out


def ref_evergreen(seeds, V, d, p):
    """Set intersection of the leave-one-shard-out green lists."""
    green = set(range(V))
    for s in seeds:
        shard_of = ref_shard_of(s, V, d)
        green &= {v for v in range(V) if shard_of[v] != p}
    return green


def lifted_green_mass(gamma, delta):
    """Green probability mass after adding delta to a gamma fraction of uniform logits."""
    e = math.exp(delta)
    return gamma * e / (gamma * e + 1 - gamma)
