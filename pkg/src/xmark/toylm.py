"""Synthetic logit source standing in for a language model."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol

import numpy as np

from .core import ParameterError
from .kperm import prf_hash, splitmix_block


class LogitSource(Protocol):
    vocab_size: int

    def next_logits(self, context: tuple[int, int]) -> np.ndarray:
        """Logits over the vocabulary given the last two token ids."""
        ...


@dataclass(frozen=True)
class ToyLmParams:
    model_seed: int = 0
    entropy_temp: float = 1.0
    vocab_size: int = 1024

    def __post_init__(self):
        if not self.entropy_temp > 0:
            raise ParameterError(f"entropy_temp must be positive, got {self.entropy_temp}")
        if self.vocab_size < 1:
            raise ParameterError("vocab_size must be positive")


def gaussian_block(seed: int, n: int) -> np.ndarray:
    """``n`` standard normals by Box-Muller over the SplitMix64 stream of ``seed``.

    Consecutive draws form the pair (u1, u2), each mapped to (0, 1]; the
    cosine branch fills even slots and the sine branch odd slots.
    """
    pairs = (n + 1) // 2
    raw = splitmix_block(seed, 2 * pairs)
    u = ((raw >> np.uint64(11)) + np.uint64(1)).astype(np.float64) * 2.0 ** -53
    u1, u2 = u[0::2], u[1::2]
    radius = np.sqrt(-2.0 * np.log(u1))
    out = np.empty(2 * pairs)
    out[0::2] = radius * np.cos(2 * np.pi * u2)
    out[1::2] = radius * np.sin(2 * np.pi * u2)
    return out[:n]


def toy_logits(context: tuple[int, int], params: ToyLmParams) -> np.ndarray:
    seed = prf_hash(context[0], context[1], params.model_seed)
    return gaussian_block(seed, params.vocab_size) / params.entropy_temp


class ToyLm:
    """Context-hashed Gaussian logits; large ``entropy_temp`` means near-uniform output."""

    def __init__(self, params: ToyLmParams):
        self.params = params
        self.vocab_size = params.vocab_size

    def next_logits(self, context: tuple[int, int]) -> np.ndarray:
        return toy_logits(context, self.params)

    def __repr__(self):
        p = self.params
        return f"ToyLm(V={p.vocab_size}, seed={p.model_seed}, temp={p.entropy_temp})"
