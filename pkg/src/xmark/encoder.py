"""Watermark embedding: block selection, evergreen list, logit bias and sampling."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .core import (
    DEFAULT_BOOTSTRAP,
    Message,
    ParameterError,
    Scheme,
    TokenStream,
    WatermarkParams,
    block_index,
    divide_message,
)
from .kperm import SplitMix64, context_assignments, evergreen_membership
from .toylm import LogitSource

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class EncodeResult:
    tokens: TokenStream
    green_hits: int
    steps: int
    skipped_steps: int = 0  # steps where the green list was empty and no bias was applied
    block_visits: tuple[int, ...] = ()

    @property
    def green_fraction(self) -> float:
        return self.green_hits / self.steps if self.steps else 0.0


def perturb_logits(logits: np.ndarray, green: np.ndarray, delta: float) -> np.ndarray:
    out = np.array(logits, dtype=np.float64, copy=True)
    if delta:
        out[green] += delta
    return out


def _nucleus(probs: np.ndarray, top_p: float) -> np.ndarray:
    order = np.argsort(-probs, kind="stable")
    cum = np.cumsum(probs[order])
    keep = int(np.searchsorted(cum, top_p * cum[-1], side="left")) + 1
    out = np.zeros_like(probs)
    out[order[:keep]] = probs[order[:keep]]
    return out


def sample_token(logits: np.ndarray, rng: SplitMix64, top_p: float | None = None) -> int:
    """Inverse-CDF draw from softmax(logits); consumes exactly one uniform from ``rng``."""
    probs = np.exp(logits - np.max(logits))
    if top_p is not None and top_p < 1.0:
        probs = _nucleus(probs, top_p)
    cdf = np.cumsum(probs)
    u = rng.next_unit() * cdf[-1]
    return min(int(np.searchsorted(cdf, u, side="right")), len(cdf) - 1)


def green_mask(params: WatermarkParams, context: tuple[int, int], p: int) -> np.ndarray:
    """Tokens whose logits get the bias for block value ``p`` at this context."""
    assignments = context_assignments(
        context[0], context[1], params.hash_keys, params.vocab_size, params.block_bits
    )
    if params.scheme is Scheme.MPAC:
        return assignments[0].shard_of == p
    return evergreen_membership(assignments, p)


def encode(
    message: Message,
    params: WatermarkParams,
    source: LogitSource,
    T: int,
    prompt_tail: tuple[int, int] = DEFAULT_BOOTSTRAP,
    sampler_seed: int = 0,
    top_p: float | None = None,
) -> EncodeResult:
    if T < 1:
        raise ParameterError(f"T must be >= 1, got {T}")
    if source.vocab_size != params.vocab_size:
        raise ParameterError(
            f"logit source vocabulary {source.vocab_size} != params vocabulary {params.vocab_size}"
        )
    block_values = [blk.decimal for blk in divide_message(message, params)]
    rng = SplitMix64(sampler_seed)
    x2, x1 = prompt_tail
    tokens: list[int] = []
    visits = [0] * params.num_blocks
    hits = skipped = 0
    for t in range(T):
        logits = source.next_logits((x2, x1))
        i = block_index(x2, x1, params.num_blocks)
        visits[i] += 1
        green = green_mask(params, (x2, x1), block_values[i])
        if green.any():
            logits = perturb_logits(logits, green, params.bias)
        else:
            skipped += 1
            log.debug("empty green list at step %d (context %d, %d); sampling unbiased", t, x2, x1)
        x = sample_token(logits, rng, top_p)
        hits += bool(green[x])
        tokens.append(x)
        x2, x1 = x1, x
    if skipped:
        log.info("%d of %d steps had an empty green list", skipped, T)
    return EncodeResult(
        tokens=TokenStream(tuple(tokens), bootstrap=tuple(prompt_tail)),
        green_hits=hits,
        steps=T,
        skipped_steps=skipped,
        block_visits=tuple(visits),
    )


def generate_unwatermarked(
    source: LogitSource,
    T: int,
    prompt_tail: tuple[int, int] = DEFAULT_BOOTSTRAP,
    sampler_seed: int = 0,
    top_p: float | None = None,
) -> TokenStream:
    rng = SplitMix64(sampler_seed)
    x2, x1 = prompt_tail
    tokens = []
    for _ in range(T):
        x = sample_token(source.next_logits((x2, x1)), rng, top_p)
        tokens.append(x)
        x2, x1 = x1, x
    return TokenStream(tuple(tokens), bootstrap=tuple(prompt_tail))
