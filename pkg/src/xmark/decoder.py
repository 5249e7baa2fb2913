"""Message recovery from token streams via the token-shard mapping matrix."""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .core import (
    Message,
    ParameterError,
    Scheme,
    TokenStream,
    WatermarkParams,
    block_index,
    block_to_binary,
    concat_blocks,
)
from .kperm import context_assignments


class UndecodableError(ValueError):
    """No token contributed to the counting matrix."""


class DecodeMode(str, enum.Enum):
    CTMM = "CTMM"  # each shard cell of the active row grows by at most 1 per token
    TMM = "TMM"  # raw per-shard counts, up to k per token


@dataclass(frozen=True, eq=False)
class Ctmm:
    counts: np.ndarray  # shape (r, 2^d), non-negative integers
    tokens_seen: int = 0

    @classmethod
    def zeros(cls, params: WatermarkParams) -> "Ctmm":
        return cls(np.zeros((params.num_blocks, params.num_shards), dtype=np.int64), 0)

    def __add__(self, other: "Ctmm") -> "Ctmm":
        if self.counts.shape != other.counts.shape:
            raise ParameterError(f"shape mismatch {self.counts.shape} vs {other.counts.shape}")
        return Ctmm(self.counts + other.counts, self.tokens_seen + other.tokens_seen)

    def __eq__(self, other):
        if not isinstance(other, Ctmm):
            return NotImplemented
        return self.tokens_seen == other.tokens_seen and np.array_equal(self.counts, other.counts)

    __hash__ = None


# called once per processed token with (position, row index, update vector)
UpdateObserver = Callable[[int, int, np.ndarray], None]


def accumulate(
    stream: TokenStream,
    params: WatermarkParams,
    mode: DecodeMode = DecodeMode.CTMM,
    existing: Ctmm | None = None,
    observer: UpdateObserver | None = None,
) -> Ctmm:
    """Add the token-shard observations of one stream to ``existing`` (or to zeros).

    The first two tokens only serve as context. Returns a new matrix; ``existing``
    is left untouched.
    """
    mode = DecodeMode(mode)
    base = existing if existing is not None else Ctmm.zeros(params)
    if base.counts.shape != (params.num_blocks, params.num_shards):
        raise ParameterError(f"matrix shape {base.counts.shape} does not match params")
    stream.validate(params.vocab_size)
    toks = stream.tokens
    if len(toks) < 3:
        return base
    counts = base.counts.copy()
    V, d, r = params.vocab_size, params.block_bits, params.num_blocks
    n = params.num_shards
    for t in range(2, len(toks)):
        x2, x1, x = toks[t - 2], toks[t - 1], toks[t]
        i = block_index(x2, x1, r)
        cc = np.zeros(n, dtype=np.int64)
        for a in context_assignments(x2, x1, params.hash_keys, V, d):
            cc[a.shard_of[x]] += 1
        update = np.sign(cc) if mode is DecodeMode.CTMM else cc
        counts[i] += update
        if observer is not None:
            observer(t, i, update)
    return Ctmm(counts, base.tokens_seen + len(toks) - 2)


def recover(ctmm: Ctmm, params: WatermarkParams) -> Message:
    # np.argmin/argmax return the first extremum, i.e. ties go to the smallest index
    pick = np.argmax if params.scheme is Scheme.MPAC else np.argmin
    values = pick(ctmm.counts, axis=1)
    return concat_blocks([block_to_binary(int(p), params.block_bits) for p in values])


def fp_statistic(ctmm: Ctmm) -> float:
    """Mean over rows of the population standard deviation of each row."""
    if ctmm.tokens_seen == 0:
        raise UndecodableError("no tokens were decoded")
    return float(np.mean(np.std(ctmm.counts.astype(np.float64), axis=1)))


@dataclass(frozen=True)
class DecodeReport:
    message: Message
    ctmm: Ctmm
    fp_statistic: float
    decodable: bool = True

    def to_dict(self) -> dict:
        return {
            "bits": str(self.message),
            "counts": self.ctmm.counts.tolist(),
            "tokens_seen": self.ctmm.tokens_seen,
            "fp_statistic": None if math.isnan(self.fp_statistic) else self.fp_statistic,
            "decodable": self.decodable,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> "DecodeReport":
        counts = np.asarray(d["counts"], dtype=np.int64)
        stat = d.get("fp_statistic")
        return cls(
            message=Message.from_str(d["bits"]),
            ctmm=Ctmm(counts, int(d["tokens_seen"])),
            fp_statistic=float("nan") if stat is None else float(stat),
            decodable=bool(d.get("decodable", True)),
        )


def decode(
    streams: Iterable[TokenStream],
    params: WatermarkParams,
    mode: DecodeMode = DecodeMode.CTMM,
) -> DecodeReport:
    """Accumulate all streams of one user into a single matrix, then recover the message."""
    streams = list(streams)
    if not streams:
        raise ParameterError("need at least one token stream")
    ctmm = Ctmm.zeros(params)
    for s in streams:
        ctmm = accumulate(s, params, mode, existing=ctmm)
    message = recover(ctmm, params)
    if ctmm.tokens_seen == 0:
        return DecodeReport(message, ctmm, float("nan"), decodable=False)
    return DecodeReport(message, ctmm, fp_statistic(ctmm))


def calibrate_fp_threshold(unwatermarked_reports: Sequence[DecodeReport], target_fpr: float) -> float:
    """Threshold on the row-spread statistic; texts scoring above it are flagged as watermarked."""
    if not 0 < target_fpr < 1:
        raise ParameterError(f"target_fpr must lie in (0, 1), got {target_fpr}")
    stats = [r.fp_statistic for r in unwatermarked_reports if r.decodable]
    if len(stats) < 50:
        raise ParameterError(f"need at least 50 decodable reports to calibrate, got {len(stats)}")
    return float(np.quantile(stats, 1.0 - target_fpr))


def is_watermarked(report: DecodeReport, threshold: float) -> bool:
    return report.decodable and report.fp_statistic > threshold
