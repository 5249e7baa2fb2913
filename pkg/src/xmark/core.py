"""Domain types, parameter validation and the message codec."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

MASK64 = (1 << 64) - 1

# sentinel (x_{-2}, x_{-1}) used when no prompt context is supplied
DEFAULT_BOOTSTRAP = (0, 1)


class ParameterError(ValueError):
    """Invalid parameters or mismatched shapes."""


class DomainError(ValueError):
    """Argument outside the domain of an operation."""


class Scheme(str, enum.Enum):
    XMARK = "XMARK"
    LOSO = "LOSO"
    MPAC = "MPAC"


@dataclass(frozen=True)
class WatermarkParams:
    vocab_size: int
    message_bits: int
    num_blocks: int
    num_keys: int
    bias: float
    hash_keys: tuple[int, ...]
    scheme: Scheme = Scheme.XMARK

    def __post_init__(self):
        object.__setattr__(self, "hash_keys", tuple(int(k) for k in self.hash_keys))
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        V, b, r, k = self.vocab_size, self.message_bits, self.num_blocks, self.num_keys
        if V < 1 or b < 1 or r < 1 or k < 1:
            raise ParameterError("vocab_size, message_bits, num_blocks, num_keys must be positive")
        if b % 2:
            raise ParameterError(f"message_bits must be even, got {b}")
        if b % r:
            raise ParameterError(f"num_blocks={r} does not divide message_bits={b}")
        if b // r < 2:
            raise ParameterError(f"block length b/r must be >= 2, got {b // r}")
        if (1 << (b // r)) > V:
            raise ParameterError(f"2^d = {1 << (b // r)} exceeds vocab_size={V}")
        if not self.bias >= 0:
            raise ParameterError(f"bias must be non-negative, got {self.bias}")
        if len(self.hash_keys) != k:
            raise ParameterError(f"expected {k} hash keys, got {len(self.hash_keys)}")
        if any(not 0 <= key <= MASK64 for key in self.hash_keys):
            raise ParameterError("hash keys must be 64-bit unsigned integers")
        if len(set(self.hash_keys)) != k:
            raise ParameterError("hash keys must be pairwise distinct")
        if self.scheme in (Scheme.LOSO, Scheme.MPAC) and k != 1:
            raise ParameterError(f"scheme {self.scheme.value} requires num_keys=1")

    @property
    def block_bits(self) -> int:
        return self.message_bits // self.num_blocks

    @property
    def num_shards(self) -> int:
        return 1 << self.block_bits

    def to_dict(self) -> dict:
        return {
            "vocab_size": self.vocab_size,
            "message_bits": self.message_bits,
            "num_blocks": self.num_blocks,
            "num_keys": self.num_keys,
            "bias": self.bias,
            "hash_keys": list(self.hash_keys),
            "scheme": self.scheme.value,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "WatermarkParams":
        try:
            return cls(
                vocab_size=int(d["vocab_size"]),
                message_bits=int(d["message_bits"]),
                num_blocks=int(d["num_blocks"]),
                num_keys=int(d["num_keys"]),
                bias=float(d["bias"]),
                hash_keys=tuple(int(k) for k in d["hash_keys"]),
                scheme=Scheme(d.get("scheme", "XMARK")),
            )
        except (KeyError, TypeError, ValueError) as e:
            if isinstance(e, ParameterError):
                raise
            raise ParameterError(f"bad parameter document: {e}") from e

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def load(cls, path: str | Path) -> "WatermarkParams":
        with open(path) as f:
            return cls.from_dict(json.load(f))


@dataclass(frozen=True)
class Message:
    bits: tuple[int, ...]

    def __post_init__(self):
        bits = tuple(int(b) for b in self.bits)
        if any(b not in (0, 1) for b in bits):
            raise ParameterError("message bits must be 0 or 1")
        object.__setattr__(self, "bits", bits)

    @classmethod
    def from_str(cls, s: str) -> "Message":
        s = s.strip()
        if not s or set(s) - {"0", "1"}:
            raise ParameterError(f"not a bit string: {s!r}")
        return cls(tuple(int(c) for c in s))

    def __str__(self) -> str:
        return "".join(map(str, self.bits))

    def __len__(self) -> int:
        return len(self.bits)


@dataclass(frozen=True)
class MessageBlock:
    bits: tuple[int, ...]

    @property
    def decimal(self) -> int:
        p = 0
        for b in self.bits:
            p = (p << 1) | b
        return p

    def __str__(self) -> str:
        return "".join(map(str, self.bits))


@dataclass(frozen=True)
class TokenStream:
    tokens: tuple[int, ...]
    bootstrap: tuple[int, int] = DEFAULT_BOOTSTRAP

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(int(t) for t in self.tokens))

    def __len__(self) -> int:
        return len(self.tokens)

    def validate(self, vocab_size: int) -> None:
        bad = [t for t in self.tokens if not 0 <= t < vocab_size]
        if bad:
            raise ParameterError(f"token {bad[0]} outside vocabulary of size {vocab_size}")

    def write(self, path: str | Path, vocab_size: int) -> None:
        with open(path, "w") as f:
            f.write(f"# xmark-tokens v1 V={vocab_size}\n")
            for t in self.tokens:
                f.write(f"{t}\n")

    @classmethod
    def read(cls, path: str | Path) -> tuple["TokenStream", int]:
        """Read a token file; returns the stream and the vocabulary size from its header."""
        with open(path) as f:
            header = f.readline().strip()
            parts = header.split()
            if len(parts) != 4 or parts[:3] != ["#", "xmark-tokens", "v1"] or not parts[3].startswith("V="):
                raise ParameterError(f"{path}: bad token file header {header!r}")
            V = int(parts[3][2:])
            tokens = [int(line) for line in f if line.strip()]
        stream = cls(tuple(tokens))
        stream.validate(V)
        return stream, V


def divide_message(m: Message, params: WatermarkParams) -> list[MessageBlock]:
    if len(m) != params.message_bits:
        raise ParameterError(f"message has {len(m)} bits, params expect {params.message_bits}")
    d = params.block_bits
    return [MessageBlock(m.bits[i * d:(i + 1) * d]) for i in range(params.num_blocks)]


def block_to_binary(p: int, d: int) -> MessageBlock:
    if not 0 <= p < (1 << d):
        raise DomainError(f"block value {p} outside [0, 2^{d})")
    return MessageBlock(tuple((p >> (d - 1 - i)) & 1 for i in range(d)))


def concat_blocks(blocks: Sequence[MessageBlock]) -> Message:
    if blocks and len({len(b.bits) for b in blocks}) != 1:
        raise ParameterError("blocks must all have the same length")
    return Message(tuple(bit for b in blocks for bit in b.bits))


def block_index(x_prev2: int, x_prev1: int, r: int) -> int:
    return (x_prev2 + x_prev1) % r


def bit_accuracy(truth: Message, decoded: Message) -> float:
    if len(truth) != len(decoded):
        raise ParameterError(f"length mismatch: {len(truth)} vs {len(decoded)}")
    return sum(a == b for a, b in zip(truth.bits, decoded.bits)) / len(truth)
