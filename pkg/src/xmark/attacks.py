"""Length-preserving text-editing attacks on token streams."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .core import ParameterError, TokenStream
from .kperm import SplitMix64


class AttackKind(str, enum.Enum):
    COPY_PASTE = "COPY_PASTE"
    SUBSTITUTE = "SUBSTITUTE"


@dataclass(frozen=True)
class AttackSpec:
    kind: AttackKind
    delta: float
    segment_len: int = 10
    attack_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", AttackKind(self.kind))
        if not 0.0 <= self.delta <= 1.0:
            raise ParameterError(f"attack delta must lie in [0, 1], got {self.delta}")
        if self.segment_len < 1:
            raise ParameterError("segment_len must be positive")

    def with_seed(self, seed: int) -> "AttackSpec":
        return AttackSpec(self.kind, self.delta, self.segment_len, seed)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "delta": self.delta,
            "segment_len": self.segment_len,
            "attack_seed": self.attack_seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AttackSpec":
        return cls(
            AttackKind(d["kind"]),
            float(d["delta"]),
            int(d.get("segment_len", 10)),
            int(d.get("attack_seed", 0)),
        )


def copy_paste_slots(n_tokens: int, spec: AttackSpec) -> list[int]:
    """Indices of the aligned segments that get replaced, in ascending order."""
    n_slots = math.ceil(n_tokens / spec.segment_len)
    n_replace = min(math.ceil(spec.delta * n_tokens / spec.segment_len), n_slots)
    # partial Fisher-Yates over slot indices
    slots = list(range(n_slots))
    rng = SplitMix64(spec.attack_seed)
    for i in range(n_replace):
        j = i + rng.next_below(n_slots - i)
        slots[i], slots[j] = slots[j], slots[i]
    return sorted(slots[:n_replace])


def copy_paste(wm: TokenStream, clean: TokenStream, spec: AttackSpec) -> TokenStream:
    """Overwrite a seeded set of aligned segments of ``wm`` with consecutive clean tokens."""
    if spec.kind is not AttackKind.COPY_PASTE:
        raise ParameterError(f"copy_paste called with a {spec.kind.value} spec")
    out = list(wm.tokens)
    L = spec.segment_len
    slots = copy_paste_slots(len(out), spec)
    needed = sum(min(L, len(out) - s * L) for s in slots)
    if len(clean) < needed:
        raise ParameterError(f"need {needed} clean tokens, got {len(clean)}")
    offset = 0
    for s in slots:
        lo, hi = s * L, min((s + 1) * L, len(out))
        out[lo:hi] = clean.tokens[offset:offset + hi - lo]
        offset += hi - lo
    return TokenStream(tuple(out), wm.bootstrap)


def substitute(wm: TokenStream, spec: AttackSpec, V: int) -> TokenStream:
    """Replace each position with a uniform random token with probability ``spec.delta``."""
    if spec.kind is not AttackKind.SUBSTITUTE:
        raise ParameterError(f"substitute called with a {spec.kind.value} spec")
    rng = SplitMix64(spec.attack_seed)
    out = []
    for t in wm.tokens:
        if rng.next_unit() < spec.delta:
            t = rng.next_below(V)
        out.append(t)
    return TokenStream(tuple(out), wm.bootstrap)


def apply_attack(wm: TokenStream, spec: AttackSpec, V: int, clean: TokenStream | None = None) -> TokenStream:
    if spec.kind is AttackKind.COPY_PASTE:
        if clean is None:
            raise ParameterError("copy-paste needs clean material")
        return copy_paste(wm, clean, spec)
    return substitute(wm, spec, V)
