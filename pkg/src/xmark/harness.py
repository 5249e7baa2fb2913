"""Experiment runner: parameter sweeps, per-user trials, aggregation and CSV output."""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .attacks import AttackSpec, apply_attack
from .core import Message, ParameterError, WatermarkParams, bit_accuracy
from .decoder import DecodeMode, DecodeReport, decode
from .encoder import encode, generate_unwatermarked
from .kperm import SplitMix64, prf_hash
from .toylm import ToyLm, ToyLmParams

log = logging.getLogger(__name__)

# logit std 0.1: close to uniform over the vocabulary
HIGH_ENTROPY_TEMP = 10.0

# per-user substream labels
_MESSAGE, _TEXT, _CLEAN, _ATTACK = 1, 1000, 2000, 3000


def derive_seed(base: int, user: int, label: int) -> int:
    return prf_hash(user, label, base)


def user_message(base: int, user: int, bits: int) -> Message:
    rng = SplitMix64(derive_seed(base, user, _MESSAGE))
    return Message(tuple(rng.next_u64() >> 63 for _ in range(bits)))


@dataclass(frozen=True)
class ExperimentPlan:
    params_grid: Sequence[WatermarkParams]
    T_values: Sequence[int]
    num_users: int = 50
    texts_per_user: int = 2
    toylm: ToyLmParams = field(default_factory=lambda: ToyLmParams(entropy_temp=HIGH_ENTROPY_TEMP))
    attacks: Sequence[AttackSpec | None] = (None,)
    trial_seed_base: int = 0
    output_path: str | None = None
    decode_mode: DecodeMode = DecodeMode.CTMM
    top_p: float | None = None

    def __post_init__(self):
        if self.num_users < 1 or self.texts_per_user < 1:
            raise ParameterError("num_users and texts_per_user must be positive")
        for T in self.T_values:
            if T % self.texts_per_user:
                raise ParameterError(f"T={T} is not divisible by texts_per_user={self.texts_per_user}")
        for p in self.params_grid:
            if p.vocab_size != self.toylm.vocab_size:
                raise ParameterError("params vocab_size must match the toy LM vocabulary")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentPlan":
        try:
            toylm = ToyLmParams(**d["toylm"]) if "toylm" in d else ToyLmParams(entropy_temp=HIGH_ENTROPY_TEMP)
            attacks = [None if a is None else AttackSpec.from_dict(a) for a in d.get("attacks", [None])]
            return cls(
                params_grid=[WatermarkParams.from_dict(p) for p in d["params_grid"]],
                T_values=[int(t) for t in d["T_values"]],
                num_users=int(d.get("num_users", 50)),
                texts_per_user=int(d.get("texts_per_user", 2)),
                toylm=toylm,
                attacks=attacks or [None],
                trial_seed_base=int(d.get("trial_seed_base", 0)),
                output_path=d.get("output_path"),
                decode_mode=DecodeMode(d.get("decode_mode", "CTMM")),
                top_p=d.get("top_p"),
            )
        except (KeyError, TypeError, ValueError) as e:
            if isinstance(e, ParameterError):
                raise
            raise ParameterError(f"bad experiment plan: {e}") from e

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentPlan":
        with open(path) as f:
            return cls.from_dict(json.load(f))


@dataclass(frozen=True)
class TrialResult:
    user: int
    message: Message
    decoded: Message
    bit_accuracy: float
    green_fraction: float
    block_visits: tuple[int, ...]
    report: DecodeReport
    clean_report: DecodeReport | None = None

    @property
    def exact(self) -> bool:
        return self.message == self.decoded

    @property
    def fp_wm(self) -> float:
        return self.report.fp_statistic

    @property
    def fp_clean(self) -> float:
        return float("nan") if self.clean_report is None else self.clean_report.fp_statistic


def run_user(
    params: WatermarkParams,
    T: int,
    user: int,
    *,
    toylm: ToyLmParams,
    texts_per_user: int = 2,
    trial_seed_base: int = 0,
    attack: AttackSpec | None = None,
    modes: Sequence[DecodeMode] = (DecodeMode.CTMM,),
    top_p: float | None = None,
    with_clean: bool = True,
) -> dict[DecodeMode, TrialResult]:
    """Encode one user's message over several texts, optionally attack, decode jointly.

    The watermarked streams are shared by all decode ``modes`` so results are paired.
    ``with_clean=False`` skips the unwatermarked companion texts (``fp_clean`` is then
    NaN); copy-paste attacks always need them.
    """
    with_clean = with_clean or attack is not None
    lm = ToyLm(toylm)
    V = params.vocab_size
    n = T // texts_per_user
    message = user_message(trial_seed_base, user, params.message_bits)
    streams, clean_streams = [], []
    hits = visits = 0
    block_visits = np.zeros(params.num_blocks, dtype=int)
    for j in range(texts_per_user):
        rng = SplitMix64(derive_seed(trial_seed_base, user, _TEXT + j))
        tail = (rng.next_below(V), rng.next_below(V))
        res = encode(message, params, lm, n, tail, rng.next_u64(), top_p)
        hits += res.green_hits
        visits += res.steps
        block_visits += res.block_visits

        clean = None
        if with_clean:
            crng = SplitMix64(derive_seed(trial_seed_base, user, _CLEAN + j))
            ctail = (crng.next_below(V), crng.next_below(V))
            clean = generate_unwatermarked(lm, n, ctail, crng.next_u64(), top_p)
            clean_streams.append(clean)

        stream = res.tokens
        if attack is not None:
            seed = derive_seed(trial_seed_base, user, _ATTACK + j)
            stream = apply_attack(stream, attack.with_seed(seed), V, clean)
        streams.append(stream)

    clean_report = decode(clean_streams, params) if with_clean else None
    out = {}
    for mode in modes:
        rep = decode(streams, params, mode)
        out[DecodeMode(mode)] = TrialResult(
            user=user,
            message=message,
            decoded=rep.message,
            bit_accuracy=bit_accuracy(message, rep.message),
            green_fraction=hits / visits,
            block_visits=tuple(int(v) for v in block_visits),
            report=rep,
            clean_report=clean_report,
        )
    return out


@dataclass(frozen=True)
class ResultRow:
    scheme: str
    b: int
    r: int
    d: int
    k: int
    delta: float
    T: int
    attack_delta: float | None
    mean_ba: float
    exact_match: float
    mean_green_fraction: float
    mean_fp_wm: float
    mean_fp_clean: float
    trials: int

    def sort_key(self):
        a = -1.0 if self.attack_delta is None else self.attack_delta
        return (self.scheme, self.b, self.r, self.k, self.delta, self.T, a)


CSV_COLUMNS = [
    "scheme", "b", "r", "d", "k", "delta", "T", "attack_delta", "mean_ba", "exact_match",
    "mean_green_fraction", "mean_fp_wm", "mean_fp_clean", "trials",
]


def aggregate(params: WatermarkParams, T: int, attack: AttackSpec | None, trials: Sequence[TrialResult]) -> ResultRow:
    return ResultRow(
        scheme=params.scheme.value,
        b=params.message_bits,
        r=params.num_blocks,
        d=params.block_bits,
        k=params.num_keys,
        delta=params.bias,
        T=T,
        attack_delta=None if attack is None else attack.delta,
        mean_ba=float(np.mean([t.bit_accuracy for t in trials])),
        exact_match=float(np.mean([t.exact for t in trials])),
        mean_green_fraction=float(np.mean([t.green_fraction for t in trials])),
        mean_fp_wm=float(np.mean([t.fp_wm for t in trials])),
        mean_fp_clean=float(np.mean([t.fp_clean for t in trials])),
        trials=len(trials),
    )


def run_experiment(plan: ExperimentPlan) -> list[ResultRow]:
    rows = []
    for params in plan.params_grid:
        for T in plan.T_values:
            for attack in plan.attacks:
                trials = [
                    run_user(
                        params, T, u,
                        toylm=plan.toylm,
                        texts_per_user=plan.texts_per_user,
                        trial_seed_base=plan.trial_seed_base,
                        attack=attack,
                        modes=(plan.decode_mode,),
                        top_p=plan.top_p,
                    )[plan.decode_mode]
                    for u in range(plan.num_users)
                ]
                row = aggregate(params, T, attack, trials)
                log.info("%s k=%d T=%d attack=%s: BA %.4f", row.scheme, row.k, T, row.attack_delta, row.mean_ba)
                rows.append(row)
    rows.sort(key=ResultRow.sort_key)
    if plan.output_path:
        emit_csv(rows, plan.output_path)
    return rows


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.4f}"
    return str(v)


def emit_csv(rows: Sequence[ResultRow], path: str | Path) -> None:
    try:
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(CSV_COLUMNS)
            for row in rows:
                w.writerow([_fmt(getattr(row, c)) for c in CSV_COLUMNS])
    except OSError as e:
        raise OSError(f"cannot write results to {path}: {e}") from e
