"""Command line interface: encode, decode, detect, gamma, experiment."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .core import DomainError, Message, ParameterError, WatermarkParams, TokenStream
from .decoder import DecodeMode, DecodeReport, decode, is_watermarked
from .encoder import encode
from .harness import HIGH_ENTROPY_TEMP, ExperimentPlan, run_experiment
from .kperm import evergreen_ratios
from .toylm import ToyLm, ToyLmParams

EXIT_OK, EXIT_PARAM, EXIT_UNDECODABLE = 0, 2, 3


def _pair(s: str) -> tuple[int, int]:
    try:
        a, b = (int(x) for x in s.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected two comma-separated token ids, got {s!r}")
    return a, b


def _write(text: str, path: str | None) -> None:
    if path:
        with open(path, "w") as f:
            f.write(text + "\n")
    else:
        print(text)


def cmd_encode(args) -> int:
    params = WatermarkParams.load(args.params)
    message = Message.from_str(args.message)
    lm = ToyLm(ToyLmParams(args.model_seed, args.lm_temp, params.vocab_size))
    res = encode(message, params, lm, args.T, args.prompt_tail, args.seed, args.top_p)
    if args.out:
        res.tokens.write(args.out, params.vocab_size)
    else:
        sys.stdout.write(f"# xmark-tokens v1 V={params.vocab_size}\n")
        sys.stdout.write("".join(f"{t}\n" for t in res.tokens.tokens))
    logging.info("green hits %d/%d, skipped %d", res.green_hits, res.steps, res.skipped_steps)
    return EXIT_OK


def cmd_decode(args) -> int:
    params = WatermarkParams.load(args.params)
    streams = []
    for path in args.tokens:
        stream, V = TokenStream.read(path)
        if V != params.vocab_size:
            raise ParameterError(f"{path}: vocabulary {V} does not match params ({params.vocab_size})")
        streams.append(stream)
    report = decode(streams, params, DecodeMode(args.mode))
    _write(report.to_json(), args.out)
    return EXIT_OK if report.decodable else EXIT_UNDECODABLE


def cmd_detect(args) -> int:
    with open(args.report) as f:
        report = DecodeReport.from_dict(json.load(f))
    if not report.decodable:
        print("undecodable")
        return EXIT_UNDECODABLE
    verdict = "watermarked" if is_watermarked(report, args.threshold) else "unwatermarked"
    print(f"{verdict} (statistic {report.fp_statistic:.4f}, threshold {args.threshold:.4f})")
    return EXIT_OK


def cmd_gamma(args) -> int:
    d = args.block_bits
    print("k  empirical  stderr    analytic")
    for k in range(1, args.max_keys + 1):
        ratios = evergreen_ratios(args.vocab_size, d, k, args.trials, args.seed)
        se = ratios.std(ddof=1) / len(ratios) ** 0.5
        print(f"{k}  {ratios.mean():.6f}   {se:.6f}  {(1 - 2.0 ** -d) ** k:.6f}")
    return EXIT_OK


def cmd_experiment(args) -> int:
    plan = ExperimentPlan.load(args.plan)
    if args.out:
        plan = ExperimentPlan(**{**plan.__dict__, "output_path": args.out})
    if not plan.output_path:
        raise ParameterError("no output path: pass --out or set output_path in the plan")
    rows = run_experiment(plan)
    print(f"wrote {len(rows)} rows to {plan.output_path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="xmark", description="Multi-bit text watermark toolkit")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("encode", help="embed a message into text from the toy logit source")
    p.add_argument("--params", required=True)
    p.add_argument("--message", required=True, help="bit string, e.g. 10110011")
    p.add_argument("-T", "--length", dest="T", type=int, required=True, help="tokens to generate")
    p.add_argument("--out")
    p.add_argument("--seed", type=int, default=0, help="sampler seed")
    p.add_argument("--top-p", type=float, default=None)
    p.add_argument("--prompt-tail", type=_pair, default=(0, 1))
    p.add_argument("--model-seed", type=int, default=0)
    p.add_argument("--lm-temp", type=float, default=HIGH_ENTROPY_TEMP)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("decode", help="recover the message from one or more token files")
    p.add_argument("--params", required=True)
    p.add_argument("tokens", nargs="+")
    p.add_argument("--mode", choices=[m.value for m in DecodeMode], default="CTMM")
    p.add_argument("--out")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("detect", help="threshold a decode report's row-spread statistic")
    p.add_argument("report")
    p.add_argument("--threshold", type=float, required=True)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("gamma", help="Monte-Carlo check of the expected evergreen ratio")
    p.add_argument("--vocab-size", type=int, default=1024)
    p.add_argument("--block-bits", type=int, default=2)
    p.add_argument("--max-keys", type=int, default=4)
    p.add_argument("--trials", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gamma)

    p = sub.add_parser("experiment", help="run a sweep described by a JSON plan, write CSV")
    p.add_argument("plan")
    p.add_argument("--out")
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ParameterError, DomainError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_PARAM
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_PARAM


if __name__ == "__main__":
    sys.exit(main())
