"""Command-line front end.

Exit codes: 0 success, 2 invalid arguments or inputs, 3 I/O failure,
4 numerical failure. Machine-readable JSON goes to stdout; ``--verbose``
summaries go to stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys

import numpy as np

from . import __version__
from .bss_eval import EvalConfig, evaluate, evaluate_pair
from .errors import NumericError, ValidationError, WavError
from .mask import dominance, separate_pair
from .signal_io import AudioSignal, mix, read_wav, write_wav
from .stft import StftParams, bin_frequencies, frame_blocks, hop_for_policy, magnitude_db
from .sweep import (DEFAULT_WINDOWS, HOP_POLICIES, SweepConfig, pow2_windows,
                    report_csv, report_json, run_sweep, write_atomic)
from .synth import KINDS, SynthSpec

log = logging.getLogger("tfsep")

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_NUMERIC = 0, 2, 3, 4


class UsageError(ValidationError):
    pass


def parse_windows(text: str) -> tuple[int, ...]:
    """``"pow2:MIN:MAX"`` or a comma-separated list of strictly increasing sizes."""
    try:
        if text.startswith("pow2:"):
            _, lo, hi = text.split(":")
            return pow2_windows(int(lo), int(hi))
        sizes = tuple(int(v) for v in text.split(","))
    except ValueError as exc:
        raise UsageError(f"bad --windows value {text!r}: {exc}") from exc
    if any(n < 2 for n in sizes) or any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise UsageError(f"--windows must be strictly increasing sizes >= 2, got {text!r}")
    return sizes


def _positive_int(name, value, minimum=1):
    if value is None or value < minimum:
        raise UsageError(f"{name} must be >= {minimum}, got {value}")
    return value


def _params(window, hop, hop_policy) -> StftParams:
    _positive_int("--window", window, 2)
    if hop is not None and hop_policy is not None:
        raise UsageError("give either --hop or --hop-policy, not both")
    if hop is None:
        hop = hop_for_policy(window, hop_policy or "quarter")
    return StftParams(window, hop)


def _emit(obj) -> None:
    sys.stdout.write(json.dumps(obj, indent=2) + "\n")


def _check_aligned(a: AudioSignal, b: AudioSignal) -> None:
    if a.sample_rate != b.sample_rate or len(a) != len(b):
        raise ValidationError(
            f"inputs must share rate and length: ({a.sample_rate} Hz, {len(a)}) vs "
            f"({b.sample_rate} Hz, {len(b)}); trim them first")


def cmd_separate(args) -> int:
    params = _params(args.window, args.hop, args.hop_policy)
    cfg = EvalConfig(filter_length=_positive_int("--filter-len", args.filter_len))
    a, b = read_wav(args.source_a), read_wav(args.source_b)
    _check_aligned(a, b)
    result = separate_pair(a, b, params, (args.gain_a, args.gain_b))
    mixture = mix(a, b, args.gain_a, args.gain_b)
    report = {"params": params.to_dict(), "gains": [args.gain_a, args.gain_b],
              "sample_rate": a.sample_rate, "length": len(a),
              "mask_density": result.mask_density,
              "mask_shape": [params.n_frames(len(a)), params.n_bins]}
    if args.eval:
        ma, mb = evaluate_pair(result.estimate_a, result.estimate_b, a, b, cfg)
        report["metrics_a"], report["metrics_b"] = ma.to_dict(), mb.to_dict()
    os.makedirs(args.out_dir, exist_ok=True)
    clipped = {}
    for name, sig in (("est_a", result.estimate_a), ("est_b", result.estimate_b),
                      ("mixture", mixture)):
        clipped[name] = write_wav(os.path.join(args.out_dir, f"{name}.wav"), sig,
                                  args.bit_depth)
    report["clipped_samples"] = clipped
    write_atomic(os.path.join(args.out_dir, "report.json"), json.dumps(report, indent=2) + "\n")
    _emit(report)
    log.info("separated with N=%d H=%d, mask density %.4f", params.window_size,
             params.hop, result.mask_density)
    return EXIT_OK


def cmd_sweep(args) -> int:
    windows = parse_windows(args.windows)
    if args.hop_policy is None:
        raise UsageError("--hop-policy is required (one | quarter)")
    cfg = SweepConfig(
        hop_policy=args.hop_policy, window_sizes=windows,
        gains=(args.gain_a, args.gain_b),
        eval=EvalConfig(filter_length=_positive_int("--filter-len", args.filter_len)),
        labels=(args.label_a, args.label_b), threads=_positive_int("--threads", args.threads))
    a, b = read_wav(args.source_a), read_wav(args.source_b)
    _check_aligned(a, b)
    report = run_sweep(a, b, cfg, (os.path.basename(args.source_a),
                                   os.path.basename(args.source_b)))
    if args.csv:
        write_atomic(args.csv, report_csv(report))
    text = report_json(report, timings=args.timings)
    if args.json:
        write_atomic(args.json, text)
    sys.stdout.write(text)
    for row in report.rows:
        log.info("N=%-6d H=%-5d %s SDR %.2f dB  %s SDR %.2f dB  (%.1fs)", row.window_size,
                 row.hop, cfg.labels[0], row.metrics_a.sdr_db, cfg.labels[1],
                 row.metrics_b.sdr_db, row.wall_time_seconds)
    return EXIT_OK


def cmd_eval(args) -> int:
    cfg = EvalConfig(filter_length=_positive_int("--filter-len", args.filter_len))
    paths = args.sources.split(",")
    if len(paths) < 1 or not 0 <= args.target_index < len(paths):
        raise UsageError(f"--target-index {args.target_index} invalid for {len(paths)} sources")
    est = read_wav(args.estimate)
    sources = [read_wav(p) for p in paths]
    for s in sources:
        _check_aligned(est, s)
    metrics = evaluate(est, sources, args.target_index, cfg)
    _emit(metrics.to_dict())
    return EXIT_OK


def cmd_synth(args) -> int:
    params = {}
    for key, attr in (("freq", "freq"), ("phase", "phase"), ("f0", "f0"),
                      ("n_harmonics", "harmonics"), ("decay_rate", "decay"),
                      ("note_period", "note_period"), ("burst_len", "burst_len"),
                      ("period", "period")):
        value = getattr(args, attr)
        if value is not None:
            params[key] = value
    spec = SynthSpec(args.kind, args.duration, args.rate, args.amplitude, args.seed, params)
    signal = spec.render()
    write_wav(args.out, signal, args.bit_depth)
    log.info("wrote %s: %d samples", args.out, len(signal))
    return EXIT_OK


def _grid_csv(rows, meta: str) -> str:
    buf = io.StringIO()
    buf.write(meta + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    for row in rows:
        writer.writerow([repr(float(v)) for v in row])
    return buf.getvalue()


def _meta(signal, params, decimate, what) -> str:
    hz = signal.sample_rate / params.window_size
    return (f"# {what}; sample_rate={signal.sample_rate} window={params.window_size} "
            f"hop={params.hop} decimate={decimate} bins={params.n_bins} "
            f"bin_hz={hz!r} (column k is k*sample_rate/window Hz)")


def _decimated_rows(blocks, decimate):
    for t0, block in blocks:
        first = (-t0) % decimate
        yield from block[first::decimate]


def cmd_export_spectrogram(args) -> int:
    params = _params(args.window, args.hop, args.hop_policy)
    decimate = _positive_int("--decimate", args.decimate)
    signal = read_wav(args.input)
    rows = [magnitude_db(r[None, :])[0]
            for r in _decimated_rows(frame_blocks(signal.samples, params), decimate)]
    meta = _meta(signal, params, decimate, "magnitude dB, row=frame, column=bin")
    if args.csv:
        write_atomic(args.csv, _grid_csv(rows, meta))
    if args.json:
        write_atomic(args.json, json.dumps({
            "sample_rate": signal.sample_rate, "params": params.to_dict(),
            "decimate": decimate,
            "bin_hz": bin_frequencies(params, signal.sample_rate).tolist(),
            "magnitude_db": [r.tolist() for r in rows]}) + "\n")
    return EXIT_OK


def cmd_export_mask(args) -> int:
    params = _params(args.window, args.hop, args.hop_policy)
    decimate = _positive_int("--decimate", args.decimate)
    target, other = read_wav(args.target), read_wav(args.other)
    _check_aligned(target, other)
    blocks = ((t0, dominance(a, b).astype(np.int8))
              for (t0, a), (_, b) in zip(frame_blocks(target.samples, params),
                                         frame_blocks(other.samples, params)))
    buf = io.StringIO()
    buf.write(_meta(target, params, decimate, "ideal binary mask, row=frame, column=bin")
              + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    for row in _decimated_rows(blocks, decimate):
        writer.writerow(row.tolist())
    write_atomic(args.csv, buf.getvalue())
    return EXIT_OK


def _add_stft_flags(p, window_required=True):
    p.add_argument("--window", type=int, required=window_required, help="window size N")
    p.add_argument("--hop", type=int, help="hop in samples")
    p.add_argument("--hop-policy", choices=HOP_POLICIES, help="hop 1 or max(1, N/4)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tfsep", description="Oracle binary-mask separation across STFT window sizes.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--threads", type=int, default=1, help="parallel sweep rows")
    parser.add_argument("--seed", type=int, default=0, help="seed for synth noise")
    parser.add_argument("--verbose", "-v", action="store_true")
    # the same flags are accepted after the subcommand name
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--threads", type=int, default=argparse.SUPPRESS)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    common.add_argument("--verbose", "-v", action="store_true", default=argparse.SUPPRESS)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("separate", parents=[common],
                       help="separate one pair at one window size")
    p.add_argument("--source-a", required=True)
    p.add_argument("--source-b", required=True)
    _add_stft_flags(p)
    p.add_argument("--gain-a", type=float, default=1.0)
    p.add_argument("--gain-b", type=float, default=1.0)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--eval", action="store_true", help="also compute SDR/SIR/SAR")
    p.add_argument("--filter-len", type=int, default=512)
    p.add_argument("--bit-depth", choices=("16", "24", "32f"), default="32f")
    p.set_defaults(func=cmd_separate)

    p = sub.add_parser("sweep", parents=[common],
                       help="separate and score across window sizes")
    p.add_argument("--source-a", required=True)
    p.add_argument("--source-b", required=True)
    p.add_argument("--windows", default=",".join(map(str, DEFAULT_WINDOWS)),
                   help="comma list or pow2:MIN:MAX")
    p.add_argument("--hop-policy", choices=HOP_POLICIES)
    p.add_argument("--gain-a", type=float, default=1.0)
    p.add_argument("--gain-b", type=float, default=1.0)
    p.add_argument("--label-a", default="a")
    p.add_argument("--label-b", default="b")
    p.add_argument("--csv")
    p.add_argument("--json")
    p.add_argument("--filter-len", type=int, default=512)
    p.add_argument("--timings", action="store_true",
                   help="include per-row wall times in the JSON report")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("eval", parents=[common],
                       help="score one estimate against true sources")
    p.add_argument("--estimate", required=True)
    p.add_argument("--sources", required=True, help="comma-separated WAV paths")
    p.add_argument("--target-index", type=int, default=0)
    p.add_argument("--filter-len", type=int, default=512)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("synth", parents=[common],
                       help="render a deterministic synthetic source")
    p.add_argument("kind", choices=KINDS)
    p.add_argument("--out", required=True)
    p.add_argument("--duration", type=float, default=4.0)
    p.add_argument("--rate", type=int, default=44100)
    p.add_argument("--amplitude", type=float, default=0.5)
    p.add_argument("--freq", type=float)
    p.add_argument("--phase", type=float)
    p.add_argument("--f0", type=float)
    p.add_argument("--harmonics", type=int)
    p.add_argument("--decay", type=float)
    p.add_argument("--note-period", type=float)
    p.add_argument("--burst-len", type=float)
    p.add_argument("--period", type=float)
    p.add_argument("--bit-depth", choices=("16", "24", "32f"), default="32f")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("export-spectrogram", parents=[common],
                       help="magnitude dB grid as CSV/JSON")
    p.add_argument("--input", required=True)
    _add_stft_flags(p)
    p.add_argument("--decimate", type=int, default=1, help="keep every k-th frame")
    p.add_argument("--csv")
    p.add_argument("--json")
    p.set_defaults(func=cmd_export_spectrogram)

    p = sub.add_parser("export-mask", parents=[common],
                       help="ideal binary mask of target over other as 0/1 CSV")
    p.add_argument("--target", required=True)
    p.add_argument("--other", required=True)
    _add_stft_flags(p)
    p.add_argument("--decimate", type=int, default=1)
    p.add_argument("--csv", required=True)
    p.set_defaults(func=cmd_export_mask)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (WavError, OSError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (NumericError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def main_entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
