"""Window-size sweeps of ideal-binary-mask separation and their reports."""

from __future__ import annotations

import csv
import io
import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from . import __version__
from .bss_eval import EvalConfig, Metrics, evaluate_pair
from .errors import TfsepError, ValidationError
from .mask import separate_pair
from .signal_io import AudioSignal
from .stft import StftParams, hop_for_policy

HOP_POLICIES = ("one", "quarter")
METRICS = ("sdr", "sir", "sar")
SOURCES = ("a", "b")
CSV_HEADER = ["window_size", "hop", "source", "sdr_db", "sir_db", "sar_db",
              "sdr_capped", "sir_capped", "sar_capped", "mask_density"]
DEFAULT_WINDOWS = tuple(2**k for k in range(1, 15))


def pow2_windows(lo: int, hi: int) -> tuple[int, ...]:
    """Powers of two from ``lo`` to ``hi`` inclusive; both must be powers of two."""
    for v in (lo, hi):
        if v < 2 or v & (v - 1):
            raise ValidationError(f"pow2 bounds must be powers of two >= 2, got {v}")
    if lo > hi:
        raise ValidationError(f"empty pow2 range {lo}:{hi}")
    return tuple(2**k for k in range(lo.bit_length() - 1, hi.bit_length()))


@dataclass(frozen=True)
class SweepConfig:
    hop_policy: str
    window_sizes: tuple[int, ...] = DEFAULT_WINDOWS
    gains: tuple[float, float] = (1.0, 1.0)
    eval: EvalConfig = field(default_factory=EvalConfig)
    labels: tuple[str, str] = ("a", "b")
    threads: int = 1

    def __post_init__(self):
        if self.hop_policy not in HOP_POLICIES:
            raise ValidationError(f"hop_policy must be one of {HOP_POLICIES}")
        sizes = tuple(int(n) for n in self.window_sizes)
        if not sizes:
            raise ValidationError("no window sizes given")
        if any(n < 2 for n in sizes):
            raise ValidationError(f"window sizes must be >= 2, got {sizes}")
        if any(b <= a for a, b in zip(sizes, sizes[1:])):
            raise ValidationError(f"window sizes must be strictly increasing, got {sizes}")
        if self.threads < 1:
            raise ValidationError("threads must be >= 1")
        object.__setattr__(self, "window_sizes", sizes)
        object.__setattr__(self, "gains", tuple(float(g) for g in self.gains))

    def params_for(self, window_size: int) -> StftParams:
        return StftParams(window_size, hop_for_policy(window_size, self.hop_policy))


@dataclass(frozen=True)
class SweepRow:
    window_size: int
    hop: int
    metrics_a: Metrics
    metrics_b: Metrics
    mask_density: float
    wall_time_seconds: float | None = field(default=None, compare=False)

    def metrics(self, source: str) -> Metrics:
        return self.metrics_a if source == "a" else self.metrics_b


@dataclass(frozen=True)
class SweepReport:
    rows: tuple[SweepRow, ...]
    optima: dict
    provenance: dict


def optimal_window(report: SweepReport, source: str, metric: str) -> int:
    """Window size with the largest metric value; the smallest window wins ties."""
    if source not in SOURCES or metric not in METRICS:
        raise ValidationError(f"source must be in {SOURCES} and metric in {METRICS}")
    if not report.rows:
        raise ValidationError("empty report")
    return _best(report.rows, source, metric)


def _best(rows, source, metric) -> int:
    best = None
    for row in sorted(rows, key=lambda r: r.window_size):
        value = getattr(row.metrics(source), f"{metric}_db")
        if best is None or value > best[1]:
            best = (row.window_size, value)
    return best[0]


def _optima(rows) -> dict:
    return {s: {m: _best(rows, s, m) for m in METRICS} for s in SOURCES}


def _run_row(source_a, source_b, cfg: SweepConfig, window_size: int) -> SweepRow:
    params = cfg.params_for(window_size)
    start = time.perf_counter()
    try:
        result = separate_pair(source_a, source_b, params, cfg.gains)
        metrics_a, metrics_b = evaluate_pair(result.estimate_a, result.estimate_b,
                                             source_a, source_b, cfg.eval)
    except TfsepError as exc:
        raise type(exc)(f"window size {window_size}: {exc}") from exc
    return SweepRow(window_size, params.hop, metrics_a, metrics_b, result.mask_density,
                    time.perf_counter() - start)


def run_sweep(source_a: AudioSignal, source_b: AudioSignal, cfg: SweepConfig,
              descriptions: tuple[str, str] | None = None) -> SweepReport:
    """Separate and score the pair at every configured window size.

    Rows may run concurrently (``cfg.threads``) but are always reported in
    configuration order.
    """
    if source_a.sample_rate != source_b.sample_rate or len(source_a) != len(source_b):
        raise ValidationError("sources must share sample rate and length")
    if len(source_a) <= cfg.eval.filter_length:
        raise ValidationError(
            f"signal length {len(source_a)} must exceed filter length {cfg.eval.filter_length}")

    def job(n):
        return _run_row(source_a, source_b, cfg, n)

    if cfg.threads == 1:
        rows = tuple(map(job, cfg.window_sizes))
    else:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            rows = tuple(pool.map(job, cfg.window_sizes))

    provenance = {
        "sources": list(descriptions or cfg.labels),
        "labels": list(cfg.labels),
        "gains": list(cfg.gains),
        "hop_policy": cfg.hop_policy,
        "sample_rate": source_a.sample_rate,
        "length": len(source_a),
        "filter_length": cfg.eval.filter_length,
        "tool_version": __version__,
    }
    return SweepReport(rows, _optima(rows), provenance)


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    return repr(float(x)) if isinstance(x, float) else str(x)


def report_csv(report: SweepReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in report.rows:
        for source in SOURCES:
            m = row.metrics(source)
            writer.writerow([_fmt(v) for v in (
                row.window_size, row.hop, source, m.sdr_db, m.sir_db, m.sar_db,
                m.sdr_capped, m.sir_capped, m.sar_capped, row.mask_density)])
    return buf.getvalue()


def report_dict(report: SweepReport, timings: bool = False) -> dict:
    rows = []
    for row in report.rows:
        d = {"window_size": row.window_size, "hop": row.hop,
             "mask_density": row.mask_density,
             "metrics_a": row.metrics_a.to_dict(), "metrics_b": row.metrics_b.to_dict()}
        if timings:
            d["wall_time_seconds"] = row.wall_time_seconds
        rows.append(d)
    return {"rows": rows, "optima": report.optima, "provenance": report.provenance}


def report_from_dict(d: dict) -> SweepReport:
    rows = tuple(
        SweepRow(r["window_size"], r["hop"], Metrics.from_dict(r["metrics_a"]),
                 Metrics.from_dict(r["metrics_b"]), r["mask_density"],
                 r.get("wall_time_seconds"))
        for r in d["rows"])
    return SweepReport(rows, d["optima"], d["provenance"])


def write_atomic(path, text: str) -> None:
    """Write ``text`` to ``path`` through a temporary file and a rename."""
    path = os.fspath(path)
    tmp = f"{path}.tmp{os.getpid()}"
    try:
        with open(tmp, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.remove(tmp)


def report_json(report: SweepReport, timings: bool = False) -> str:
    return json.dumps(report_dict(report, timings), indent=2) + "\n"


def export_csv(report: SweepReport, path) -> None:
    write_atomic(path, report_csv(report))


def export_json(report: SweepReport, path, timings: bool = False) -> None:
    write_atomic(path, report_json(report, timings))


def load_json(path) -> SweepReport:
    with open(path) as fh:
        return report_from_dict(json.load(fh))
