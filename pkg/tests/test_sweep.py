import csv
import io
import json

import numpy as np
import pytest

from tfsep import sweep as sweep_mod
from tfsep.bss_eval import EvalConfig, Metrics
from tfsep.errors import NumericError, ValidationError
from tfsep.signal_io import AudioSignal
from tfsep.sweep import (CSV_HEADER, SweepConfig, SweepReport, SweepRow, export_csv,
                         export_json, load_json, optimal_window, pow2_windows, report_csv,
                         run_sweep)
from tfsep.synth import tonal_noise_pair

FAST_EVAL = EvalConfig(filter_length=32)


def report_from(values_a, windows=None):
    windows = windows or [2**k for k in range(1, len(values_a) + 1)]
    rows = tuple(SweepRow(n, n // 4 or 1, Metrics(v, v, v), Metrics(-v, -v, -v), 0.5)
                 for n, v in zip(windows, values_a))
    return SweepReport(rows, sweep_mod._optima(rows), {})


@pytest.fixture(scope="module")
def pair():
    return tonal_noise_pair(duration=0.5)


@pytest.fixture(scope="module")
def small_report(pair):
    cfg = SweepConfig("quarter", (64, 256, 1024), eval=FAST_EVAL, labels=("tone", "drum"))
    return run_sweep(*pair, cfg)


def test_single_window_silent_b(pair):
    a = pair[0]
    silent = AudioSignal(np.zeros(len(a)), a.sample_rate)
    report = run_sweep(a, silent, SweepConfig("quarter", (512,), eval=FAST_EVAL))
    assert len(report.rows) == 1
    m = report.rows[0].metrics_a
    assert m.sdr_capped and m.sir_capped and m.sar_capped and m.sdr_db == 300.0


def test_rows_echo_config(small_report):
    assert [r.window_size for r in small_report.rows] == [64, 256, 1024]
    assert [r.hop for r in small_report.rows] == [16, 64, 256]
    assert all(r.wall_time_seconds > 0 for r in small_report.rows)


def test_optimal_window_rules():
    assert optimal_window(report_from([1.0]), "a", "sdr") == 2
    assert optimal_window(report_from([1.0, 2.0, 3.0]), "a", "sir") == 8
    assert optimal_window(report_from([5.0, 5.0, 5.0]), "a", "sar") == 2
    assert optimal_window(report_from([1.0, 2.0, 3.0]), "b", "sdr") == 2
    with pytest.raises(ValidationError):
        optimal_window(SweepReport((), {}, {}), "a", "sdr")
    with pytest.raises(ValidationError):
        optimal_window(report_from([1.0]), "c", "sdr")


def test_optima_match_brute_force_scan_of_csv(small_report):
    rows = list(csv.DictReader(io.StringIO(report_csv(small_report))))
    for source in "ab":
        for metric in ("sdr", "sir", "sar"):
            mine = [r for r in rows if r["source"] == source]
            best = max(mine, key=lambda r: (float(r[f"{metric}_db"]), -int(r["window_size"])))
            assert int(best["window_size"]) == small_report.optima[source][metric]
            assert optimal_window(small_report, source, metric) == int(best["window_size"])


def test_csv_schema(small_report, tmp_path):
    path = tmp_path / "r.csv"
    export_csv(small_report, path)
    lines = path.read_text().splitlines()
    assert lines[0] == ",".join(CSV_HEADER)
    assert lines[0] == ("window_size,hop,source,sdr_db,sir_db,sar_db,"
                        "sdr_capped,sir_capped,sar_capped,mask_density")
    assert len(lines) == 1 + 6
    assert [ln.split(",")[2] for ln in lines[1:]] == ["a", "b"] * 3


def test_capped_metric_renders_as_sentinel():
    row = SweepRow(8, 2, Metrics(300.0, 300.0, 300.0, True, True, True),
                   Metrics(1.5, 2.5, 3.5), 1.0)
    text = report_csv(SweepReport((row,), {}, {}))
    assert text.splitlines()[1] == "8,2,a,300.0,300.0,300.0,true,true,true,1.0"
    assert text.splitlines()[2] == "8,2,b,1.5,2.5,3.5,false,false,false,1.0"


def test_json_round_trip(small_report, tmp_path):
    path = tmp_path / "r.json"
    export_json(small_report, path)
    assert load_json(path) == small_report
    doc = json.loads(path.read_text())
    assert doc["provenance"]["labels"] == ["tone", "drum"]
    assert "wall_time_seconds" not in doc["rows"][0]
    export_json(small_report, path, timings=True)
    assert json.loads(path.read_text())["rows"][0]["wall_time_seconds"] > 0


def test_threads_do_not_change_report(pair):
    base = SweepConfig("quarter", (32, 128, 512, 2048), eval=FAST_EVAL)
    one = run_sweep(*pair, base)
    many = run_sweep(*pair, SweepConfig("quarter", base.window_sizes, eval=FAST_EVAL, threads=4))
    assert report_csv(one) == report_csv(many)
    assert one == many


def test_hop_one_policy(pair):
    a, b = (AudioSignal(s.samples[:4000], s.sample_rate) for s in pair)
    report = run_sweep(a, b, SweepConfig("one", (8, 64), eval=FAST_EVAL))
    assert [r.hop for r in report.rows] == [1, 1]


@pytest.mark.parametrize("kwargs", [
    dict(hop_policy="half"),
    dict(hop_policy="one", window_sizes=(100, 200, 100)),
    dict(hop_policy="one", window_sizes=(1, 4)),
    dict(hop_policy="one", window_sizes=()),
    dict(hop_policy="one", threads=0),
])
def test_config_validation(kwargs):
    with pytest.raises(ValidationError):
        SweepConfig(**kwargs)


def test_stage_error_names_window(pair, monkeypatch):
    real = sweep_mod.separate_pair

    def flaky(a, b, params, gains):
        if params.window_size == 256:
            raise NumericError("boom")
        return real(a, b, params, gains)

    monkeypatch.setattr(sweep_mod, "separate_pair", flaky)
    with pytest.raises(NumericError, match="window size 256"):
        run_sweep(*pair, SweepConfig("quarter", (64, 256), eval=FAST_EVAL))


def test_pow2_windows():
    assert pow2_windows(2, 16384) == tuple(2**k for k in range(1, 15))
    assert pow2_windows(64, 64) == (64,)
    with pytest.raises(ValidationError):
        pow2_windows(3, 16)
    with pytest.raises(ValidationError):
        pow2_windows(64, 32)
