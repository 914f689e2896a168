"""Exit criteria for the package, one test per criterion.

Each test prints a single ``[criterion N] PASS|FAIL`` line with the measured
values. Run with ``pytest tests/test_acceptance.py -v -s``.
"""

import time
import tracemalloc

import numpy as np
import pytest

from oracles import ls_decompose, ls_metrics, rel_l2
from tfsep import cli
from tfsep.bss_eval import EvalConfig, decompose, evaluate, evaluate_pair
from tfsep.mask import apply, complement, ideal_binary_mask, separate_pair
from tfsep.signal_io import AudioSignal, mix, write_wav
from tfsep.stft import StftParams, analyze, synthesize
from tfsep.sweep import SweepConfig, optimal_window, run_sweep
from tfsep.synth import tonal_noise_pair, white_noise

RATE = 44100


@pytest.fixture
def verdict(capsys):
    def report(number, ok, detail):
        with capsys.disabled():
            print(f"\n[criterion {number}] {'PASS' if ok else 'FAIL'}: {detail}")
        assert ok, detail
    return report


def test_c1_stft_round_trip(verdict):
    x = white_noise(1.0, RATE, 0.5, seed=1)
    start = time.perf_counter()
    configs = [(2**k, max(1, 2**k // 4)) for k in range(1, 15)] + [(256, 1), (4096, 1)]
    worst = 0.0
    for n, hop in configs:
        y = synthesize(analyze(x, StftParams(n, hop)))
        worst = max(worst, rel_l2(y.samples, x.samples))
    elapsed = time.perf_counter() - start
    verdict(1, worst <= 1e-9 and elapsed <= 300,
            f"{len(configs)} configs, worst relative L2 {worst:.2e} (<= 1e-9), "
            f"{elapsed:.1f}s (<= 300s)")


def test_c2_mixture_partition(verdict):
    worst = 0.0
    for seed in range(10):
        a = white_noise(1.0, RATE, 0.5, seed=2 * seed + 100)
        b = white_noise(1.0, RATE, 0.5, seed=2 * seed + 101)
        for n in (256, 1024, 4096):
            p = StftParams(n, n // 4)
            res = separate_pair(a, b, p)
            ref = synthesize(analyze(mix(a, b), p)).samples
            worst = max(worst, rel_l2(res.estimate_a.samples + res.estimate_b.samples, ref))
    verdict(2, worst <= 1e-9, f"30 separations, worst relative L2 {worst:.2e} (<= 1e-9)")


def test_c3_mask_properties(verdict):
    a = white_noise(0.5, RATE, 0.5, seed=31)
    b = white_noise(0.5, RATE, 0.5, seed=32)
    p = StftParams(1024, 256)
    spec_a, spec_b, spec_mix = analyze(a, p), analyze(b, p), analyze(mix(a, b), p)
    m = ideal_binary_mask(spec_a, spec_b)
    involution = complement(complement(m)) == m
    partition = np.array_equal(apply(m, spec_mix).data + apply(complement(m), spec_mix).data,
                               spec_mix.data)
    tie = separate_pair(a, a, p)
    tie_ok = not np.any(tie.estimate_a.samples) and not ideal_binary_mask(spec_a, spec_a).cells.any()
    power_ok = ideal_binary_mask(spec_a, spec_b, compare="power") == m
    ok = involution and partition and tie_ok and power_ok
    verdict(3, ok, f"involution={involution} partition={partition} tie={tie_ok} "
                   f"magnitude/power={power_ok} (all cell-exact)")


def test_c4_bss_eval_oracle(verdict):
    rng = np.random.default_rng(4)
    worst_comp, worst_db = 0.0, 0.0
    for L in (1, 2, 8):
        cfg = EvalConfig(filter_length=L, check_invariants=True)
        for _ in range(20):
            srcs = list(rng.standard_normal((2, 512)))
            target = int(rng.integers(2))
            est = (srcs[target] + 0.4 * np.roll(srcs[1 - target], int(rng.integers(4)))
                   + 0.2 * rng.standard_normal(512))
            dec = decompose(est, srcs, target, cfg)
            for got, ref in zip((dec.s_target, dec.e_interf, dec.e_artif),
                                ls_decompose(est, srcs, target, L)):
                worst_comp = max(worst_comp, rel_l2(got, ref))
            m = evaluate(est, srcs, target, cfg)
            ref_db = ls_metrics(est, srcs, target, L)
            worst_db = max(worst_db, *(abs(v - r) for v, r in
                                       zip((m.sdr_db, m.sir_db, m.sar_db), ref_db)))
    verdict(4, worst_comp <= 1e-8 and worst_db <= 1e-6,
            f"60 trials, worst component rel L2 {worst_comp:.2e} (<= 1e-8), "
            f"worst metric diff {worst_db:.2e} dB (<= 1e-6)")


def test_c5_analytic_metrics(verdict):
    rng = np.random.default_rng(5)
    s1 = rng.standard_normal(10000)
    s2 = rng.standard_normal(10000)
    s2 -= (s2 @ s1) / (s1 @ s1) * s1
    s2 *= np.linalg.norm(s1) / np.linalg.norm(s2)
    m = evaluate(s1 + 0.1 * s2, [s1, s2], 0, EvalConfig(filter_length=1, check_invariants=True))
    ok = (abs(m.sir_db - 20) <= 0.01 and abs(m.sdr_db - 20) <= 0.01
          and m.sar_capped and m.sar_db == 300.0)
    verdict(5, ok, f"SIR {m.sir_db:.4f} dB, SDR {m.sdr_db:.4f} dB (20 +/- 0.01), "
                   f"SAR {m.sar_db} capped={m.sar_capped}")


def test_c6_disjoint_support(verdict):
    n = 4096
    t = np.arange(RATE)
    a = AudioSignal(0.5 * np.sin(2 * np.pi * 10 * t / n), RATE)
    b = AudioSignal(0.5 * np.sin(2 * np.pi * 20 * t / n), RATE)
    res = separate_pair(a, b, StftParams(n, n // 4))
    ma, mb = evaluate_pair(res.estimate_a, res.estimate_b, a, b, EvalConfig(filter_length=1))
    srcs = [a.samples, b.samples]
    oracle_a = ls_metrics(res.estimate_a.samples, srcs, 0, 1)[1]
    oracle_b = ls_metrics(res.estimate_b.samples, srcs, 1, 1)[1]
    agree = abs(ma.sir_db - oracle_a) <= 1e-6 and abs(mb.sir_db - oracle_b) <= 1e-6
    ok = ma.sir_db >= 40 and mb.sir_db >= 40 and agree
    verdict(6, ok, f"SIR a {ma.sir_db:.2f} dB, b {mb.sir_db:.2f} dB (>= 40), "
                   f"oracle agreement={agree}")


def test_c7_tonal_vs_noise_trend(verdict):
    tone, drum = tonal_noise_pair()
    windows = tuple(2**k for k in range(6, 14))
    start = time.perf_counter()
    report = run_sweep(tone, drum, SweepConfig("quarter", windows, labels=("tone", "drum")))
    elapsed = time.perf_counter() - start
    sdr = {r.window_size: r.metrics_a.sdr_db for r in report.rows}
    gain = sdr[2**13] - sdr[2**6]
    best_tone = windows.index(optimal_window(report, "a", "sdr"))
    best_drum = windows.index(optimal_window(report, "b", "sdr"))
    ok = gain >= 5 and best_tone >= best_drum and elapsed <= 600
    verdict(7, ok, f"tone SDR(8192) - SDR(64) = {gain:.2f} dB (>= 5); SDR-optimal index "
                   f"tone {best_tone} >= drum {best_drum}; {elapsed:.1f}s (<= 600s)")


def test_c8_hop_one_at_16384(tmp_path, capsys, verdict):
    tone, drum = tonal_noise_pair(duration=4.0)
    src_a, src_b = tmp_path / "tone.wav", tmp_path / "drum.wav"
    write_wav(src_a, tone, "32f")
    write_wav(src_b, drum, "32f")
    csv_path = tmp_path / "hop1.csv"
    tracemalloc.start()
    start = time.perf_counter()
    try:
        code = cli.main(["sweep", "--source-a", str(src_a), "--source-b", str(src_b),
                         "--windows", "16384", "--hop-policy", "one", "--csv", str(csv_path)])
        peak = tracemalloc.get_traced_memory()[1]
    finally:
        tracemalloc.stop()
    elapsed = time.perf_counter() - start
    capsys.readouterr()
    hops = {ln.split(",")[1] for ln in csv_path.read_text().splitlines()[1:]} if code == 0 else set()
    ok = code == 0 and hops == {"1"} and peak <= 256 * 2**20 and elapsed <= 1800
    verdict(8, ok, f"exit {code}, hop recorded {sorted(hops)}, peak traced memory "
                   f"{peak / 2**20:.1f} MiB (<= 256), {elapsed:.0f}s (<= 1800s)")


def test_c9_thread_determinism(tmp_path, capsys, verdict):
    tone, drum = tonal_noise_pair(duration=1.0)
    src_a, src_b = tmp_path / "tone.wav", tmp_path / "drum.wav"
    write_wav(src_a, tone, "32f")
    write_wav(src_b, drum, "32f")
    outputs = []
    for threads in ("1", "8"):
        csv_path, json_path = tmp_path / f"t{threads}.csv", tmp_path / f"t{threads}.json"
        code = cli.main(["--threads", threads, "sweep", "--source-a", str(src_a),
                         "--source-b", str(src_b), "--windows", "pow2:2:16384",
                         "--hop-policy", "quarter", "--csv", str(csv_path),
                         "--json", str(json_path)])
        assert code == 0
        outputs.append((csv_path.read_bytes(), json_path.read_bytes()))
    capsys.readouterr()
    same_csv = outputs[0][0] == outputs[1][0]
    same_json = outputs[0][1] == outputs[1][1]
    verdict(9, same_csv and same_json,
            f"CSV byte-identical={same_csv}, JSON byte-identical={same_json} "
            f"(--threads 1 vs 8, 14 windows)")
