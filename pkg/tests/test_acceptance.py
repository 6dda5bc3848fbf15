"""Acceptance criteria, one test each, with a PASS/FAIL line per criterion."""

import filecmp
import time
from dataclasses import replace

import numpy as np
import pytest

from hifdetect.calibrate import calibrate_to_target, fault_spectrum, steady_fault_run
from hifdetect.circuit import LineParams, StateMatrix2, eigenvalues_closed_form
from hifdetect.hif import HifParams, fault_branch_voltage, initial_state, sgn_arc, sgp
from hifdetect.relay import derive_settings
from hifdetect.scenario import load_scenario, rate_sweep, run

FEEDERS = ("671", "675", "634")
TARGET_RMS = {"671": 14.0, "675": 13.0, "634": 17.0}
RELAY_TABLE = {  # pickup, CT, tap, relay current
    "671": (238.0, "250:5", 4.7, 4.42),
    "675": (112.7, "150:5", 3.75, 3.7),
    "634": (218.5, "250:5", 4.37, 4.14),
}
# arc shape before calibration; only the resistance scale is fitted
UNCALIBRATED = HifParams((95.0, 105.0), (114.0, 126.0), 800.0, 1100.0, tau=2e-3, sigma_step=1.0, seed=7)


@pytest.fixture
def verdict(capsys):
    def report(n, ok, detail):
        with capsys.disabled():
            print(f"\ncriterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
        return ok
    return report


@pytest.fixture(scope="module")
def headline():
    out = {}
    t0 = time.perf_counter()
    for name in FEEDERS:
        out[name] = run(load_scenario(name))
    out["elapsed"] = time.perf_counter() - t0
    return out


def test_criterion_1_closed_form_eigenvalues(verdict):
    rng = np.random.default_rng(2024)
    draws = []
    for _ in range(1000):
        a = rng.uniform(-1e3, 1e3, (2, 2))
        if rng.random() < 0.5:
            # line-like matrices as well as arbitrary ones
            r, l, c = rng.uniform(0, 2), 10 ** rng.uniform(-4, -1), 10 ** rng.uniform(-7, -4)
            a = np.array([[-r / l, -1 / l], [1 / c, 0.0]])
        draws.append(a)
    t0 = time.perf_counter()
    got = [eigenvalues_closed_form(StateMatrix2(a, np.zeros(2))).as_array() for a in draws]
    elapsed = time.perf_counter() - t0
    worst = 0.0
    for a, g in zip(draws, got):
        ref = np.linalg.eigvals(a)
        ref = ref[np.lexsort((-ref.real, -ref.imag))]
        worst = max(worst, float(np.max(np.abs(g - ref) / np.abs(ref))))
    ok = worst < 1e-9 and elapsed < 1.0
    verdict(1, ok, f"worst relative error {worst:.2e}, {elapsed * 1e3:.1f} ms for 1000 draws")
    assert ok


def test_criterion_2_sign_functions_and_linear_reduction(verdict):
    table_ok = [(sgp(x), sgn_arc(x)) for x in (1.0, 0.0, -1.0)] == [(1, 0), (0, -1), (0, -1)]
    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(1000):
        w, i = rng.uniform(1e-2, 1e4), rng.uniform(-1e3, 1e3)
        params = HifParams((w, w), (w, w), 0.0, 0.0, sigma_step=0.0)
        worst = max(worst, abs(fault_branch_voltage(i, initial_state(params), params) - w * i))
    ok = table_ok and worst == 0.0
    verdict(2, ok, f"truth tables {'hold' if table_ok else 'broken'}, linear reduction max error {worst:g}")
    assert ok


def test_criterion_3_calibration(verdict):
    lines, ok = [], True
    for name in FEEDERS:
        s = load_scenario(name)
        t0 = time.perf_counter()
        cal = calibrate_to_target(UNCALIBRATED, TARGET_RMS[name], s.line)
        wf, mask = steady_fault_run(cal, s.line)
        elapsed = time.perf_counter() - t0
        spec = fault_spectrum(wf.i_fault[mask], wf.f_sim, s.line.f_nominal)
        good = (abs(spec.rms / TARGET_RMS[name] - 1) <= 0.15 and spec.dc > 0 and spec.h2 > 0 and spec.h3 > 0
                and elapsed < 120)
        ok &= good
        lines.append(f"{name}: {spec.rms:.2f}/{TARGET_RMS[name]:.0f} A dc {spec.dc:.2f} h2 {spec.h2:.2f} "
                     f"h3 {spec.h3:.2f} in {elapsed:.2f} s")
    verdict(3, ok, "; ".join(lines))
    assert ok


def test_criterion_4_overcurrent_relay(verdict, headline):
    lines, ok = [], True
    for name in FEEDERS:
        pickup, ct, tap, i_relay = RELAY_TABLE[name]
        s = derive_settings(load_scenario(name).line, 0.15)
        r = headline[name]
        measured = max(f.relay_secondary for f in r.faults)
        good = (abs(s.pickup - pickup) <= 0.1 and s.ct_label == ct and abs(s.tap - tap) <= 0.1
                and abs(measured / i_relay - 1) <= 0.05 and r.oc["max_M"] < 1.0)
        ok &= good
        lines.append(f"{name}: pickup {s.pickup:.1f} CT {s.ct_label} tap {s.tap:.2f} "
                     f"I_relay {measured:.2f}/{i_relay} max M {r.oc['max_M']:.3f}")
    verdict(4, ok, "; ".join(lines))
    assert ok


def test_criterion_5_detection_headline(verdict, headline):
    ok = headline["elapsed"] < 600
    lines = []
    for name in FEEDERS:
        r = headline[name]
        ok &= r.n_detected == 24 and len(r.faults) == 24 and not r.false_alarms
        ok &= r.rate == 30 and r.snr_db == 60
        lines.append(f"{name}: {r.n_detected}/{len(r.faults)} detected, {len(r.false_alarms)} false alarms")
    verdict(5, ok, "; ".join(lines) + f"; {headline['elapsed']:.1f} s total")
    assert ok


def test_criterion_6_reporting_rate_study(verdict):
    sw = rate_sweep(load_scenario("675-rates"), (30, 60, 120))
    detected = all(r.all_detected and not r.false_alarms and len(r.faults) == 8 for r in sw.reports.values())
    r60, r120 = sw.ratio(60, 30), sw.ratio(120, 30)
    ok = detected and 1.8 <= r60 <= 2.2 and 3.6 <= r120 <= 4.4
    counts = ", ".join(f"{k} Hz {v.n_detected}/8" for k, v in sorted(sw.reports.items()))
    verdict(6, ok, f"{counts}; raw-discrete ratio 60/30 {r60:.2f}, 120/30 {r120:.2f}")
    assert ok


def test_criterion_7_excursion_size(verdict, headline):
    worst = min(f.excursion_sigma for name in FEEDERS for f in headline[name].faults if f.detected)
    ok = worst > 5.0
    verdict(7, ok, f"smallest in-fault shift {worst:.1f} pre-fault std")
    assert ok


def _headline_passes(snr):
    for name in FEEDERS:
        r = run(replace(load_scenario(name), snr_db=snr))
        if not (r.all_detected and not r.false_alarms):
            return False, f"{name} {r.n_detected}/24 detected, {len(r.false_alarms)} false alarms"
    return True, "all presets clean"


def test_criterion_8_noise_robustness(verdict):
    first_fail = None
    for snr in range(60, 39, -1):
        passed, why = _headline_passes(float(snr))
        if not passed:
            first_fail = (snr, why)
            break
    ok_40, why_40 = _headline_passes(40.0)
    note = "no failure down to 40 dB" if first_fail is None else f"first fails at {first_fail[0]} dB ({first_fail[1]})"
    verdict(8, ok_40, f"at 40 dB: {why_40}; sweep in 1 dB steps: {note}")
    assert ok_40


def test_criterion_9_determinism(verdict, tmp_path):
    s = load_scenario("671")
    run(s, tmp_path / "a")
    run(s, tmp_path / "b")
    names = ["phasors.csv", "eigen.csv", "events.csv", "oc.csv", "zones.txt", "report.json"]
    short = replace(s, hours=1, faults=s.faults[:1])
    run(short, tmp_path / "wa", write_waveform=True)
    run(short, tmp_path / "wb", write_waveform=True)
    same = [filecmp.cmp(tmp_path / "a" / n, tmp_path / "b" / n, shallow=False) for n in names]
    same.append(filecmp.cmp(tmp_path / "wa" / "waveform.csv", tmp_path / "wb" / "waveform.csv", shallow=False))
    ok = all(same)
    verdict(9, ok, f"{sum(same)}/{len(same)} output files byte-identical across equal-seed runs")
    assert ok
