"""Command-line entry point: ``hifdetect {run,sweep,calibrate,plot-data}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .calibrate import calibrate_to_target, fault_spectrum, steady_fault_run
from .errors import HifDetectError
from .report import format_run, format_sweep
from .scenario import PRESETS, Scenario, load_scenario, rate_sweep, run, save_scenario

log = logging.getLogger("hifdetect")


def _apply_common(s: Scenario, args) -> Scenario:
    if getattr(args, "rate", None) is not None:
        s = replace(s, rate=args.rate)
    if getattr(args, "seed", None) is not None:
        s = replace(s, sim_seed=args.seed, pmu_seed=args.seed + 1)
    if getattr(args, "snr", None) is not None:
        s = replace(s, snr_db=None if args.snr <= 0 else args.snr)
    est = s.estimator
    if getattr(args, "strategy", None) is not None:
        est = replace(est, strategy=args.strategy)
    if getattr(args, "raw_discrete", False):
        est = replace(est, strategy="discrete-ls", raw_discrete=True)
    return replace(s, estimator=est)


def _add_common(p: argparse.ArgumentParser, rate: bool = True) -> None:
    p.add_argument("--scenario", default="671",
                   help=f"preset name ({', '.join(PRESETS)}) or path to a scenario YAML file")
    if rate:
        p.add_argument("--rate", type=int, choices=(30, 60, 120), help="PMU reporting rate in Hz")
    p.add_argument("--seed", type=int, help="simulation seed; the PMU noise uses seed + 1")
    p.add_argument("--snr", type=float, help="PMU SNR in dB (0 or negative disables noise)")
    p.add_argument("--strategy", choices=("impedance", "discrete-ls"))
    p.add_argument("--raw-discrete", action="store_true",
                   help="report rate * lambda_d from the discrete-ls fit instead of its logarithm")
    p.add_argument("--out", type=Path, help="output directory for CSV and report files")


def cmd_run(args) -> int:
    s = _apply_common(load_scenario(args.scenario), args)
    report = run(s, args.out, write_waveform=args.waveform)
    sys.stdout.write(format_run(report))
    if args.assert_ and not (report.all_detected and not report.false_alarms):
        log.error("assertion failed: %d/%d detected, %d false alarms",
                  report.n_detected, len(report.faults), len(report.false_alarms))
        return 2
    return 0


def cmd_sweep(args) -> int:
    s = _apply_common(load_scenario(args.scenario), args)
    if args.snr_values:
        rows = []
        for snr in args.snr_values:
            sub = args.out / f"snr_{snr:g}" if args.out else None
            r = run(replace(s, snr_db=snr), sub)
            rows.append((snr, r))
            print(f"snr {snr:6.1f} dB  detected {r.n_detected}/{len(r.faults)}  "
                  f"false alarms {len(r.false_alarms)}")
        failing = [snr for snr, r in rows if not (r.all_detected and not r.false_alarms)]
        if args.out:
            args.out.mkdir(parents=True, exist_ok=True)
            (args.out / "snr_sweep.json").write_text(json.dumps(
                {"scenario": s.name, "snr": [snr for snr, _ in rows],
                 "detected": [r.n_detected for _, r in rows],
                 "false_alarms": [len(r.false_alarms) for _, r in rows]}, indent=2) + "\n")
        if args.assert_ and failing:
            return 2
        return 0
    sweep = rate_sweep(s, args.rates, args.out)
    sys.stdout.write(format_sweep(sweep))
    if args.assert_ and not all(r.all_detected and not r.false_alarms for r in sweep.reports.values()):
        return 2
    return 0


def cmd_calibrate(args) -> int:
    s = load_scenario(args.scenario)
    target = args.target if args.target is not None else s.target_rms
    if target is None:
        raise HifDetectError("no target RMS given and the scenario does not define one")
    hif = calibrate_to_target(s.hif, target, s.line)
    wf, mask = steady_fault_run(hif, s.line)
    spec = fault_spectrum(wf.i_fault[mask], wf.f_sim, s.line.f_nominal)
    print(f"{s.name}: target {target:.2f} A  achieved {spec.rms:.3f} A  "
          f"dc {spec.dc:.3f}  h2 {spec.h2:.3f}  h3 {spec.h3:.3f}")
    print(f"r_p_bounds {hif.r_p_bounds}  r_n_bounds {hif.r_n_bounds}  sigma_step {hif.sigma_step:.6g}")
    if args.out:
        args.out.mkdir(parents=True, exist_ok=True)
        save_scenario(replace(s, hif=hif, target_rms=target), args.out / f"{s.name}.yaml")
    return 0


def cmd_plot_data(args) -> int:
    """Write every CSV of a run, including the point-on-wave waveform."""
    if args.out is None:
        raise HifDetectError("plot-data needs --out")
    s = _apply_common(load_scenario(args.scenario), args)
    if args.hours is not None:
        s = replace(s, hours=args.hours, faults=tuple(f for f in s.faults if f.hour - s.start_hour < args.hours))
    run(s, args.out, write_waveform=True)
    print(f"wrote {', '.join(sorted(p.name for p in args.out.iterdir()))} to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hifdetect", description="HIF detection from PMU line-eigenvalue estimates")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="simulate one scenario and score detections")
    _add_common(p)
    p.add_argument("--waveform", action="store_true", help="also write the point-on-wave CSV")
    p.add_argument("--assert", dest="assert_", action="store_true",
                   help="exit nonzero if any fault is missed or a false alarm occurs")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="reporting-rate sweep on one waveform, or an SNR sweep")
    _add_common(p, rate=False)
    p.add_argument("--rates", type=int, nargs="+", default=[30, 60, 120])
    p.add_argument("--snr-values", type=float, nargs="+", help="sweep SNR instead of rate")
    p.add_argument("--assert", dest="assert_", action="store_true")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("calibrate", help="fit HIF resistances to a target fault RMS current")
    p.add_argument("--scenario", default="671")
    p.add_argument("--target", type=float, help="target fault RMS in amperes")
    p.add_argument("--out", type=Path, help="directory for the calibrated scenario YAML")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("plot-data", help="write waveform, phasor, eigen, event and zone files")
    _add_common(p)
    p.add_argument("--hours", type=int, help="simulate only the first N compressed hours")
    p.set_defaults(func=cmd_plot_data)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except HifDetectError as exc:
        log.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
