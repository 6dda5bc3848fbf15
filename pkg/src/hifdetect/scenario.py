"""End-to-end experiment runner.

A scenario is a YAML document (schema in the README). :func:`run` streams the
simulation hour by hour through the PMU front end and the relay, then runs
the estimator and the zone detector over the phasor stream and scores every
scheduled fault.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import math
import time
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Any, Sequence

import numpy as np
import yaml

from .calibrate import FaultSpectrum, fault_spectrum
from .circuit import LineParams, base_load_conductance, polar_deg
from .errors import ConfigurationError
from .estimator import EigenSample, EstimatorConfig, estimate_trajectory, write_eigen_csv
from .hif import HifParams
from .kernels import BACKEND
from .pmu import PhasorExtractor, PhasorStream, write_phasor_csv
from .relay import OcRelay, OcSettings, derive_settings, write_oc_csv
from .waveform import DEFAULT_F_SIM, FaultWindow, LoadProfile, Waveform, simulate_segment
from .zones import DetectorConfig, ZoneDetector, write_event_csv, write_zone_snapshots

log = logging.getLogger(__name__)

PRESETS = ("671", "675", "634", "675-rates")
PRE_FAULT_SECONDS = 3.0


@dataclass(frozen=True)
class ScheduledFault:
    hour: int
    offset: float = 6.0
    duration: float = 2.0


@dataclass(frozen=True)
class Scenario:
    name: str
    line: LineParams
    hif: HifParams
    load: LoadProfile = LoadProfile()
    faults: tuple[ScheduledFault, ...] = ()
    hours: int = 24
    start_hour: int = 0
    rate: int = 30
    snr_db: float | None = 60.0
    estimator: EstimatorConfig = EstimatorConfig()
    detector: DetectorConfig = DetectorConfig()
    relay: OcSettings | None = None
    relay_margin: float = 0.15
    sim_seed: int = 0
    pmu_seed: int = 1
    f_sim: float = DEFAULT_F_SIM
    target_rms: float | None = None

    @property
    def hour_seconds(self) -> float:
        return self.load.hour_seconds

    @property
    def duration(self) -> float:
        return self.hours * self.hour_seconds

    def day_load(self) -> LoadProfile:
        """Load profile re-indexed so simulated t=0 is ``start_hour``."""
        m = self.load.multipliers
        k = self.start_hour % 24
        return replace(self.load, multipliers=m[k:] + m[:k])

    def fault_windows(self) -> list[FaultWindow]:
        out = []
        for f in self.faults:
            rel = f.hour - self.start_hour
            if not 0 <= rel < self.hours:
                raise ConfigurationError(f"fault hour {f.hour} outside the simulated day")
            if f.offset + f.duration > self.hour_seconds:
                raise ConfigurationError(f"fault at hour {f.hour} overruns its compressed hour")
            out.append(FaultWindow(rel * self.hour_seconds + f.offset, f.duration))
        return sorted(out, key=lambda w: w.start)

    def oc_settings(self) -> OcSettings:
        return self.relay if self.relay is not None else derive_settings(self.line, self.relay_margin)


# -- scenario files ------------------------------------------------------------

def _fault_list(sched: dict) -> tuple[ScheduledFault, ...]:
    default_offset = float(sched.get("fault_offset", 6.0))
    default_dur = float(sched.get("fault_duration", 2.0))
    faults = []
    for h in sched.get("fault_hours", []) or []:
        faults.append(ScheduledFault(int(h), default_offset, default_dur))
    for entry in sched.get("faults", []) or []:
        faults.append(ScheduledFault(int(entry["hour"]), float(entry.get("offset", default_offset)),
                                     float(entry.get("duration", default_dur))))
    return tuple(sorted(faults, key=lambda f: f.hour))


def scenario_from_dict(doc: dict[str, Any]) -> Scenario:
    try:
        return _parse(doc)
    except KeyError as exc:
        raise ConfigurationError(f"scenario is missing field {exc}") from None
    except (TypeError, ValueError, AttributeError) as exc:
        raise ConfigurationError(f"bad scenario field: {exc}") from None


def _parse(doc: dict[str, Any]) -> Scenario:
    # YAML 1.1 reads exponent literals without a dot as strings
    line = LineParams(**{k: float(v) for k, v in doc["line"].items()})
    h = dict(doc["hif"])
    for key in ("r_p_bounds", "r_n_bounds"):
        h[key] = tuple(float(x) for x in h[key])
    for key in ("v_p", "v_n", "tau", "sigma_step"):
        if key in h:
            h[key] = float(h[key])
    hif = HifParams(**h)
    load_doc = dict(doc.get("load", {}))
    if "multipliers" in load_doc:
        load_doc["multipliers"] = tuple(load_doc["multipliers"])
    load = LoadProfile(**load_doc)
    sched = doc.get("schedule", {}) or {}
    pmu = doc.get("pmu", {}) or {}
    seeds = doc.get("seeds", {}) or {}
    relay_doc = doc.get("relay", {}) or {}
    relay = None
    if "pickup" in relay_doc:
        relay = OcSettings(float(relay_doc["pickup"]), float(relay_doc["ct_primary"]),
                           float(relay_doc.get("ct_secondary", 5)), float(relay_doc["tap"]),
                           float(relay_doc.get("margin", 0.15)))
    return Scenario(
        name=str(doc.get("name", "custom")),
        line=line,
        hif=hif,
        load=load,
        faults=_fault_list(sched),
        hours=int(sched.get("hours", 24)),
        start_hour=int(sched.get("start_hour", 0)),
        rate=int(pmu.get("rate", 30)),
        snr_db=pmu.get("snr_db", 60.0),
        estimator=EstimatorConfig(**(doc.get("estimator", {}) or {})),
        detector=DetectorConfig(**(doc.get("detector", {}) or {})),
        relay=relay,
        relay_margin=float(relay_doc.get("margin", 0.15)),
        sim_seed=int(seeds.get("sim", 0)),
        pmu_seed=int(seeds.get("pmu", 1)),
        f_sim=float((doc.get("sim", {}) or {}).get("f_sim", DEFAULT_F_SIM)),
        target_rms=(doc.get("calibration", {}) or {}).get("target_rms"),
    )


def scenario_to_dict(s: Scenario) -> dict[str, Any]:
    doc = {
        "name": s.name,
        "line": dataclasses.asdict(s.line),
        "hif": {**dataclasses.asdict(s.hif), "r_p_bounds": list(s.hif.r_p_bounds),
                "r_n_bounds": list(s.hif.r_n_bounds)},
        "load": {"multipliers": list(s.load.multipliers), "interpolation": s.load.interpolation,
                 "hour_seconds": s.load.hour_seconds},
        "schedule": {"hours": s.hours, "start_hour": s.start_hour,
                     "faults": [dataclasses.asdict(f) for f in s.faults]},
        "pmu": {"rate": s.rate, "snr_db": s.snr_db},
        "estimator": dataclasses.asdict(s.estimator),
        "detector": dataclasses.asdict(s.detector),
        "relay": ({"margin": s.relay_margin} if s.relay is None else dataclasses.asdict(s.relay)),
        "seeds": {"sim": s.sim_seed, "pmu": s.pmu_seed},
        "sim": {"f_sim": s.f_sim},
    }
    if s.target_rms is not None:
        doc["calibration"] = {"target_rms": s.target_rms}
    return doc


def load_scenario(path_or_preset: str | Path) -> Scenario:
    """Load a YAML scenario file, or a bundled preset by name."""
    key = str(path_or_preset)
    if key in PRESETS:
        text = resources.files("hifdetect").joinpath("presets", f"{key}.yaml").read_text()
    else:
        path = Path(path_or_preset)
        if not path.is_file():
            raise ConfigurationError(f"no preset or scenario file named {key!r}")
        text = path.read_text()
    doc = yaml.safe_load(text)
    if not isinstance(doc, dict):
        raise ConfigurationError(f"{key}: scenario must be a YAML mapping")
    return scenario_from_dict(doc)


def save_scenario(s: Scenario, path) -> None:
    Path(path).write_text(yaml.safe_dump(scenario_to_dict(s), sort_keys=False))


# -- reports ---------------------------------------------------------------------

@dataclass
class FaultOutcome:
    hour: int
    start: float
    end: float
    detected: bool
    alarm_t: float | None
    latency: float | None
    load_multiplier: float
    pre_mean: complex | None
    pre_std: float | None
    fault_mean: complex | None
    fault_std: float | None
    excursion_sigma: float | None
    relay_secondary: float
    spectrum: FaultSpectrum

    @property
    def outcome(self) -> str:
        return "detected" if self.detected else "missed"


@dataclass
class RunReport:
    scenario: str
    rate: float
    strategy: str
    snr_db: float | None
    faults: list[FaultOutcome]
    false_alarms: list[float]
    n_events: int
    oc: dict[str, Any]
    spectrum: FaultSpectrum | None
    healthy_mean: complex | None
    healthy_std: float | None
    raw_discrete: dict[str, float] = field(default_factory=dict)
    timing: dict[str, Any] = field(default_factory=dict, compare=False)

    @property
    def n_detected(self) -> int:
        return sum(f.detected for f in self.faults)

    @property
    def clean_run(self) -> bool:
        return self.n_events == 0

    @property
    def all_detected(self) -> bool:
        return self.n_detected == len(self.faults)

    def to_dict(self) -> dict[str, Any]:
        def cplx(z):
            if z is None:
                return None
            mag, ang = polar_deg(z)
            return {"re": _r(z.real), "im": _r(z.imag), "mag": _r(mag), "angle_deg": _r(ang)}

        def spec(s):
            return None if s is None else {k: _r(v) for k, v in dataclasses.asdict(s).items()}

        return {
            "scenario": self.scenario,
            "rate": self.rate,
            "strategy": self.strategy,
            "snr_db": self.snr_db,
            "detected": self.n_detected,
            "scheduled": len(self.faults),
            "false_alarms": [_r(t) for t in self.false_alarms],
            "events": self.n_events,
            "clean_run": self.clean_run,
            "oc": {k: (_r(v) if isinstance(v, float) else v) for k, v in self.oc.items()},
            "fault_spectrum": spec(self.spectrum),
            "healthy_mean": cplx(self.healthy_mean),
            "healthy_std": _r(self.healthy_std),
            "raw_discrete": {k: _r(v) for k, v in self.raw_discrete.items()},
            "faults": [
                {
                    "hour": f.hour, "start": _r(f.start), "end": _r(f.end), "outcome": f.outcome,
                    "alarm_t": _r(f.alarm_t), "latency": _r(f.latency),
                    "load_multiplier": _r(f.load_multiplier),
                    "pre_mean": cplx(f.pre_mean), "pre_std": _r(f.pre_std),
                    "fault_mean": cplx(f.fault_mean), "fault_std": _r(f.fault_std),
                    "excursion_sigma": _r(f.excursion_sigma),
                    "relay_secondary": _r(f.relay_secondary), "spectrum": spec(f.spectrum),
                }
                for f in self.faults
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def _r(x):
    """Round for stable, readable report text."""
    if x is None:
        return None
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return float(f"{x:.10g}")


# -- pipeline --------------------------------------------------------------------

@dataclass
class _Measured:
    """Everything the waveform pass produces, shared by every reporting rate."""

    streams: dict[int, PhasorStream]
    relay: OcRelay
    fault_secondary: list[float]
    spectra: list[FaultSpectrum]
    waveform: Waveform | None


def _measure(s: Scenario, rates: Sequence[int], keep_waveform: bool = False) -> _Measured:
    windows = s.fault_windows()
    p = s.line
    g_base = base_load_conductance(p)
    extractors = {r: PhasorExtractor(s.f_sim, r, p.f_nominal, s.snr_db, s.pmu_seed) for r in rates}
    parts = {r: [] for r in rates}
    n_cycle = int(round(s.f_sim / p.f_nominal))
    relay = OcRelay(s.oc_settings(), n_cycle)
    # per-fault accumulators for spectrum and relay current
    acc_f = [[] for _ in windows]
    acc_s = [[] for _ in windows]
    kept = []
    for wf in simulate_segment(p, s.day_load(), s.hif if windows else None, windows, s.f_sim,
                               s.duration, s.sim_seed, chunk_seconds=s.hour_seconds, g_base=g_base):
        for r, ext in extractors.items():
            parts[r].append(ext.feed(wf))
        relay.feed(wf.i_send)
        for j, w in enumerate(windows):
            sel = (wf.t >= w.start) & (wf.t < w.end)
            if sel.any():
                acc_f[j].append(wf.i_fault[sel])
                acc_s[j].append(wf.i_send[sel])
        if keep_waveform:
            kept.append(wf)
    ct = relay.settings.ct_turns
    spectra, secondary = [], []
    for f_parts, s_parts in zip(acc_f, acc_s):
        i_f = np.concatenate(f_parts)
        i_s = np.concatenate(s_parts)
        spectra.append(fault_spectrum(i_f, s.f_sim, p.f_nominal))
        secondary.append(float(np.sqrt(np.mean(i_s * i_s))) / ct)
    streams = {r: PhasorStream.concat(parts[r], float(r)) for r in rates}
    return _Measured(streams, relay, secondary, spectra, Waveform.concat(kept) if kept else None)


def _stats(lams: np.ndarray):
    if len(lams) < 2:
        return None, None
    mu = complex(lams.mean())
    return mu, float(np.sqrt(np.mean(np.abs(lams - mu) ** 2)))


def detection_grace(s: Scenario, rate: float) -> float:
    """Time after fault removal during which alarms still belong to that fault."""
    return (s.estimator.window_len + s.detector.confirm_count) / rate + 1.0 / s.line.f_nominal


def _score(s: Scenario, rate: float, samples: list[EigenSample], events, measured: _Measured):
    windows = s.fault_windows()
    grace = detection_grace(s, rate)
    t = np.array([e.t for e in samples])
    lam = np.array([e.lam for e in samples])
    valid = np.array([not e.withheld for e in samples], dtype=bool)
    fill = s.estimator.window_len / rate + 1.0 / s.line.f_nominal
    alarms = [ev.t for ev in events if ev.kind == "ALARM"]
    claimed = set()
    load = s.day_load()
    outcomes = []
    for j, w in enumerate(windows):
        hits = [a for a in alarms if w.start <= a <= w.end + grace]
        claimed.update(hits)
        pre = lam[valid & (t < w.start) & (t >= w.start - PRE_FAULT_SECONDS)]
        flt = lam[valid & (t >= w.start + fill) & (t < w.end)]
        pm, ps = _stats(pre)
        fm, fs = _stats(flt)
        exc = abs(fm - pm) / ps if (pm is not None and fm is not None and ps) else None
        outcomes.append(FaultOutcome(
            hour=int(round(w.start // s.hour_seconds)) + s.start_hour,
            start=w.start, end=w.end, detected=bool(hits),
            alarm_t=hits[0] if hits else None, latency=(hits[0] - w.start) if hits else None,
            load_multiplier=float(load.at(w.start)),
            pre_mean=pm, pre_std=ps, fault_mean=fm, fault_std=fs, excursion_sigma=exc,
            relay_secondary=measured.fault_secondary[j], spectrum=measured.spectra[j],
        ))
    false_alarms = [a for a in alarms if a not in claimed]
    # healthy statistics: everything outside fault windows (plus grace)
    healthy = valid.copy()
    for w in windows:
        healthy &= ~((t >= w.start) & (t <= w.end + grace))
    hm, hs = _stats(lam[healthy])
    return outcomes, false_alarms, hm, hs


def _mean_spectrum(spectra: list[FaultSpectrum]) -> FaultSpectrum | None:
    if not spectra:
        return None
    return FaultSpectrum(*(float(np.mean([getattr(x, f.name) for x in spectra]))
                           for f in dataclasses.fields(FaultSpectrum)))


def _analyse(s: Scenario, rate: int, measured: _Measured, out_dir: Path | None,
             raw_discrete: bool = False) -> RunReport:
    stream = measured.streams[rate]
    samples = estimate_trajectory(stream, s.line, s.estimator)
    det = ZoneDetector(s.detector, line_id=s.name)
    events = det.run(samples)
    outcomes, false_alarms, hm, hs = _score(s, rate, samples, events, measured)
    oc = s.oc_settings()
    raw = {}
    if raw_discrete:
        raw = _raw_discrete_means(s, rate, stream)
    report = RunReport(
        scenario=s.name, rate=float(rate), strategy=s.estimator.strategy, snr_db=s.snr_db,
        faults=outcomes, false_alarms=false_alarms, n_events=len(events),
        oc={"pickup": oc.pickup, "ct": oc.ct_label, "tap": oc.tap, "max_M": measured.relay.max_m,
            "max_secondary": measured.relay.max_secondary, "tripped": measured.relay.tripped},
        spectrum=_mean_spectrum(measured.spectra), healthy_mean=hm, healthy_std=hs, raw_discrete=raw,
    )
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        write_phasor_csv(out_dir / "phasors.csv", stream)
        write_eigen_csv(out_dir / "eigen.csv", samples)
        write_event_csv(out_dir / "events.csv", events)
        write_zone_snapshots(out_dir / "zones.txt", det.snapshots)
        write_oc_csv(out_dir / "oc.csv", oc, measured.relay.max_m)
        (out_dir / "report.json").write_text(report.to_json())
        from .report import format_run
        (out_dir / "report.txt").write_text(format_run(report))
    return report


def _raw_discrete_means(s: Scenario, rate: int, stream: PhasorStream) -> dict[str, float]:
    cfg = replace(s.estimator, strategy="discrete-ls", raw_discrete=True,
                  window_len=max(s.estimator.window_len, 4))
    samples = estimate_trajectory(stream, s.line, cfg)
    windows = s.fault_windows()
    fill = cfg.window_len / rate + 1.0 / s.line.f_nominal
    pre, flt = [], []
    for e in samples:
        if e.withheld:
            continue
        in_fault = any(w.start + fill <= e.t < w.end for w in windows)
        near = any(w.start <= e.t <= w.end + fill for w in windows)
        if in_fault:
            flt.append(abs(e.lam))
        elif not near:
            pre.append(abs(e.lam))
    out = {"pre_mean_mag": float(np.mean(pre)) if pre else math.nan,
           "pre_std_mag": float(np.std(pre)) if pre else math.nan}
    if flt:
        out["fault_mean_mag"] = float(np.mean(flt))
        out["fault_std_mag"] = float(np.std(flt))
    return out


def run(s: Scenario, out_dir: str | Path | None = None, write_waveform: bool = False) -> RunReport:
    t0 = time.perf_counter()
    out = Path(out_dir) if out_dir is not None else None
    measured = _measure(s, [s.rate], keep_waveform=write_waveform)
    t1 = time.perf_counter()
    report = _analyse(s, s.rate, measured, out)
    report.timing = {"simulate_s": t1 - t0, "analyse_s": time.perf_counter() - t1, "backend": BACKEND}
    if out is not None:
        if write_waveform and measured.waveform is not None:
            from .waveform import write_waveform_csv
            write_waveform_csv(out / "waveform.csv", measured.waveform)
        (out / "timing.json").write_text(json.dumps(report.timing, indent=2) + "\n")
    log.info("%s @ %d Hz: %d/%d detected, %d false alarms", s.name, s.rate,
             report.n_detected, len(report.faults), len(report.false_alarms))
    return report


@dataclass
class SweepReport:
    scenario: str
    reports: dict[int, RunReport]

    def ratio(self, rate: int, base: int | None = None, key: str = "pre_mean_mag") -> float:
        base = min(self.reports) if base is None else base
        return self.reports[rate].raw_discrete[key] / self.reports[base].raw_discrete[key]

    def to_dict(self) -> dict[str, Any]:
        base = min(self.reports)
        return {
            "scenario": self.scenario,
            "rates": sorted(self.reports),
            "raw_discrete_ratio_pre": {str(r): _r(self.ratio(r, base)) for r in sorted(self.reports)},
            "raw_discrete_ratio_fault": {
                str(r): _r(self.ratio(r, base, "fault_mean_mag")) for r in sorted(self.reports)
                if "fault_mean_mag" in self.reports[r].raw_discrete
            },
            "runs": {str(r): rep.to_dict() for r, rep in sorted(self.reports.items())},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def rate_sweep(s: Scenario, rates: Sequence[int] = (30, 60, 120), out_dir: str | Path | None = None) -> SweepReport:
    rates = sorted(set(int(r) for r in rates))
    if not rates or not set(rates) <= {30, 60, 120}:
        raise ConfigurationError("rates must be a non-empty subset of {30, 60, 120}")
    out = Path(out_dir) if out_dir is not None else None
    measured = _measure(s, rates)
    reports = {}
    for r in rates:
        sub = out / f"rate_{r}" if out is not None else None
        reports[r] = _analyse(replace(s, rate=r), r, measured, sub, raw_discrete=True)
    sweep = SweepReport(s.name, reports)
    if out is not None:
        (out / "sweep.json").write_text(sweep.to_json())
        from .report import format_sweep
        (out / "sweep.txt").write_text(format_sweep(sweep))
    return sweep
