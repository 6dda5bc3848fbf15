"""Plain-text renderings of run and sweep reports."""

from __future__ import annotations

from .circuit import polar_deg


def _c(z) -> str:
    if z is None:
        return "-"
    mag, ang = polar_deg(z)
    return f"{mag:9.2f}/{ang:7.2f}"


def _f(x, fmt="8.2f") -> str:
    return "-" if x is None else format(x, fmt)


def format_run(r) -> str:
    lines = [
        f"scenario {r.scenario}  rate {r.rate:g} Hz  strategy {r.strategy}  snr {r.snr_db} dB",
        f"detected {r.n_detected}/{len(r.faults)}  false alarms {len(r.false_alarms)}  events {r.n_events}",
        f"relay pickup {r.oc['pickup']:.1f} A  CT {r.oc['ct']}  tap {r.oc['tap']:.3f} A  "
        f"max M {r.oc['max_M']:.3f}  tripped {r.oc['tripped']}",
    ]
    if r.spectrum is not None:
        s = r.spectrum
        lines.append(f"fault current rms {s.rms:.2f} A  dc {s.dc:.2f}  h2 {s.h2:.2f}  h3 {s.h3:.2f}")
    lines.append(f"healthy eigen mean {_c(r.healthy_mean)}  std {_f(r.healthy_std)}")
    lines.append("")
    lines.append(" hour    start  outcome   latency   pre |lam|/ang   fault |lam|/ang   excursion  I_sec")
    for f in r.faults:
        lines.append(
            f"{f.hour:5d} {f.start:8.2f}  {f.outcome:8s} {_f(f.latency, '8.3f')}  "
            f"{_c(f.pre_mean)} {_c(f.fault_mean)}  {_f(f.excursion_sigma, '9.1f')}  {f.relay_secondary:5.2f}"
        )
    if r.false_alarms:
        lines.append("")
        lines.append("false alarms at " + ", ".join(f"{t:.2f}" for t in r.false_alarms))
    return "\n".join(lines) + "\n"


def format_sweep(s) -> str:
    base = min(s.reports)
    lines = [f"rate sweep {s.scenario}", " rate  detected  false  raw|lam| pre  ratio"]
    for rate in sorted(s.reports):
        r = s.reports[rate]
        lines.append(f"{rate:5d}  {r.n_detected:3d}/{len(r.faults):<3d}  {len(r.false_alarms):5d}  "
                     f"{r.raw_discrete.get('pre_mean_mag', float('nan')):12.2f}  {s.ratio(rate, base):5.2f}")
    return "\n".join(lines) + "\n"
