"""Fit HIF resistance scale so a sustained fault draws a target RMS current."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .circuit import LineParams
from .errors import CalibrationError
from .hif import HifParams
from .waveform import DEFAULT_F_SIM, FaultWindow, LoadProfile, simulate

ACCEPT_BAND = 0.15


@dataclass(frozen=True)
class FaultSpectrum:
    rms: float
    dc: float
    h2: float
    h3: float
    fundamental: float


def fault_spectrum(i_fault: np.ndarray, f_sim: float, f_nominal: float = 60.0) -> FaultSpectrum:
    """RMS, |DC| and RMS harmonic magnitudes over a whole number of cycles."""
    n_cycle = int(round(f_sim / f_nominal))
    n = (len(i_fault) // n_cycle) * n_cycle
    if n == 0:
        raise ValueError("need at least one full cycle")
    x = np.asarray(i_fault[:n], dtype=float)
    spec = np.fft.rfft(x) / n
    k = n // n_cycle
    harm = lambda h: float(2.0 * abs(spec[h * k]) / math.sqrt(2.0))
    return FaultSpectrum(float(np.sqrt(np.mean(x * x))), float(abs(spec[0].real)), harm(2), harm(3), harm(1))


def steady_fault_run(params: HifParams, p: LineParams, *, load_multiplier: float = 1.0,
                     settle: float = 0.1, measure: float = 1.0, f_sim: float = DEFAULT_F_SIM,
                     seed: int = 0, g_base: float | None = None):
    """Simulate a sustained fault at constant load; return (waveform, measured mask)."""
    onset = 0.1
    duration = onset + settle + measure
    wf = simulate(p, LoadProfile.constant(load_multiplier), params, [FaultWindow(onset, settle + measure)],
                  f_sim=f_sim, duration=duration, seed=seed, g_base=g_base)
    n_meas = int(round(measure * f_sim))
    mask = np.zeros(len(wf), dtype=bool)
    mask[len(wf) - n_meas:] = True
    return wf, mask


def calibrate_to_target(params: HifParams, target_rms: float, scenario: LineParams, *,
                        multiplier_range: tuple[float, float] = (0.02, 50.0), rel_tol: float = 0.005,
                        max_iter: int = 60, **run_kwargs) -> HifParams:
    """Bisect a common multiplier on the resistance ranges to hit ``target_rms``.

    Fault current falls as resistance grows, so the search is a plain
    bisection in log-multiplier between the two range ends.
    """
    if not target_rms > 0:
        raise CalibrationError("target_rms must be > 0")

    def measure(m):
        wf, mask = steady_fault_run(params.scaled(m), scenario, **run_kwargs)
        return float(np.sqrt(np.mean(wf.i_fault[mask] ** 2)))

    lo, hi = multiplier_range
    r_lo, r_hi = measure(lo), measure(hi)
    if not (r_hi <= target_rms <= r_lo):
        raise CalibrationError(
            f"target {target_rms} A outside reachable range [{r_hi:.3g}, {r_lo:.3g}] A")
    best = (abs(r_lo - target_rms), lo)
    for _ in range(max_iter):
        mid = math.sqrt(lo * hi)
        r = measure(mid)
        best = min(best, (abs(r - target_rms), mid))
        if abs(r - target_rms) <= rel_tol * target_rms:
            break
        if r > target_rms:
            lo = mid
        else:
            hi = mid
    m = best[1]
    if best[0] > ACCEPT_BAND * target_rms:
        raise CalibrationError(f"best multiplier {m:.4g} misses target by {best[0]:.3g} A")
    return params.scaled(m)
