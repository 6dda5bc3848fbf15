"""Overcurrent relay baseline: pickup/CT/tap settings and multiple of pickup."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .circuit import LineParams
from .errors import InvalidParameterError

STANDARD_CT_PRIMARIES = (50, 100, 150, 200, 250, 300)
CT_SECONDARY = 5


@dataclass(frozen=True)
class OcSettings:
    pickup: float           # primary amperes
    ct_primary: float
    ct_secondary: float
    tap: float              # secondary amperes
    margin: float = 0.15

    @property
    def ct_turns(self) -> float:
        return self.ct_primary / self.ct_secondary

    @property
    def ct_label(self) -> str:
        return f"{self.ct_primary:g}:{self.ct_secondary:g}"


def derive_settings(p: LineParams, margin: float = 0.15) -> OcSettings:
    if not margin > 0:
        raise InvalidParameterError("margin must be > 0")
    pickup = p.i_nominal * (1.0 + margin)
    for primary in STANDARD_CT_PRIMARIES:
        if primary >= pickup:
            break
    else:
        raise InvalidParameterError(f"no standard CT covers pickup {pickup:.1f} A")
    turns = primary / CT_SECONDARY
    return OcSettings(pickup, float(primary), float(CT_SECONDARY), pickup / turns, margin)


def evaluate(i_relay_secondary: float, s: OcSettings) -> tuple[float, bool]:
    if i_relay_secondary < 0:
        raise InvalidParameterError("relay current must be >= 0")
    m = i_relay_secondary / s.tap
    return m, m > 1.0


def sliding_rms(x: np.ndarray, n: int) -> np.ndarray:
    """True RMS over every length-``n`` window (``len(x) - n + 1`` values)."""
    x = np.asarray(x, dtype=float)
    if len(x) < n:
        return np.empty(0)
    c = np.concatenate([[0.0], np.cumsum(x * x)])
    return np.sqrt(np.maximum(c[n:] - c[:-n], 0.0) / n)


class OcRelay:
    """Digital relay fed point-on-wave primary current, one-cycle true RMS."""

    def __init__(self, settings: OcSettings, samples_per_cycle: int):
        self.settings = settings
        self.n = samples_per_cycle
        self._tail = np.empty(0)
        self.max_m = 0.0
        self.max_secondary = 0.0

    def feed(self, i_primary: np.ndarray) -> np.ndarray:
        """Update with a chunk; returns the secondary RMS for windows ending in it."""
        buf = np.concatenate([self._tail, np.asarray(i_primary, dtype=float)])
        rms = sliding_rms(buf, self.n) / self.settings.ct_turns
        if len(rms):
            peak = float(rms.max())
            self.max_secondary = max(self.max_secondary, peak)
            m, _ = evaluate(peak, self.settings)
            self.max_m = max(self.max_m, m)
        self._tail = buf[-(self.n - 1):] if self.n > 1 else np.empty(0)
        return rms

    @property
    def tripped(self) -> bool:
        return self.max_m > 1.0


OC_CSV_COLUMNS = ("pickup", "ct", "tap", "max_M", "tripped")


def write_oc_csv(path, s: OcSettings, max_m: float) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(OC_CSV_COLUMNS)
        w.writerow([repr(s.pickup), s.ct_label, repr(s.tap), repr(max_m), int(max_m > 1.0)])
