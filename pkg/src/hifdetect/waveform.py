"""Time-domain simulation of the monitored line with load and HIF branch.

Topology, source to load::

    v_s(t) --R--+--L--+-- receiving end
                |     |
           fault     C || G_load(t)
           branch

Sending-end quantities are measured at the source terminal, receiving-end
quantities at the capacitor/load node. The fault branch attaches between R
and L. Integration is trapezoidal; the arc branch is piecewise linear in the
Thevenin voltage ``v_s - R*i`` so each step is an exact linear solve once the
conducting region is fixed.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterator, NamedTuple, Sequence

import numpy as np

from . import kernels
from .circuit import NO_FAULT_OHMS, LineParams, base_load_conductance, steady_state
from .errors import ConfigurationError, InstabilityError, InvalidParameterError
from .hif import HifParams, initial_state, path_index, resistance_path

DEFAULT_F_SIM = 7680.0

# a representative autumn weekday shape, peak normalised to 1
DEFAULT_LOAD_SHAPE = (
    0.62, 0.58, 0.56, 0.55, 0.56, 0.60, 0.68, 0.75, 0.80, 0.84, 0.88, 0.92,
    0.95, 0.98, 1.00, 1.00, 0.99, 0.97, 0.93, 0.88, 0.82, 0.76, 0.70, 0.65,
)


@dataclass(frozen=True)
class LoadProfile:
    multipliers: tuple[float, ...] = DEFAULT_LOAD_SHAPE
    interpolation: str = "linear"
    hour_seconds: float = 10.0

    def __post_init__(self):
        m = tuple(float(x) for x in self.multipliers)
        if len(m) != 24:
            raise InvalidParameterError(f"load profile needs 24 multipliers, got {len(m)}")
        if min(m) <= 0:
            raise InvalidParameterError("load multipliers must be > 0")
        if self.interpolation not in ("step", "linear"):
            raise InvalidParameterError(f"interpolation must be 'step' or 'linear', got {self.interpolation!r}")
        if not self.hour_seconds > 0:
            raise InvalidParameterError("hour_seconds must be > 0")
        object.__setattr__(self, "multipliers", m)

    @classmethod
    def constant(cls, value: float = 1.0, hour_seconds: float = 10.0) -> "LoadProfile":
        return cls((value,) * 24, "step", hour_seconds)

    def at(self, t) -> np.ndarray:
        """Multiplier at simulated time(s) ``t``; the day wraps after 24 hours."""
        t = np.asarray(t, dtype=float)
        m = np.asarray(self.multipliers)
        pos = t / self.hour_seconds
        h = np.floor(pos).astype(np.int64)
        if self.interpolation == "step":
            return m[h % 24]
        frac = pos - h
        return m[h % 24] * (1.0 - frac) + m[(h + 1) % 24] * frac


@dataclass(frozen=True)
class FaultWindow:
    start: float
    duration: float

    @property
    def end(self) -> float:
        return self.start + self.duration


class WaveformFrame(NamedTuple):
    t: float
    v_send: float
    i_send: float
    v_recv: float
    i_recv: float
    fault_active: bool


@dataclass
class Waveform:
    """A block of consecutive point-on-wave samples (structure of arrays)."""

    t: np.ndarray
    v_send: np.ndarray
    i_send: np.ndarray
    v_recv: np.ndarray
    i_recv: np.ndarray
    fault_active: np.ndarray
    i_fault: np.ndarray
    f_sim: float
    start_index: int = 0

    def __len__(self):
        return len(self.t)

    def frames(self) -> Iterator[WaveformFrame]:
        for row in zip(self.t.tolist(), self.v_send.tolist(), self.i_send.tolist(),
                       self.v_recv.tolist(), self.i_recv.tolist(), self.fault_active.tolist()):
            yield WaveformFrame(*row)

    @classmethod
    def concat(cls, parts: Sequence["Waveform"]) -> "Waveform":
        if not parts:
            raise ValueError("nothing to concatenate")
        fields = ("t", "v_send", "i_send", "v_recv", "i_recv", "fault_active", "i_fault")
        joined = {f: np.concatenate([getattr(p, f) for p in parts]) for f in fields}
        return cls(**joined, f_sim=parts[0].f_sim, start_index=parts[0].start_index)


def source_voltage(p: LineParams, t) -> np.ndarray:
    return math.sqrt(2.0) * p.v_nominal * np.cos(p.omega * np.asarray(t, dtype=float))


def _active_mask(t: np.ndarray, schedule: Sequence[FaultWindow]) -> np.ndarray:
    mask = np.zeros(t.shape, dtype=bool)
    for w in schedule:
        mask |= (t >= w.start) & (t < w.end)
    return mask


def simulate_segment(
    p: LineParams,
    load: LoadProfile,
    hif: HifParams | None,
    schedule: Sequence[FaultWindow],
    f_sim: float = DEFAULT_F_SIM,
    duration: float = 1.0,
    seed: int = 0,
    chunk_seconds: float | None = None,
    g_base: float | None = None,
    backend=None,
) -> Iterator[Waveform]:
    """Integrate the network and yield consecutive :class:`Waveform` chunks.

    ``g_base`` is the load conductance at multiplier 1; by default it is the
    value that draws ``p.i_nominal`` from ``p.v_nominal``. The run starts from
    the healthy sinusoidal steady state at the initial load.
    """
    if f_sim / p.f_nominal < 64:
        raise ConfigurationError(f"f_sim={f_sim} gives fewer than 64 samples per cycle")
    if not duration > 0:
        raise ConfigurationError("duration must be > 0")
    if schedule and hif is None:
        raise ConfigurationError("a fault schedule needs HIF parameters")
    integrate = backend or kernels.integrate

    h = 1.0 / f_sim
    n_total = int(round(duration * f_sim))
    chunk = n_total if chunk_seconds is None else max(1, int(round(chunk_seconds * f_sim)))
    if g_base is None:
        g_base = base_load_conductance(p)

    g0 = g_base * float(load.at(0.0))
    ss = steady_state(p, g0)
    # instantaneous values at t=0 of sqrt(2)*|X|*cos(wt + angle)
    x_i = math.sqrt(2.0) * ss.i_send.real
    x_v = math.sqrt(2.0) * ss.v_recv.real
    limit_i = 1e9 * p.i_nominal
    limit_v = 1e9 * max(p.v_nominal, 1.0)

    schedule = sorted(schedule, key=lambda w: w.start)
    paths = []
    if hif is not None:
        hif_state = initial_state(hif, seed=(hif.seed, seed))
        for win in schedule:
            rpv, rnv, hif_state = resistance_path(hif_state, hif, win.duration)
            paths.append((rpv, rnv))

    for first in range(0, n_total, chunk):
        # overlap one sample with the previous chunk so each integration step
        # starts from the previously computed state
        lo = first - 1 if first > 0 else 0
        hi = min(first + chunk, n_total)
        t = np.arange(lo, hi) * h
        vs = source_voltage(p, t)
        g = g_base * load.at(t)
        active = _active_mask(t, schedule)
        rp = np.full(t.shape, NO_FAULT_OHMS)
        rn = np.full(t.shape, NO_FAULT_OHMS)
        vp = np.zeros(t.shape)
        vn = np.zeros(t.shape)
        if active.any():
            for win, (rpv, rnv) in zip(schedule, paths):
                sel = (t >= win.start) & (t < win.end)
                if not sel.any():
                    continue
                k = path_index(win.start, hif.tau, t[sel], len(rpv))
                rp[sel], rn[sel] = rpv[k], rnv[k]
                vp[sel], vn[sel] = hif.v_p, hif.v_n
        i_line = np.empty(t.shape)
        v_cap = np.empty(t.shape)
        i_f = np.empty(t.shape)
        status = integrate(x_i, x_v, vs, g, rp, rn, vp, vn,
                           p.r_series, p.l_series, p.c_shunt, h, limit_i, limit_v,
                           i_line, v_cap, i_f)
        if status >= 0:
            raise InstabilityError(f"state exceeded 1e9 x nominal at t={t[status]:.6f} s")
        x_i, x_v = float(i_line[-1]), float(v_cap[-1])
        s = slice(1, None) if lo != first else slice(None)
        yield Waveform(
            t=t[s], v_send=vs[s], i_send=(i_line + i_f)[s], v_recv=v_cap[s],
            i_recv=(g * v_cap)[s], fault_active=active[s], i_fault=i_f[s],
            f_sim=f_sim, start_index=first,
        )


def simulate(*args, **kwargs) -> Waveform:
    return Waveform.concat(list(simulate_segment(*args, **kwargs)))


WAVEFORM_CSV_COLUMNS = ("t", "v_send", "i_send", "v_recv", "i_recv", "fault_active")


def write_waveform_csv(path, wf: Waveform) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(WAVEFORM_CSV_COLUMNS)
        for row in zip(wf.t.tolist(), wf.v_send.tolist(), wf.i_send.tolist(),
                       wf.v_recv.tolist(), wf.i_recv.tolist(), wf.fault_active.tolist()):
            w.writerow([repr(x) for x in row[:5]] + [int(row[5])])
