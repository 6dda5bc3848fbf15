"""Synthetic PMU: full-cycle DFT phasors at a fixed reporting rate.

Phasors are RMS-scaled and referenced to absolute simulation time, so a
steady nominal-frequency tone yields the same complex value at every report
regardless of where the window falls.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterable, Iterator, NamedTuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import ConfigurationError
from .waveform import Waveform

SUPPORTED_RATES = (30, 60, 120)
CHANNELS = ("v_send", "i_send", "v_recv", "i_recv")


class PhasorSample(NamedTuple):
    t: float
    v_send: complex
    i_send: complex
    v_recv: complex
    i_recv: complex
    rate: float


@dataclass
class PhasorStream:
    t: np.ndarray
    v_send: np.ndarray
    i_send: np.ndarray
    v_recv: np.ndarray
    i_recv: np.ndarray
    rate: float

    def __len__(self):
        return len(self.t)

    def __getitem__(self, key) -> "PhasorStream | PhasorSample":
        if isinstance(key, (int, np.integer)):
            return PhasorSample(float(self.t[key]), complex(self.v_send[key]), complex(self.i_send[key]),
                                complex(self.v_recv[key]), complex(self.i_recv[key]), self.rate)
        return PhasorStream(self.t[key], self.v_send[key], self.i_send[key],
                            self.v_recv[key], self.i_recv[key], self.rate)

    def __iter__(self) -> Iterator[PhasorSample]:
        for k in range(len(self)):
            yield self[k]

    @classmethod
    def concat(cls, parts: list["PhasorStream"], rate: float) -> "PhasorStream":
        if not parts:
            e = np.empty(0)
            return cls(e, e.astype(complex), e.astype(complex), e.astype(complex), e.astype(complex), rate)
        return cls(
            np.concatenate([p.t for p in parts]),
            *(np.concatenate([getattr(p, c) for p in parts]) for c in CHANNELS),
            rate=rate,
        )


def _check_rates(f_sim: float, rate: float, f_nominal: float) -> tuple[int, int]:
    dec = f_sim / rate
    n_cycle = f_sim / f_nominal
    if abs(dec - round(dec)) > 1e-9 or dec < 1:
        raise ConfigurationError(f"f_sim={f_sim} is not an integer multiple of rate={rate}")
    if abs(n_cycle - round(n_cycle)) > 1e-9:
        raise ConfigurationError(f"f_sim={f_sim} is not an integer multiple of f_nominal={f_nominal}")
    return int(round(dec)), int(round(n_cycle))


def add_noise(x: np.ndarray, snr_db: float, z: np.ndarray) -> np.ndarray:
    """Complex Gaussian noise whose per-component std is |x| * 10**(-snr/20).

    ``z`` holds standard normals shaped ``x.shape + (2,)``.
    """
    scale = np.abs(x) * 10.0 ** (-snr_db / 20.0)
    return x + scale * (z[..., 0] + 1j * z[..., 1])


class PhasorExtractor:
    """Streaming full-cycle DFT over :class:`Waveform` chunks."""

    def __init__(self, f_sim: float, rate: float, f_nominal: float = 60.0,
                 snr_db: float | None = None, seed: int = 0):
        self.decimation, self.n_cycle = _check_rates(f_sim, rate, f_nominal)
        self.f_sim = f_sim
        self.rate = rate
        self.snr_db = snr_db
        self._rng = np.random.default_rng(seed)
        k = np.arange(self.n_cycle)
        # twiddles depend on the absolute sample index mod N only
        self._twiddle = np.exp(-2j * np.pi * k / self.n_cycle) * (math.sqrt(2.0) / self.n_cycle)
        self._tail: dict[str, np.ndarray] = {}
        self._tail_index = 0
        self._next_index = 0

    def feed(self, wf: Waveform) -> PhasorStream:
        n_cycle = self.n_cycle
        start = wf.start_index
        if start != self._next_index:
            raise ConfigurationError("waveform chunks must be contiguous and in order")
        self._next_index = start + len(wf)
        base = start - len(self._tail.get("v_send", ()))
        bufs = {c: np.concatenate([self._tail.get(c, np.empty(0)), getattr(wf, c)]) for c in CHANNELS}
        t_buf = np.concatenate([self._tail.get("t", np.empty(0)), wf.t])
        n_buf = len(t_buf)
        # report at absolute indices m with m % decimation == 0 and a full cycle behind
        m_lo = max(base + n_cycle - 1, start)
        first = -(-m_lo // self.decimation) * self.decimation
        ms = np.arange(first, base + n_buf, self.decimation)
        out = {}
        if len(ms):
            rows = ms - base - (n_cycle - 1)
            phase0 = (ms - (n_cycle - 1)) % n_cycle
            # roll twiddles so each window starts at its own absolute phase
            tw_idx = (phase0[:, None] + np.arange(n_cycle)[None, :]) % n_cycle
            tw = self._twiddle[tw_idx]
            for c in CHANNELS:
                win = sliding_window_view(bufs[c], n_cycle)[rows]
                out[c] = np.einsum("ij,ij->i", win, tw)
            if self.snr_db is not None:
                z = self._rng.standard_normal((len(ms), len(CHANNELS), 2))
                for j, c in enumerate(CHANNELS):
                    out[c] = add_noise(out[c], self.snr_db, z[:, j, :])
            t_rep = t_buf[ms - base]
        else:
            t_rep = np.empty(0)
            for c in CHANNELS:
                out[c] = np.empty(0, dtype=complex)
        keep = n_cycle - 1
        self._tail = {c: bufs[c][-keep:] for c in CHANNELS}
        self._tail["t"] = t_buf[-keep:]
        return PhasorStream(t_rep, out["v_send"], out["i_send"], out["v_recv"], out["i_recv"], self.rate)


def extract_phasors(frames: Waveform | Iterable[Waveform], rate: float, snr_db: float | None = None,
                    seed: int = 0, f_nominal: float = 60.0) -> PhasorStream:
    if rate not in SUPPORTED_RATES:
        raise ConfigurationError(f"reporting rate must be one of {SUPPORTED_RATES}, got {rate}")
    chunks = [frames] if isinstance(frames, Waveform) else frames
    ext = None
    parts = []
    for wf in chunks:
        if ext is None:
            ext = PhasorExtractor(wf.f_sim, rate, f_nominal, snr_db, seed)
        parts.append(ext.feed(wf))
    return PhasorStream.concat(parts, float(rate))


PHASOR_CSV_COLUMNS = ("t", "vs_mag", "vs_ang", "is_mag", "is_ang", "vr_mag", "vr_ang", "ir_mag", "ir_ang", "rate")


def write_phasor_csv(path, stream: PhasorStream) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(PHASOR_CSV_COLUMNS)
        cols = [stream.t]
        for c in CHANNELS:
            x = getattr(stream, c)
            cols += [np.abs(x), np.angle(x)]
        for k in range(len(stream)):
            w.writerow([repr(float(col[k])) for col in cols] + [repr(float(stream.rate))])


def read_phasor_csv(path) -> PhasorStream:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    t = data[:, 0]
    ch = [data[:, 1 + 2 * j] * np.exp(1j * data[:, 2 + 2 * j]) for j in range(4)]
    rate = float(data[0, 9]) if len(data) else 0.0
    return PhasorStream(t, *ch, rate=rate)
