"""Windowed line-eigenvalue estimation from phasor streams.

Two strategies:

``impedance``
    Apparent series impedance ``(V_s - V_r) / I_s`` averaged over the
    window gives R and L; C comes from configuration. Eigenvalues follow
    from the closed-form 2x2 solution.

``discrete-ls``
    Least-squares fit of a one-step map ``x[k+1] = A x[k] + B u[k]`` over
    the window with ``x = (I_s, V_r)`` and ``u = V_s``. Eigenvalues of ``A``
    are mapped to continuous time with ``rate * log``; with ``raw_discrete``
    the un-logged ``rate * lambda_d`` is reported instead, which scales with
    the reporting rate.

Only the ``Im <= 0`` member of a pair is reported.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .circuit import LineParams, line_eigenvalues, polar_deg
from .errors import ConfigurationError, LowCurrentError, RankDeficiencyError, WithheldEstimate
from .pmu import PhasorStream

STRATEGIES = ("impedance", "discrete-ls")
MAX_CONDITION = 1e10


@dataclass(frozen=True)
class EstimatorConfig:
    strategy: str = "impedance"
    window_len: int = 10
    stride: int = 1
    raw_discrete: bool = False
    current_floor: float = 1e-3   # fraction of i_nominal
    inductance_floor: float = 1e-6  # henry

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ConfigurationError(f"strategy must be one of {STRATEGIES}, got {self.strategy!r}")
        min_len = 4 if self.strategy == "discrete-ls" else 1
        if self.window_len < min_len:
            raise ConfigurationError(f"window_len must be >= {min_len} for {self.strategy}")
        if self.stride < 1:
            raise ConfigurationError("stride must be >= 1")


@dataclass(frozen=True)
class EigenSample:
    t: float
    lam: complex
    strategy: str
    withheld: bool = False
    reason: str = ""

    @property
    def polar(self) -> tuple[float, float]:
        return polar_deg(self.lam)

    @classmethod
    def gap(cls, t: float, strategy: str, reason: str) -> "EigenSample":
        return cls(t, complex(math.nan, math.nan), strategy, True, reason)


def estimate_impedance(window: PhasorStream, p: LineParams, cfg: EstimatorConfig = EstimatorConfig()) -> EigenSample:
    if len(window) == 0:
        raise ConfigurationError("empty window")
    t = float(window.t[-1])
    floor = cfg.current_floor * p.i_nominal
    if np.any(np.abs(window.i_send) < floor):
        raise LowCurrentError(f"|I_send| below {floor:g} A in window ending {t:.4f} s")
    z = np.mean((window.v_send - window.v_recv) / window.i_send)
    w0 = p.omega
    r_hat = max(z.real, 0.0)
    l_hat = max(z.imag, w0 * cfg.inductance_floor) / w0
    pair = line_eigenvalues(r_hat, l_hat, p.c_shunt)
    return EigenSample(t, pair.lambda_minus, "impedance")


def _pick_lower(lams: np.ndarray) -> complex:
    return complex(lams[np.argmin(lams.imag)])


def estimate_discrete_ls(window: PhasorStream, p: LineParams, rate: float,
                         cfg: EstimatorConfig = EstimatorConfig(strategy="discrete-ls")) -> EigenSample:
    n = len(window)
    if n < 4:
        raise ConfigurationError("discrete-ls needs at least 4 samples")
    t = float(window.t[-1])
    x = np.column_stack([window.i_send, window.v_recv])
    u = window.v_send
    phi = np.column_stack([x[:-1], u[:-1]])
    target = x[1:]
    # column scaling keeps the condition number about excitation, not units
    scale = np.linalg.norm(phi, axis=0)
    if np.any(scale == 0):
        raise RankDeficiencyError("a regressor is identically zero")
    phi_s = phi / scale
    sv = np.linalg.svd(phi_s, compute_uv=False)
    if sv[-1] == 0 or sv[0] / sv[-1] > MAX_CONDITION:
        raise RankDeficiencyError(f"regression ill-conditioned in window ending {t:.4f} s")
    theta_s, *_ = np.linalg.lstsq(phi_s, target, rcond=None)
    theta = theta_s / scale[:, None]
    a_d = theta[:2, :].T
    lam_d = np.linalg.eigvals(a_d)
    if cfg.raw_discrete:
        return EigenSample(t, _pick_lower(rate * lam_d), "discrete-ls")
    if np.any(lam_d == 0):
        raise RankDeficiencyError("zero discrete eigenvalue has no continuous image")
    return EigenSample(t, _pick_lower(rate * np.log(lam_d)), "discrete-ls")


def iter_windows(stream: PhasorStream, window_len: int, stride: int) -> Iterator[PhasorStream]:
    for end in range(window_len, len(stream) + 1, stride):
        yield stream[end - window_len:end]


def estimate_trajectory(stream: PhasorStream, p: LineParams, cfg: EstimatorConfig = EstimatorConfig()) -> list[EigenSample]:
    """Estimates for every window; withheld windows appear as gap samples."""
    out = []
    for win in iter_windows(stream, cfg.window_len, cfg.stride):
        try:
            if cfg.strategy == "impedance":
                out.append(estimate_impedance(win, p, cfg))
            else:
                out.append(estimate_discrete_ls(win, p, stream.rate, cfg))
        except WithheldEstimate as exc:
            out.append(EigenSample.gap(float(win.t[-1]), cfg.strategy, type(exc).__name__))
    return out


EIGEN_CSV_COLUMNS = ("t", "re", "im", "mag", "angle_deg", "strategy", "withheld_flag")


def write_eigen_csv(path, samples: list[EigenSample]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(EIGEN_CSV_COLUMNS)
        for s in samples:
            if s.withheld:
                w.writerow([repr(s.t), "", "", "", "", s.strategy, 1])
            else:
                mag, ang = s.polar
                w.writerow([repr(s.t), repr(s.lam.real), repr(s.lam.imag), repr(mag), repr(ang), s.strategy, 0])
