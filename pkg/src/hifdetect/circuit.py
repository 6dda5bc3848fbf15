"""Lumped RLC line model: state matrices, closed-form eigenvalues, phasor helpers.

States are ordered ``(i, v_c)``: the series (inductor) current and the
receiving-end capacitor voltage.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError

NO_FAULT_OHMS = 1e12


@dataclass(frozen=True)
class LineParams:
    r_series: float
    l_series: float
    c_shunt: float
    v_nominal: float
    i_nominal: float
    f_nominal: float = 60.0

    def __post_init__(self):
        if not self.r_series >= 0:
            raise InvalidParameterError(f"r_series must be >= 0, got {self.r_series}")
        if not self.l_series > 0:
            raise InvalidParameterError(f"l_series must be > 0, got {self.l_series}")
        if not self.c_shunt > 0:
            raise InvalidParameterError(f"c_shunt must be > 0, got {self.c_shunt}")
        if not self.f_nominal > 0:
            raise InvalidParameterError(f"f_nominal must be > 0, got {self.f_nominal}")
        if not self.i_nominal > 0:
            raise InvalidParameterError(f"i_nominal must be > 0, got {self.i_nominal}")
        if not self.v_nominal >= 0:
            raise InvalidParameterError(f"v_nominal must be >= 0, got {self.v_nominal}")

    @property
    def omega(self) -> float:
        return 2.0 * math.pi * self.f_nominal


@dataclass(frozen=True)
class StateMatrix2:
    a: np.ndarray
    b: np.ndarray
    labels: tuple[str, str] = ("i", "v_c")

    @property
    def trace(self) -> float:
        return float(self.a[0, 0] + self.a[1, 1])

    @property
    def det(self) -> float:
        a = self.a
        return float(a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0])


def polar_deg(z: complex) -> tuple[float, float]:
    """Magnitude and angle in degrees, angle folded into (-180, 180]."""
    ang = math.degrees(math.atan2(z.imag, z.real))
    if ang <= -180.0:
        ang += 360.0
    return abs(z), ang


@dataclass(frozen=True)
class EigenPair:
    lambda_plus: complex
    lambda_minus: complex

    @property
    def polar_plus(self) -> tuple[float, float]:
        return polar_deg(self.lambda_plus)

    @property
    def polar_minus(self) -> tuple[float, float]:
        return polar_deg(self.lambda_minus)

    def as_array(self) -> np.ndarray:
        return np.array([self.lambda_plus, self.lambda_minus])


def _check_lc(l_series: float, c_shunt: float) -> None:
    if not l_series > 0:
        raise InvalidParameterError(f"inductance must be > 0, got {l_series}")
    if not c_shunt > 0:
        raise InvalidParameterError(f"capacitance must be > 0, got {c_shunt}")


def healthy_matrix(p: LineParams) -> StateMatrix2:
    _check_lc(p.l_series, p.c_shunt)
    R, L, C = p.r_series, p.l_series, p.c_shunt
    a = np.array([[-R / L, -1.0 / L], [1.0 / C, 0.0]])
    b = np.array([1.0 / L, 0.0])
    return StateMatrix2(a, b)


def faulted_matrix(p: LineParams, w: float) -> StateMatrix2:
    """State matrix with a resistive branch ``w`` to ground between R and L."""
    _check_lc(p.l_series, p.c_shunt)
    if w < 0:
        raise InvalidParameterError(f"fault resistance must be >= 0, got {w}")
    R, L, C = p.r_series, p.l_series, p.c_shunt
    if R + w == 0:
        raise InvalidParameterError("R + W = 0: degenerate divider")
    div = w / (R + w)
    a = np.array([[-R * div / L, -1.0 / L], [1.0 / C, 0.0]])
    b = np.array([div / L, 0.0])
    return StateMatrix2(a, b)


def eigenvalues_closed_form(m: StateMatrix2) -> EigenPair:
    """Roots of lambda^2 - tr*lambda + det = 0 without catastrophic cancellation."""
    tr = m.trace
    det = m.det
    half = 0.5 * tr
    disc = half * half - det
    if disc >= 0.0:
        # real roots: larger magnitude first, the other from the product
        q = half + math.copysign(math.sqrt(disc), half)
        if q == 0.0:
            return EigenPair(0j, 0j)
        r1, r2 = q, det / q
        hi, lo = max(r1, r2), min(r1, r2)
        return EigenPair(complex(hi, 0.0), complex(lo, 0.0))
    # det > half^2 >= 0 here; factor to keep the difference accurate
    s = math.sqrt(det)
    imag = math.sqrt((s - abs(half)) * (s + abs(half)))
    return EigenPair(complex(half, imag), complex(half, -imag))


def line_eigenvalues(r: float, l: float, c: float) -> EigenPair:
    _check_lc(l, c)
    a = np.array([[-r / l, -1.0 / l], [1.0 / c, 0.0]])
    return eigenvalues_closed_form(StateMatrix2(a, np.array([1.0 / l, 0.0])))


# -- phasor-domain steady state ------------------------------------------------

def network_impedance(p: LineParams, g_load: float, omega: float | None = None) -> complex:
    """Input impedance seen by the source: series R + jwL into (C || G)."""
    w = p.omega if omega is None else omega
    y_shunt = g_load + 1j * w * p.c_shunt
    return p.r_series + 1j * w * p.l_series + 1.0 / y_shunt


def base_load_conductance(p: LineParams) -> float:
    """Load conductance that draws ``i_nominal`` RMS from ``v_nominal``.

    |Z(G)| decreases monotonically with G once G exceeds the resonance
    region, so a bracketed bisection on the log scale is enough.
    """
    if p.v_nominal == 0:
        raise InvalidParameterError("a dead source has no nominal operating point; pass g_load explicitly")
    target = p.v_nominal / p.i_nominal

    def excess(g):
        return abs(network_impedance(p, g)) - target

    lo, hi = 1e-9, 1e6
    if excess(hi) > 0:
        raise InvalidParameterError("nominal current unreachable: series impedance too large")
    # |Z| can be small near LC resonance at tiny G; walk down from hi
    g = hi
    while g > lo and excess(g) < 0:
        g /= 2.0
    if excess(g) < 0:
        raise InvalidParameterError("nominal current unreachable with a shunt conductance")
    lo, hi = g, 2.0 * g
    for _ in range(200):
        mid = math.sqrt(lo * hi)
        if excess(mid) > 0:
            lo = mid
        else:
            hi = mid
        if hi / lo - 1.0 < 1e-15:
            break
    return math.sqrt(lo * hi)


@dataclass(frozen=True)
class SteadyState:
    """RMS phasors of the healthy network under a cosine source at angle 0."""

    v_send: complex
    i_send: complex
    v_recv: complex
    i_recv: complex


def steady_state(p: LineParams, g_load: float, v_rms: float | None = None) -> SteadyState:
    v = p.v_nominal if v_rms is None else v_rms
    z = network_impedance(p, g_load)
    i = v / z
    vr = v - (p.r_series + 1j * p.omega * p.l_series) * i
    return SteadyState(complex(v), complex(i), complex(vr), complex(g_load * vr))
