"""Anti-parallel source-diode high-impedance fault branch.

The branch voltage as a function of its current is piecewise linear with a
jump at ``i = 0``::

    v = R_p * i + v_p      for i > 0
    v = R_n * i - v_n      for i <= 0

Seen from the node voltage this is two biased diodes: no current flows while
``-v_n <= v <= v_p``. ``R_p`` and ``R_n`` wander as a clamped Gaussian
process updated every ``tau`` seconds.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InvalidParameterError


def sgp(i: float) -> int:
    return 1 if i > 0 else 0


def sgn_arc(i: float) -> int:
    return 0 if i > 0 else -1


@dataclass(frozen=True)
class HifParams:
    r_p_bounds: tuple[float, float]
    r_n_bounds: tuple[float, float]
    v_p: float
    v_n: float
    tau: float = 2e-3
    sigma_step: float = 0.0
    seed: int = 0
    process: str = "walk"

    def __post_init__(self):
        for name in ("r_p_bounds", "r_n_bounds"):
            lo, hi = getattr(self, name)
            if not 0 < lo <= hi:
                raise InvalidParameterError(f"{name} must satisfy 0 < min <= max, got {(lo, hi)}")
            object.__setattr__(self, name, (float(lo), float(hi)))
        if not self.tau > 0:
            raise InvalidParameterError("tau must be > 0")
        if self.sigma_step < 0:
            raise InvalidParameterError("sigma_step must be >= 0")
        if self.v_p < 0 or self.v_n < 0:
            raise InvalidParameterError("arc threshold voltages must be >= 0")
        if self.process not in ("walk", "iid"):
            raise InvalidParameterError(f"process must be 'walk' or 'iid', got {self.process!r}")

    def scaled(self, factor: float) -> "HifParams":
        """Copy with both resistance ranges (and the step size) scaled."""
        return replace(
            self,
            r_p_bounds=(self.r_p_bounds[0] * factor, self.r_p_bounds[1] * factor),
            r_n_bounds=(self.r_n_bounds[0] * factor, self.r_n_bounds[1] * factor),
            sigma_step=self.sigma_step * factor,
        )

    @classmethod
    def linear(cls, w: float) -> "HifParams":
        """Constant resistive fault of ``w`` ohms with no arc voltage."""
        return cls(r_p_bounds=(w, w), r_n_bounds=(w, w), v_p=0.0, v_n=0.0)


@dataclass(frozen=True)
class HifState:
    r_p_current: float
    r_n_current: float
    next_update_time: float
    rng: np.random.Generator = field(compare=False, repr=False)


def _mid(bounds):
    return 0.5 * (bounds[0] + bounds[1])


def initial_state(params: HifParams, t0: float = 0.0, seed=None) -> HifState:
    rng = np.random.default_rng(params.seed if seed is None else seed)
    return HifState(_mid(params.r_p_bounds), _mid(params.r_n_bounds), t0 + params.tau, rng)


def _draw(current, bounds, z, params):
    if params.process == "walk":
        val = current + params.sigma_step * z
    else:
        val = _mid(bounds) + params.sigma_step * z
    return min(max(val, bounds[0]), bounds[1])


def step_resistances(state: HifState, params: HifParams, t: float) -> HifState:
    if t < state.next_update_time:
        return state
    zp, zn = state.rng.standard_normal(2)
    return HifState(
        _draw(state.r_p_current, params.r_p_bounds, zp, params),
        _draw(state.r_n_current, params.r_n_bounds, zn, params),
        state.next_update_time + params.tau,
        state.rng,
    )


def fault_branch_voltage(i: float, state: HifState, params: HifParams) -> float:
    p = sgp(i)
    return (
        state.r_p_current * i * p
        + params.v_p * p
        + state.r_n_current * i * (1 - p)
        + params.v_n * sgn_arc(i)
    )


def resistance_path(state: HifState, params: HifParams, duration: float):
    """Resistance values held over one fault interval of length ``duration``.

    Element ``k`` is the value after ``k`` updates, i.e. the one in force on
    ``[onset + k*tau, onset + (k+1)*tau)``. Draws are taken exactly as
    repeated :func:`step_resistances` calls would take them. Returns
    ``(r_p, r_n, new_state)``.
    """
    n_updates = max(int(np.floor(duration / params.tau + 1e-9)), 0)
    z = state.rng.standard_normal((n_updates, 2))
    rp_vals = np.empty(n_updates + 1)
    rn_vals = np.empty(n_updates + 1)
    rp, rn = state.r_p_current, state.r_n_current
    rp_vals[0], rn_vals[0] = rp, rn
    for k in range(n_updates):
        rp = _draw(rp, params.r_p_bounds, z[k, 0], params)
        rn = _draw(rn, params.r_n_bounds, z[k, 1], params)
        rp_vals[k + 1], rn_vals[k + 1] = rp, rn
    new_state = HifState(rp, rn, state.next_update_time + n_updates * params.tau, state.rng)
    return rp_vals, rn_vals, new_state


def path_index(onset: float, tau: float, times: np.ndarray, n_values: int) -> np.ndarray:
    idx = np.floor((np.asarray(times) - onset) / tau + 1e-9).astype(np.int64)
    return np.clip(idx, 0, n_values - 1)
