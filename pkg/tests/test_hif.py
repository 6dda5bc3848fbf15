import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hifdetect.errors import InvalidParameterError
from hifdetect.hif import (
    HifParams,
    fault_branch_voltage,
    initial_state,
    path_index,
    resistance_path,
    sgn_arc,
    sgp,
    step_resistances,
)


@pytest.mark.parametrize("i, p, n", [(1.0, 1, 0), (0.0, 0, -1), (-1.0, 0, -1)])
def test_sign_tables(i, p, n):
    assert sgp(i) == p
    assert sgn_arc(i) == n


@given(st.floats(-1e6, 1e6), st.floats(1e-3, 1e4))
def test_linear_branch_is_ohmic(i, w):
    params = HifParams.linear(w)
    state = initial_state(params)
    assert fault_branch_voltage(i, state, params) == w * i


def test_branch_voltage_pieces():
    params = HifParams((100.0, 100.0), (120.0, 120.0), 800.0, 1100.0)
    s = initial_state(params)
    assert fault_branch_voltage(2.0, s, params) == 100.0 * 2.0 + 800.0
    assert fault_branch_voltage(-2.0, s, params) == -120.0 * 2.0 - 1100.0
    assert fault_branch_voltage(0.0, s, params) == -1100.0


@pytest.mark.parametrize("kw", [
    dict(r_p_bounds=(0.0, 1.0)), dict(r_n_bounds=(5.0, 4.0)), dict(tau=0.0),
    dict(sigma_step=-1.0), dict(v_p=-1.0), dict(process="ou"),
])
def test_invalid_params(kw):
    base = dict(r_p_bounds=(1.0, 2.0), r_n_bounds=(1.0, 2.0), v_p=1.0, v_n=1.0)
    with pytest.raises(InvalidParameterError):
        HifParams(**{**base, **kw})


def test_resistances_held_between_updates(arc):
    s0 = initial_state(arc, seed=3)
    s1 = step_resistances(s0, arc, 0.5 * arc.tau)
    assert s1 is s0
    s2 = step_resistances(s0, arc, arc.tau)
    assert s2.next_update_time == pytest.approx(2 * arc.tau)


@pytest.mark.parametrize("process", ["walk", "iid"])
def test_resistances_stay_in_bounds(arc, process):
    params = HifParams(arc.r_p_bounds, arc.r_n_bounds, arc.v_p, arc.v_n, sigma_step=50.0, process=process)
    rp, rn, _ = resistance_path(initial_state(params, seed=1), params, 1.0)
    assert rp.min() >= params.r_p_bounds[0] and rp.max() <= params.r_p_bounds[1]
    assert rn.min() >= params.r_n_bounds[0] and rn.max() <= params.r_n_bounds[1]
    assert len(np.unique(rp)) > 10


def test_path_matches_stepwise_updates(arc):
    rp, rn, end = resistance_path(initial_state(arc, seed=9), arc, 0.05)
    s = initial_state(arc, seed=9)
    for k in range(1, len(rp)):
        s = step_resistances(s, arc, s.next_update_time)
        assert (s.r_p_current, s.r_n_current) == (rp[k], rn[k])
    assert end.next_update_time == pytest.approx(s.next_update_time)


def test_same_seed_same_path(arc):
    a = resistance_path(initial_state(arc, seed=4), arc, 0.2)
    b = resistance_path(initial_state(arc, seed=4), arc, 0.2)
    np.testing.assert_array_equal(a[0], b[0])
    np.testing.assert_array_equal(a[1], b[1])


def test_path_index_clips():
    idx = path_index(1.0, 0.01, np.array([0.99, 1.0, 1.015, 5.0]), 10)
    assert idx.tolist() == [0, 0, 1, 9]


def test_scaling_keeps_ratios(arc):
    s = arc.scaled(2.0)
    assert s.r_p_bounds == (2 * arc.r_p_bounds[0], 2 * arc.r_p_bounds[1])
    assert s.sigma_step == 2 * arc.sigma_step
    assert (s.v_p, s.v_n) == (arc.v_p, arc.v_n)
