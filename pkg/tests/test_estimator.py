import math

import numpy as np
import pytest

from hifdetect.circuit import LineParams, line_eigenvalues
from hifdetect.errors import ConfigurationError, LowCurrentError, RankDeficiencyError
from hifdetect.estimator import (
    EstimatorConfig,
    estimate_discrete_ls,
    estimate_impedance,
    estimate_trajectory,
    write_eigen_csv,
)
from hifdetect.pmu import PhasorStream, extract_phasors
from hifdetect.waveform import LoadProfile, simulate

LS = EstimatorConfig(strategy="discrete-ls", window_len=12)


def line_stream(p, i_send, rate=30.0):
    z = complex(p.r_series, p.omega * p.l_series)
    vs = np.full(len(i_send), p.v_nominal + 0j)
    vr = vs - z * i_send
    t = np.arange(1, len(i_send) + 1) / rate
    return PhasorStream(t, vs, i_send, vr, 0.9 * i_send, rate)


def test_impedance_recovers_exact_pair(line, rng):
    i = 200 * np.exp(1j * rng.uniform(-0.3, 0.3, 10))
    est = estimate_impedance(line_stream(line, i), line)
    ref = line_eigenvalues(line.r_series, line.l_series, line.c_shunt).lambda_minus
    assert est.lam == pytest.approx(ref, rel=1e-12)
    assert est.lam.imag <= 0


def test_impedance_with_noise_within_half_percent(line, rng):
    n = 200
    i = 150 * np.exp(1j * rng.uniform(-0.3, 0.3, n))
    s = line_stream(line, i)
    s.v_send = s.v_send * (1 + 1e-4 * (rng.standard_normal(n) + 1j * rng.standard_normal(n)))
    z = np.mean((s.v_send - s.v_recv) / s.i_send)
    assert z.real == pytest.approx(line.r_series, rel=5e-3)
    assert z.imag / line.omega == pytest.approx(line.l_series, rel=5e-3)


def test_identical_samples_equal_single_sample(line):
    i = np.full(8, 120 - 30j)
    s = line_stream(line, i)
    assert estimate_impedance(s, line).lam == estimate_impedance(s[:1], line).lam


def test_low_current_withheld(line):
    s = line_stream(line, np.full(5, 1e-6 + 0j))
    with pytest.raises(LowCurrentError):
        estimate_impedance(s, line)
    traj = estimate_trajectory(s, line, EstimatorConfig(window_len=2))
    assert all(e.withheld and e.reason == "LowCurrentError" for e in traj)


def test_negative_resistance_clamped(line):
    p = LineParams(0.0, line.l_series, line.c_shunt, line.v_nominal, line.i_nominal)
    s = line_stream(p, np.full(4, 100 + 0j))
    s.v_recv = s.v_recv + 0.5 * s.i_send  # apparent R of -0.5 ohm
    est = estimate_impedance(s, p)
    assert est.lam.real == 0.0


def _discrete_stream(a_d, b_d, n, rng, rate=60.0):
    x = np.zeros((n, 2), dtype=complex)
    x[0] = [10 + 2j, 100 - 5j]
    u = 1000 * np.exp(1j * rng.uniform(-np.pi, np.pi, n))
    for k in range(n - 1):
        x[k + 1] = a_d @ x[k] + b_d * u[k]
    t = np.arange(n) / rate
    return PhasorStream(t, u, x[:, 0], x[:, 1], x[:, 1] * 0.01, rate)


def test_discrete_ls_recovers_known_map(line, rng):
    a_d = np.array([[0.6 + 0.1j, -0.2], [0.3, 0.8 - 0.05j]])
    b_d = np.array([0.01, 0.002 + 0.001j])
    s = _discrete_stream(a_d, b_d, 12, rng)
    lam_d = np.linalg.eigvals(a_d)
    expected = s.rate * np.log(lam_d)
    est = estimate_discrete_ls(s, line, s.rate, LS)
    assert est.lam == pytest.approx(expected[np.argmin(expected.imag)], rel=1e-8)

    raw = estimate_discrete_ls(s, line, s.rate, EstimatorConfig("discrete-ls", 12, raw_discrete=True))
    scaled = s.rate * lam_d
    assert raw.lam == pytest.approx(scaled[np.argmin(scaled.imag)], rel=1e-8)


def test_raw_discrete_scales_with_rate(line, rng):
    a_d = np.array([[0.5, 0.1], [-0.2, 0.7]])
    b_d = np.array([0.02, 0.0])
    s = _discrete_stream(a_d, b_d, 10, rng)
    cfg = EstimatorConfig("discrete-ls", 10, raw_discrete=True)
    lo = estimate_discrete_ls(s, line, 30.0, cfg).lam
    hi = estimate_discrete_ls(s, line, 120.0, cfg).lam
    assert hi == pytest.approx(4 * lo, rel=1e-12)


def test_constant_window_is_rank_deficient(line):
    s = line_stream(line, np.full(10, 100 + 0j))
    with pytest.raises(RankDeficiencyError):
        estimate_discrete_ls(s, line, 30.0, LS)


def test_discrete_ls_time_constant_on_excited_system(line, rng):
    # a continuous line discretised at the reporting rate, driven by a wandering input
    rate = 120.0
    a_c = np.array([[-line.r_series / line.l_series, -1 / line.l_series], [1 / line.c_shunt, -50.0]])
    w, v = np.linalg.eig(a_c)
    a_d = (v @ np.diag(np.exp(w / rate)) @ np.linalg.inv(v)).astype(complex)
    s = _discrete_stream(a_d, np.array([1e-3, 0.0]), 120, rng, rate)
    traj = estimate_trajectory(s, line, EstimatorConfig("discrete-ls", 12))
    lam = np.array([e.lam for e in traj])
    assert len(lam) >= 100
    assert np.std(lam) / np.abs(np.mean(lam)) < 1e-2


def test_healthy_simulation_time_constant_for_impedance(line):
    wf = simulate(line, LoadProfile(), None, [], duration=5.0)
    ps = extract_phasors(wf, 30)
    traj = estimate_trajectory(ps, line)
    lam = np.array([e.lam for e in traj])
    assert len(lam) >= 100
    ref = line_eigenvalues(line.r_series, line.l_series, line.c_shunt).lambda_minus
    assert np.std(lam) / abs(lam.mean()) < 1e-2
    assert lam.mean() == pytest.approx(ref, rel=5e-3)


def test_impedance_rate_invariant(line):
    wf = simulate(line, LoadProfile(), None, [], duration=3.0)
    means = [np.mean([e.lam for e in estimate_trajectory(extract_phasors(wf, r), line)]) for r in (30, 60, 120)]
    assert means[1] == pytest.approx(means[0], rel=5e-3)
    assert means[2] == pytest.approx(means[0], rel=5e-3)


def test_trajectory_order_and_stride(line, rng):
    i = 100 * np.exp(1j * rng.uniform(-0.2, 0.2, 30))
    s = line_stream(line, i)
    traj = estimate_trajectory(s, line, EstimatorConfig(window_len=5, stride=3))
    assert [e.t for e in traj] == list(s.t[4::3])


@pytest.mark.parametrize("kw", [
    dict(strategy="kalman"), dict(window_len=0), dict(strategy="discrete-ls", window_len=3), dict(stride=0),
])
def test_config_validation(kw):
    with pytest.raises(ConfigurationError):
        EstimatorConfig(**kw)


def test_eigen_csv(tmp_path, line):
    s = line_stream(line, np.array([100 + 0j, 1e-9, 100 + 0j]))
    traj = estimate_trajectory(s, line, EstimatorConfig(window_len=1))
    path = tmp_path / "e.csv"
    write_eigen_csv(path, traj)
    rows = path.read_text().splitlines()
    assert rows[0] == "t,re,im,mag,angle_deg,strategy,withheld_flag"
    assert rows[2].endswith(",,,,impedance,1")
    mag, ang = (float(x) for x in rows[1].split(",")[3:5])
    assert mag == pytest.approx(abs(traj[0].lam))
    assert -180 < ang <= 0
