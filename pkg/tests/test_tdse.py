import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from effdyn.effective import eval_effective
from effdyn.errors import GridClippingError, InsufficientDataError, InvalidArgumentError, ReflectionError
from effdyn.spectral import PotentialSpec, make_grid
from effdyn.tdse import ObservableSeries, dominant_period, gaussian_packet, propagate

LAM6 = PotentialSpec.quartic(6.0)
GRID = make_grid(-8, 8, 4001)


def moments(state):
    g = state.grid
    psi = state.amplitudes
    rho = np.abs(psi) ** 2 * g.dx
    xm = rho @ g.x
    p = np.imag(np.vdot(psi[1:-1], psi[2:] - psi[:-2])) / 2.0
    return rho.sum(), xm, rho @ (g.x - xm) ** 2, p


def test_packet_at_rest():
    norm, xm, var, p = moments(gaussian_packet(GRID, 0.7, 1.0, 0.0))
    assert norm == pytest.approx(1.0, abs=1e-12)
    assert xm == pytest.approx(0.7, abs=1e-8)
    assert var == pytest.approx(0.5, abs=1e-8)
    assert abs(p) < 1e-12


def test_moving_packet():
    norm, xm, var, p = moments(gaussian_packet(GRID, 0.0, 2.0, 1.0))
    assert p == pytest.approx(1.0, abs=1e-8)
    assert var == pytest.approx(0.25, abs=1e-8)
    assert xm == pytest.approx(0.0, abs=1e-8)


@given(st.floats(-1, 1), st.floats(0.3, 5.0), st.floats(-4, 4))
def test_gaussian_moments(x0, w, p0):
    # 1e-8 on the variance needs about 7 sigma of margin: at the minimum
    # 5 sigma the truncated tails alone shift it by ~1e-5 sigma**2
    assume(abs(x0) <= 8 - 7 / math.sqrt(2 * w))
    norm, xm, var, p = moments(gaussian_packet(GRID, x0, w, p0))
    assert norm == pytest.approx(1.0, abs=1e-10)
    assert xm == pytest.approx(x0, abs=1e-8)
    assert var == pytest.approx(1 / (2 * w), abs=1e-8)
    assert p == pytest.approx(p0, abs=1e-8)


def test_packet_margin():
    with pytest.raises(GridClippingError):
        gaussian_packet(make_grid(-2, 2, 401), 1.5, 1.0)
    with pytest.raises(InvalidArgumentError):
        gaussian_packet(GRID, 0.0, -1.0)


def test_fig1_width_from_table(lam6_table, oracle):
    w = math.sqrt(eval_effective(lam6_table, 0.7, "veff", 2))
    assert w == pytest.approx(oracle["lam6_default"]["x0.7"]["omega_w"], rel=1e-3)


def test_coherent_state_in_harmonic_well():
    g = make_grid(-10, 10, 4001)
    n = int(round(2 * math.pi / 1e-3))
    dt = 2 * math.pi / n
    s = propagate(gaussian_packet(g, 1.0, 1.0), PotentialSpec.harmonic(1.0), dt, n, 100)
    assert s.x_mean[-1] == pytest.approx(math.cos(s.times[-1]), abs=2e-4)
    assert np.max(np.abs(s.x_mean - np.cos(s.times))) < 2e-4


def test_free_spreading():
    g = make_grid(-12, 12, 4801)
    flat = PotentialSpec.tabulated([-12, -4, 4, 12], [0, 0, 0, 0])
    s = propagate(gaussian_packet(g, 0.0, 1.0), flat, 1e-3, 1000, 1000)
    assert s.variance[-1] == pytest.approx(1.0, abs=1e-3)


def test_lam6_packet_tunnels_and_matches_exact_propagator(oracle):
    ref = oracle["lam6_packet_exact_time"]
    s = propagate(gaussian_packet(make_grid(*ref["grid"]), ref["x0"], ref["omega_w"]), LAM6, 1e-3, 2000, 10)
    for t, xm in ref["x_mean"].items():
        i = int(np.argmin(np.abs(s.times - float(t))))
        assert s.x_mean[i] == pytest.approx(xm, abs=1e-5)


def test_lam6_mean_period_near_tunnelling_time(lam6_table, oracle):
    w = math.sqrt(eval_effective(lam6_table, 0.7, "veff", 2))
    s = propagate(gaussian_packet(GRID, 0.7, w), LAM6, 1e-3, 30000, 10)
    assert s.x_mean.min() < -0.5  # mean crosses to the other well
    T = dominant_period(s)
    assert abs(T - 2 * math.pi / oracle["lam6_fine"]["gap"]) < 0.1 * T
    # conservation over 3e4 steps
    assert np.max(np.abs(s.norm - 1.0)) < 1e-10 * 3
    assert np.max(np.abs(s.energy - s.energy[0])) / abs(s.energy[0]) < 1e-8
    assert np.all(np.diff(s.times) > 0)


def test_recording_schedule():
    s = propagate(gaussian_packet(GRID, 0.7, 1.0), LAM6, 1e-3, 25, 10)
    assert s.times == pytest.approx([0.0, 0.01, 0.02, 0.025])
    assert isinstance(s, ObservableSeries)
    assert s.final_state.time == pytest.approx(0.025)
    assert np.array_equal(s.v_mean, s.p_mean)
    assert list(s.columns()) == ["t", "x_mean", "p_mean", "energy", "norm"]


def test_propagate_preconditions():
    psi = gaussian_packet(GRID, 0.7, 1.0)
    with pytest.raises(InvalidArgumentError):
        propagate(psi, LAM6, 0.0, 10)
    with pytest.raises(InvalidArgumentError):
        propagate(psi, LAM6, 1e-3, 10, 0)


def test_reflection_reported_with_time():
    g = make_grid(-4, 4, 801)
    psi = gaussian_packet(g, 0.0, 2.0, 6.0)
    with pytest.raises(ReflectionError) as info:
        propagate(psi, PotentialSpec.harmonic(0.1), 1e-3, 2000, 10)
    assert 0.0 < info.value.time < 2.0


def test_ehrenfest_identities():
    g = make_grid(-8, 8, 8001)
    dt = 1e-3
    s = propagate(gaussian_packet(g, 0.7, 1.0), LAM6, dt, 600, 1)
    dxdt = (s.x_mean[2:] - s.x_mean[:-2]) / (2 * dt)
    dpdt = (s.p_mean[2:] - s.p_mean[:-2]) / (2 * dt)
    assert np.max(np.abs(dxdt - s.p_mean[1:-1])) < 1e-5
    assert np.max(np.abs(dpdt - s.force_mean[1:-1])) < 1e-5
    # the mean force is not the force at the mean
    bare = -LAM6.gradient(s.x_mean)
    assert np.max(np.abs(s.force_mean - bare)) > 1e-2


def test_crank_nicolson_second_order():
    xs = []
    for dt in (0.02, 0.01, 0.005):
        s = propagate(gaussian_packet(GRID, 0.7, 1.0), LAM6, dt, int(round(2.0 / dt)), 10**6)
        xs.append(s.x_mean[-1])
    assert 3.5 <= abs(xs[0] - xs[1]) / abs(xs[1] - xs[2]) <= 4.5


def test_dominant_period_synthetic():
    t = np.arange(0, 20, 1e-3)
    assert dominant_period(times=t, values=np.cos(2 * t)) == pytest.approx(math.pi, abs=1e-4)
    with pytest.raises(InsufficientDataError):
        dominant_period(times=t, values=np.full_like(t, 0.3))
    with pytest.raises(InsufficientDataError):
        dominant_period(times=t[:1000], values=np.cos(2 * t[:1000]))


@given(st.floats(0.5, 5.0), st.floats(0, 2 * math.pi))
def test_dominant_period_any_phase(omega, phase):
    t = np.arange(0, 12 * math.pi / omega, 1e-3)
    T = dominant_period(times=t, values=0.3 + np.sin(omega * t + phase))
    assert T == pytest.approx(2 * math.pi / omega, rel=1e-4)
