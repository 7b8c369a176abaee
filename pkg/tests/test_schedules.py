import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cascade_sim.model import PulseParams, SystemParams, default_pulse
from cascade_sim.schedules import (Schedule, coupling_pulse, integrated_kappa1_write,
                                   kappa1_write, kappa1_write_rate, kappa2_write,
                                   kappa_read, ode_residual, schedule_ode_residual)

TM = 12.5


def test_kappa1_write_values():
    assert kappa1_write(TM, TM, 1.0, 1.0) == 1.0
    assert kappa1_write(TM - math.log(2), TM, 1.0, 1.0) == pytest.approx(1 / 3, rel=1e-14)
    # 1 / (2 e^12.5 - 1), evaluated with mpmath at 30 digits
    assert kappa1_write(0.0, TM, 1.0, 1.0) == pytest.approx(1.86333005803177119e-6, rel=1e-13)
    assert kappa1_write(20.0, TM, 0.7, 1.0) == 0.7


def test_kappa2_write_values():
    assert kappa2_write(TM, TM, 1.0, 1.0) == 1.0
    assert kappa2_write(3.0, TM, 1.0, 0.8) == 0.8
    assert kappa2_write(TM + math.log(2), TM, 1.0, 1.0) == pytest.approx(1 / 3, rel=1e-14)


def test_large_argument_stays_finite():
    assert kappa1_write(0.0, 1e4, 1.0, 1.0) == 0.0
    assert kappa2_write(1e4, 1.0, 1.0, 1.0) == 0.0


def test_floor_clamps():
    assert kappa1_write(0.0, TM, 1.0, 1.0, floor=1e-3) == 1e-3
    assert kappa1_write(TM, TM, 1.0, 1.0, floor=1e-3) == 1.0


def test_kappa_read_values():
    assert kappa_read(TM, TM, 1.0, 1.0) == (1.0, 1.0)
    k1, k2 = kappa_read(0.0, 40.0, 1.0, 1.0)
    assert k1 == 1.0 and k2 < 1e-17


@pytest.mark.parametrize("k1m,k2m", [(1.0, 1.0), (0.6, 1.3), (2.0, 0.5)])
def test_read_is_time_reflected_write(k1m, k2m):
    for t in np.linspace(0, 2 * TM, 101):
        r = kappa_read(t, TM, k1m, k2m)
        w = (kappa1_write(2 * TM - t, TM, k1m, k2m), kappa2_write(2 * TM - t, TM, k1m, k2m))
        assert r == pytest.approx(w, rel=1e-13, abs=1e-300)


def test_read_is_label_swap_for_equal_maxima():
    for t in np.linspace(0, 25, 51):
        k1, k2 = kappa_read(t, TM, 1.0, 1.0)
        assert k1 == kappa2_write(t, TM, 1.0, 1.0)
        assert k2 == kappa1_write(t, TM, 1.0, 1.0)


def test_pulse_values():
    p = PulseParams(g0=0.5, sigma=1.0, t1=10.0, t2=40.0)
    assert coupling_pulse(10.0, p) == pytest.approx(0.5, abs=0.5 * math.exp(-450))
    mid = coupling_pulse(25.0, p)
    assert mid == pytest.approx(2 * 0.5 * math.exp(-(30.0 ** 2) / 8), rel=1e-12)


def test_pulse_symmetry_point():
    p = PulseParams(g0=1.0, sigma=math.sqrt(5), t1=0.0, t2=3.0)
    # 2 exp(-9/40), mpmath
    assert coupling_pulse(1.5, p) == pytest.approx(1.59703243751875409, rel=1e-14)


def test_default_pulse_peak():
    p = default_pulse()
    assert coupling_pulse(p.t1, p) == pytest.approx(0.32, rel=1e-12)


@given(st.floats(-50, 150))
def test_pulse_symmetric_and_bounded(t):
    p = default_pulse()
    c = 0.5 * (p.t1 + p.t2)
    assert coupling_pulse(t, p) == pytest.approx(coupling_pulse(2 * c - t, p), rel=1e-12, abs=1e-300)
    assert 0.0 <= coupling_pulse(t, p) <= 2 * p.g0


def test_residual_vanishes_on_profile():
    ts = np.linspace(0, TM, 1002)[1:-1]
    res = [abs(schedule_ode_residual(t, TM, 1.0, 1.0)) for t in ts]
    assert max(res) < 1e-10


def test_residual_detects_perturbation():
    t = TM - 0.5
    k = 1.01 * kappa1_write(t, TM, 1.0, 1.0)
    kd = 1.01 * kappa1_write_rate(t, TM, 1.0, 1.0)
    r = ode_residual(k, kd, 1.0)
    k0 = kappa1_write(t, TM, 1.0, 1.0)
    # (1.01^2 - 1.01) k0^2
    assert r == pytest.approx(0.0101 * k0 ** 2, rel=1e-10)
    assert abs(r) > 1e-4


def test_residual_unequal_maxima_closed_form():
    t, k1m, k2m = 10.0, 0.6, 1.3
    x = k2m * (TM - t)
    assert schedule_ode_residual(t, TM, k1m, k2m) == pytest.approx(
        k1m * (k1m - k2m) / (2 * math.exp(x) - 1) ** 2, rel=1e-12)


def test_finite_difference_residual_converges_second_order():
    t = 9.0

    def fd_residual(h):
        kd = (kappa1_write(t + h, TM, 1, 1) - kappa1_write(t - h, TM, 1, 1)) / (2 * h)
        return ode_residual(kappa1_write(t, TM, 1, 1), kd, 1.0)

    exact = schedule_ode_residual(t, TM, 1.0, 1.0)
    e1 = abs(fd_residual(1e-2) - exact)
    e2 = abs(fd_residual(5e-3) - exact)
    assert math.log2(e1 / e2) == pytest.approx(2.0, abs=0.05)


def test_analytic_rate_matches_finite_difference():
    for t in (1.0, 6.0, 12.0):
        h = 1e-5
        fd = (kappa1_write(t + h, TM, 1, 1) - kappa1_write(t - h, TM, 1, 1)) / (2 * h)
        assert kappa1_write_rate(t, TM, 1.0, 1.0) == pytest.approx(fd, rel=1e-8)


def test_integrated_kappa1_matches_quadrature():
    from scipy.integrate import quad

    for t in (0.0, 3.0, 12.5):
        ref = quad(lambda s: kappa1_write(s, TM, 0.8, 1.1), 0, t, epsabs=1e-15)[0]
        assert integrated_kappa1_write(t, TM, 0.8, 1.1) == pytest.approx(ref, rel=1e-10, abs=1e-15)


ts = np.linspace(0.0, 25.0, 2001)


@given(st.floats(0.1, 3.0), st.floats(0.1, 3.0), st.floats(1.0, 20.0))
def test_monotone_continuous_bounded(k1m, k2m, tm):
    k1 = np.array([kappa1_write(t, tm, k1m, k2m) for t in ts])
    k2 = np.array([kappa2_write(t, tm, k1m, k2m) for t in ts])
    assert np.all(np.diff(k1) >= 0)
    assert np.all(np.diff(k2) <= 0)
    assert np.all((k1 >= 0) & (k1 <= k1m)) and np.all((k2 >= 0) & (k2 <= k2m))
    eps = 1e-9
    assert kappa1_write(tm - eps, tm, k1m, k2m) == pytest.approx(k1m, rel=1e-6)
    assert kappa2_write(tm + eps, tm, k1m, k2m) == pytest.approx(k2m, rel=1e-6)
    r = np.array([kappa_read(t, tm, k1m, k2m) for t in ts])
    assert np.all(np.diff(r[:, 0]) <= 0) and np.all(np.diff(r[:, 1]) >= 0)


def test_schedule_object_dispatch():
    p = SystemParams(t_mid=TM, coupling=0.2)
    assert Schedule.from_params("write-kappa1", p)(0.0) == kappa1_write(0.0, TM, 1, 1)
    assert Schedule.from_params("read-kappa2", p)(3.0) == kappa_read(3.0, TM, 1, 1)[1]
    assert Schedule.from_params("constant", p)(7.0) == 0.2
    g = Schedule.from_params("gaussian-pair", p, default_pulse())
    assert g.sample([25.0])[0] == pytest.approx(0.32)
    with pytest.raises(ValueError):
        Schedule("nonsense")
    with pytest.raises(ValueError):
        Schedule("gaussian-pair")
