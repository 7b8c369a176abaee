import math

import numpy as np
import pytest

from cascade_sim.dynamics import make_rhs
from cascade_sim.integrator import (IntegrationError, IntegratorConfig, integrate,
                                    integrate_fixed_oracle)
from cascade_sim.model import SystemParams, default_params


def decay(kappa):
    return lambda t, y: -0.5 * kappa * y


def test_pure_decay_adaptive():
    cfg = IntegratorConfig(dense_samples=501)
    sol = integrate(decay(1.3), [1.0], (0.0, 10.0), cfg)
    exact = np.exp(-1.3 * sol.t)
    err = np.abs(np.abs(sol.y[:, 0]) ** 2 - exact)
    assert np.all(err <= 10 * (cfg.rel_tol * exact + cfg.abs_tol))


def rabi(G):
    # frozen schedules, gamma = 0: only the -iG exchange between b and a2
    def rhs(t, y):
        return np.array([0.0, -1j * G * y[2], -1j * G * y[1]])
    return rhs


def test_rabi_exchange_matches_analytic():
    G = 0.3
    sol = integrate(rabi(G), [0, 0, 1], (0.0, 20.0))
    assert np.allclose(np.abs(sol.y[:, 1]) ** 2, np.sin(G * sol.t) ** 2, atol=1e-9)
    assert np.allclose(np.abs(sol.y[:, 2]) ** 2, np.cos(G * sol.t) ** 2, atol=1e-9)


def test_rabi_exchange_through_protocol_rhs():
    # write RHS with both cavities closed reduces to the same exchange
    p = SystemParams(kappa1_max=0.0, kappa2_max=0.0, gamma=0.0, coupling=0.25)
    sol = integrate(make_rhs("write", p, accumulate=False), [0, 0, 1], (0.0, 15.0),
                    breakpoints=[p.t_mid])
    assert np.allclose(np.abs(sol.y[:, 1]) ** 2 + np.abs(sol.y[:, 2]) ** 2, 1.0, atol=1e-9)
    assert np.allclose(np.abs(sol.y[:, 1]) ** 2, np.sin(0.25 * sol.t) ** 2, atol=1e-9)


def test_fixed_oracle_fourth_order():
    T = 8.0
    errs = []
    for h in (0.1, 0.05, 0.025):
        y = integrate_fixed_oracle(decay(1.0), [1.0], (0.0, T), h)
        errs.append(abs(y[0] - math.exp(-T / 2)))
    orders = [math.log2(errs[i] / errs[i + 1]) for i in range(2)]
    for q in orders:
        assert q == pytest.approx(4.0, abs=0.1)


def test_fixed_oracle_zero_span():
    y0 = np.array([1 + 2j, 3j, 0.5])
    assert np.array_equal(integrate_fixed_oracle(decay(1.0), y0, (2.0, 2.0), 0.1), y0)


def test_fixed_oracle_rejects_non_dividing_step():
    with pytest.raises(ValueError):
        integrate_fixed_oracle(decay(1.0), [1.0], (0.0, 1.0), 0.3)


@pytest.mark.slow
def test_adaptive_matches_fixed_oracle_on_write_defaults():
    p = default_params("write")
    rhs = make_rhs("write", p, accumulate=False)
    y = integrate_fixed_oracle(rhs, [1, 0, 0], (0.0, p.t_final), 1e-4, [p.t_mid])
    sol = integrate(rhs, [1, 0, 0], (0.0, p.t_final), breakpoints=[p.t_mid])
    assert abs(abs(sol.y[-1, 1]) ** 2 - abs(y[1]) ** 2) < 1e-6
    assert np.max(np.abs(sol.y[-1] - y)) < 1e-8


def test_zero_length_span():
    sol = integrate(decay(1.0), [1.0], (3.0, 3.0))
    assert sol.t.tolist() == [3.0] and sol.y[0, 0] == 1.0


def test_nan_rhs_raises_immediately():
    with pytest.raises(IntegrationError) as exc:
        integrate(lambda t, y: np.array([np.nan]), [1.0], (0.0, 1.0))
    assert exc.value.t == 0.0


def test_nan_midway_reports_time():
    def rhs(t, y):
        return np.array([np.inf if t > 0.5 else -y[0]])
    with pytest.raises(IntegrationError) as exc:
        integrate(rhs, [1.0], (0.0, 1.0))
    assert exc.value.t > 0.5


def test_step_underflow():
    # finite-time blow-up y' = y^2 from y(0)=1 at t = 1
    with pytest.raises(IntegrationError, match="underflow|non-finite"):
        integrate(lambda t, y: y * y, [1.0], (0.0, 2.0), IntegratorConfig(1e-8, 1e-8))


def test_breakpoint_is_sampled_exactly():
    sol = integrate(decay(1.0), [1.0], (0.0, 2.0), IntegratorConfig(dense_samples=5),
                    breakpoints=[1.0])
    assert sol.t[2] == 1.0
    assert sol.y[2, 0] == pytest.approx(math.exp(-0.5), rel=1e-10)


def test_deterministic():
    p = default_params("write")
    rhs = make_rhs("write", p)
    a = integrate(rhs, [1, 0, 0, 0, 0], (0.0, 25.0), breakpoints=[p.t_mid])
    b = integrate(rhs, [1, 0, 0, 0, 0], (0.0, 25.0), breakpoints=[p.t_mid])
    assert np.array_equal(a.y, b.y)


def test_dense_output_accuracy_between_steps():
    # few, long steps: dense samples rely on the continuous extension
    cfg = IntegratorConfig(rel_tol=1e-8, abs_tol=1e-8, max_step=5.0, dense_samples=1001)
    sol = integrate(decay(1.0), [1.0], (0.0, 10.0), cfg)
    assert sol.n_steps < 100
    assert np.max(np.abs(sol.y[:, 0] - np.exp(-0.5 * sol.t))) < 1e-7


@pytest.mark.parametrize("field,value", [("rel_tol", 0.0), ("abs_tol", 1e-2),
                                         ("dense_samples", 1), ("max_step", -1.0)])
def test_config_violations(field, value):
    cfg = IntegratorConfig(**{field: value})
    assert any(field in e for e in cfg.violations())
