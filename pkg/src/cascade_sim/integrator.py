"""Explicit Runge-Kutta integration for the mode-amplitude equations.

Two routes are provided:

* :func:`integrate` -- adaptive Dormand-Prince 5(4) with the free fourth-order
  continuous extension, used for every production run.
* :func:`integrate_fixed_oracle` -- classical fixed-step RK4 with no
  adaptivity and no interpolation. Tests use it as an independent check.

Both work on complex ``numpy`` state vectors of any length.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

Rhs = Callable[[float, np.ndarray], np.ndarray]


class IntegrationError(RuntimeError):
    """Raised when a step cannot be completed.

    Carries the time and state at which integration stopped.
    """

    def __init__(self, message: str, t: float, y: np.ndarray):
        super().__init__(f"{message} at t={t:.17g}")
        self.t = t
        self.y = np.array(y, copy=True)


@dataclass(frozen=True)
class IntegratorConfig:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-10
    max_step: float = 1.0
    dense_samples: int = 2001

    def violations(self) -> list[str]:
        errs = []
        for name in ("rel_tol", "abs_tol"):
            v = getattr(self, name)
            if not (0.0 < v <= 1e-3):
                errs.append(f"{name} out of (0, 1e-3]: {v!r}")
        if not self.max_step > 0.0:
            errs.append(f"max_step must be positive: {self.max_step!r}")
        if int(self.dense_samples) != self.dense_samples or self.dense_samples < 2:
            errs.append(f"dense_samples must be an integer >= 2: {self.dense_samples!r}")
        return errs

    def halved(self) -> "IntegratorConfig":
        return IntegratorConfig(self.rel_tol / 2, self.abs_tol / 2,
                                self.max_step, self.dense_samples)


@dataclass
class DenseSolution:
    """Uniformly sampled solution plus step statistics."""

    t: np.ndarray
    y: np.ndarray  # shape (len(t), n)
    n_steps: int
    n_rejected: int
    n_rhs: int


# Dormand-Prince 5(4) tableau.
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A21 = 1 / 5
_A31, _A32 = 3 / 40, 9 / 40
_A41, _A42, _A43 = 44 / 45, -56 / 15, 32 / 9
_A51, _A52, _A53, _A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
_A61, _A62, _A63, _A64, _A65 = (9017 / 3168, -355 / 33, 46732 / 5247,
                                49 / 176, -5103 / 18656)
_B1, _B3, _B4, _B5, _B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
# b - b_hat, used for the embedded error estimate
_E1, _E3, _E4, _E5, _E6, _E7 = (71 / 57600, -71 / 16695, 71 / 1920,
                                -17253 / 339200, 22 / 525, -1 / 40)

# Continuous extension: y(t + s*h) = y + h * sum_i K_i * (P_i . [s, s^2, s^3, s^4]).
_P = np.array([
    [1, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0, 0, 0, 0],
    [0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 10.0


def _check_finite(f: np.ndarray, t: float, y: np.ndarray) -> np.ndarray:
    if not np.all(np.isfinite(f)):
        raise IntegrationError("non-finite derivative", t, y)
    return f


def _initial_step(rhs: Rhs, t0: float, y0: np.ndarray, f0: np.ndarray,
                  direction_len: float, rtol: float, atol: float) -> float:
    # Hairer, Norsett & Wanner, "Solving ODEs I", II.4
    scale = atol + rtol * np.abs(y0)
    d0 = math.sqrt(np.mean(np.abs(y0 / scale) ** 2))
    d1 = math.sqrt(np.mean(np.abs(f0 / scale) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, direction_len)
    y1 = y0 + h0 * f0
    f1 = _check_finite(rhs(t0 + h0, y1), t0 + h0, y1)
    d2 = math.sqrt(np.mean(np.abs((f1 - f0) / scale) ** 2)) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1, direction_len)


def _integrate_segment(rhs: Rhs, t0: float, t1: float, y0: np.ndarray,
                       cfg: IntegratorConfig, grid: np.ndarray,
                       out: np.ndarray, stats: list[int]) -> np.ndarray:
    """Advance from t0 to t1, writing interpolated values for every grid
    point in (t0, t1] into ``out``. Returns the state at t1."""
    rtol, atol = cfg.rel_tol, cfg.abs_tol
    t = t0
    y = y0
    f = _check_finite(rhs(t, y), t, y)
    stats[2] += 1
    length = t1 - t0
    h = min(_initial_step(rhs, t, y, f, length, rtol, atol), cfg.max_step)
    stats[2] += 1
    gi = int(np.searchsorted(grid, t0, side="right"))
    ng = len(grid)
    while t < t1:
        min_step = 16 * np.spacing(max(abs(t), 1.0))
        if h < min_step:
            raise IntegrationError("step size underflow", t, y)
        last = t + h >= t1 - min_step
        if last:
            h = t1 - t
        k1 = f
        k2 = rhs(t + _C[1] * h, y + h * (_A21 * k1))
        k3 = rhs(t + _C[2] * h, y + h * (_A31 * k1 + _A32 * k2))
        k4 = rhs(t + _C[3] * h, y + h * (_A41 * k1 + _A42 * k2 + _A43 * k3))
        k5 = rhs(t + _C[4] * h, y + h * (_A51 * k1 + _A52 * k2 + _A53 * k3 + _A54 * k4))
        k6 = rhs(t + h, y + h * (_A61 * k1 + _A62 * k2 + _A63 * k3 + _A64 * k4 + _A65 * k5))
        y_new = y + h * (_B1 * k1 + _B3 * k3 + _B4 * k4 + _B5 * k5 + _B6 * k6)
        t_new = t1 if last else t + h
        k7 = rhs(t_new, y_new)
        stats[2] += 6
        if not (np.all(np.isfinite(k7)) and np.all(np.isfinite(y_new))):
            raise IntegrationError("non-finite derivative", t_new, y_new)
        err = h * (_E1 * k1 + _E3 * k3 + _E4 * k4 + _E5 * k5 + _E6 * k6 + _E7 * k7)
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err_norm = math.sqrt(np.mean(np.abs(err / scale) ** 2))
        if err_norm <= 1.0:
            while gi < ng and grid[gi] <= t_new:
                if grid[gi] == t_new:
                    out[gi] = y_new
                else:
                    s = (grid[gi] - t) / h
                    q = _P @ np.array([s, s * s, s ** 3, s ** 4])
                    K = (k1, k2, k3, k4, k5, k6, k7)
                    out[gi] = y + h * sum(q[i] * K[i] for i in range(7) if q[i] != 0.0)
                gi += 1
            t, y, f = t_new, y_new, k7
            stats[0] += 1
            factor = _MAX_FACTOR if err_norm == 0 else min(
                _MAX_FACTOR, _SAFETY * err_norm ** -0.2)
            h = min(h * factor, cfg.max_step)
        else:
            stats[1] += 1
            h *= max(_MIN_FACTOR, _SAFETY * err_norm ** -0.2)
    return y


def integrate(rhs: Rhs, y0: Sequence[complex], span: tuple[float, float],
              cfg: IntegratorConfig = IntegratorConfig(),
              breakpoints: Sequence[float] = ()) -> DenseSolution:
    """Integrate ``y' = rhs(t, y)`` over ``span`` with adaptive DOPRI5.

    The span is split at every breakpoint strictly inside it and the
    integrator restarts there, so slope discontinuities in the coefficients
    never fall inside a step. Output is sampled on ``cfg.dense_samples``
    uniformly spaced times using the continuous extension; the final sample
    is the integrator's own end state.

    Raises
    ------
    IntegrationError
        On step-size underflow or a non-finite derivative.
    """
    t0, tf = float(span[0]), float(span[1])
    if tf < t0:
        raise ValueError("span must be increasing")
    y0 = np.asarray(y0, dtype=complex)
    grid = np.linspace(t0, tf, int(cfg.dense_samples))
    out = np.empty((len(grid), len(y0)), dtype=complex)
    out[0] = y0
    stats = [0, 0, 0]
    if tf == t0:
        return DenseSolution(grid[:1], out[:1], 0, 0, 0)
    _check_finite(rhs(t0, y0), t0, y0)
    cuts = [t0] + sorted(b for b in breakpoints if t0 < b < tf) + [tf]
    y = y0
    # overflow surfaces as a non-finite state and is raised as IntegrationError
    with np.errstate(over="ignore", invalid="ignore"):
        for a, b in zip(cuts[:-1], cuts[1:]):
            y = _integrate_segment(rhs, a, b, y, cfg, grid, out, stats)
    out[-1] = y
    return DenseSolution(grid, out, *stats)


def integrate_fixed_oracle(rhs: Rhs, y0: Sequence[complex],
                           span: tuple[float, float], h: float,
                           breakpoints: Sequence[float] = ()) -> np.ndarray:
    """Classical RK4 with a fixed step; returns the final state only.

    Each segment between breakpoints must be an integer multiple of ``h`` to
    within rounding.
    """
    t0, tf = float(span[0]), float(span[1])
    y = np.asarray(y0, dtype=complex).copy()
    if tf == t0:
        return y
    if h <= 0:
        raise ValueError("h must be positive")
    cuts = [t0] + sorted(b for b in breakpoints if t0 < b < tf) + [tf]
    for a, b in zip(cuts[:-1], cuts[1:]):
        n = round((b - a) / h)
        if n < 1 or abs(n * h - (b - a)) > 1e-9 * max(b - a, 1.0):
            raise ValueError(f"step {h!r} does not divide segment [{a!r}, {b!r}]")
        for i in range(n):
            t = a + i * h
            k1 = rhs(t, y)
            k2 = rhs(t + h / 2, y + (h / 2) * k1)
            k3 = rhs(t + h / 2, y + (h / 2) * k2)
            k4 = rhs(t + h, y + h * k3)
            y = y + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(y)):
            raise IntegrationError("non-finite state", b, y)
    return y
