"""Parameter sweeps, occupation traces and loss studies.

Sweeps evaluate one independent protocol run per grid point. With more than
one worker the points are farmed out to a process pool; results always come
back in grid order.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .dynamics import initial_state, simulate
from .integrator import IntegrationError, IntegratorConfig
from .metrics import efficiency
from .schedules import protocol_rates
from .model import (ProtocolKind, PulseParams, SystemParams,
                    Trajectory, ValidationError, validate)

SWEEP_PARAMETERS = ("coupling", "q_factor", "t_final")


@dataclass(frozen=True)
class SweepSpec:
    protocol: ProtocolKind
    parameter: str
    start: float
    stop: float
    points: int
    params: SystemParams
    scale: str = "linear"
    pulse: PulseParams | None = None
    integrator: IntegratorConfig = IntegratorConfig()

    def __post_init__(self):
        object.__setattr__(self, "protocol", ProtocolKind.parse(self.protocol))

    def violations(self) -> list[str]:
        errs = []
        if self.parameter not in SWEEP_PARAMETERS:
            errs.append(f"parameter must be one of {', '.join(SWEEP_PARAMETERS)}: "
                        f"{self.parameter!r}")
        if self.points < 2:
            errs.append(f"points must be >= 2: {self.points!r}")
        if self.scale not in ("linear", "log"):
            errs.append(f"scale must be linear or log: {self.scale!r}")
        if self.stop < self.start:
            errs.append("sweep max must not be below min")
        if self.scale == "log" and self.start <= 0:
            errs.append("log sweep needs a positive min")
        if self.parameter == "coupling" and self.start < 0:
            errs.append("coupling must be >= 0")
        if self.parameter in ("q_factor", "t_final") and self.start <= 0:
            errs.append(f"{self.parameter} must be > 0")
        if self.parameter == "t_final" and self.protocol is ProtocolKind.MEMORY \
                and self.pulse is None:
            errs.append("memory sweep needs pulse parameters")
        return errs

    def grid(self) -> np.ndarray:
        if self.scale == "log":
            return np.geomspace(self.start, self.stop, self.points)
        return np.linspace(self.start, self.stop, self.points)


@dataclass(frozen=True)
class SweepResult:
    parameter: str
    values: np.ndarray
    etas: np.ndarray
    metadata: dict[str, Any] = field(default_factory=dict)

    @property
    def argmax(self) -> tuple[float, float]:
        i = int(np.argmax(self.etas))
        return float(self.values[i]), float(self.etas[i])

    def rows(self) -> list[tuple[float, float]]:
        return list(zip(self.values.tolist(), self.etas.tolist()))


def scale_to_t_final(params: SystemParams, pulse: PulseParams | None,
                     t_final: float) -> tuple[SystemParams, PulseParams | None]:
    """Stretch ``t_mid`` and the pulse centres proportionally to a new
    procedure time; the pulse width is kept."""
    r = t_final / params.t_final
    p = params.replace(t_final=t_final, t_mid=params.t_mid * r)
    if pulse is not None:
        pulse = pulse.replace(t1=pulse.t1 * r, t2=pulse.t2 * r)
    return p, pulse


def point_params(spec: SweepSpec, value: float) -> tuple[SystemParams, PulseParams | None]:
    """Parameters for one grid point."""
    p, pulse = spec.params, spec.pulse
    if spec.parameter == "coupling":
        return p.replace(coupling=float(value)), pulse
    if spec.parameter == "q_factor":
        gamma = 0.0 if math.isinf(value) else p.omega_m / float(value)
        return p.replace(gamma=gamma), pulse
    return scale_to_t_final(p, pulse, float(value))


def _eval_point(args) -> float:
    kind, p, pulse, cfg = args
    return efficiency(simulate(kind, p, pulse, cfg)).eta


def default_workers() -> int:
    env = os.environ.get("CASCADE_SIM_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def run_sweep(spec: SweepSpec, workers: int | None = None) -> SweepResult:
    """Evaluate the protocol efficiency at every grid point of ``spec``."""
    errs = spec.violations()
    if errs:
        raise ValidationError(errs)
    validate(spec.params)
    grid = spec.grid()
    jobs = [(spec.protocol, *point_params(spec, v), spec.integrator) for v in grid]
    workers = default_workers() if workers is None else max(1, int(workers))
    try:
        if workers == 1 or len(jobs) == 1:
            etas = [_eval_point(j) for j in jobs]
        else:
            with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as ex:
                etas = list(ex.map(_eval_point, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    except IntegrationError as exc:
        i = _failed_index(jobs)
        raise IntegrationError(f"sweep point {spec.parameter}={grid[i]!r}: {exc}",
                               exc.t, exc.y) from exc
    return SweepResult(
        parameter=spec.parameter, values=grid, etas=np.array(etas),
        metadata={"protocol": spec.protocol.value, "scale": spec.scale,
                  "rel_tol": spec.integrator.rel_tol, "abs_tol": spec.integrator.abs_tol},
    )


def _failed_index(jobs) -> int:
    for i, j in enumerate(jobs):
        try:
            _eval_point(j)
        except IntegrationError:
            return i
    return 0


def sweep_coupling(spec: SweepSpec, workers: int | None = None) -> SweepResult:
    """Efficiency versus constant coupling G for the write or read protocol."""
    if spec.protocol is ProtocolKind.MEMORY:
        raise ValueError("coupling sweeps apply to the write and read protocols")
    return run_sweep(_with_parameter(spec, "coupling"), workers)


def sweep_qfactor(spec: SweepSpec, workers: int | None = None) -> SweepResult:
    """Efficiency versus mechanical Q, with gamma = omega_m / Q per point."""
    if spec.protocol is ProtocolKind.MEMORY:
        raise ValueError("Q sweeps apply to the write and read protocols")
    return run_sweep(_with_parameter(spec, "q_factor"), workers)


def sweep_t_final(spec: SweepSpec, workers: int | None = None) -> SweepResult:
    """Efficiency versus procedure time, schedules and pulses stretched."""
    return run_sweep(_with_parameter(spec, "t_final"), workers)


def _with_parameter(spec: SweepSpec, name: str) -> SweepSpec:
    if spec.parameter == name:
        return spec
    return SweepSpec(spec.protocol, name, spec.start, spec.stop, spec.points,
                     spec.params, spec.scale, spec.pulse, spec.integrator)


def saturation(result: SweepResult, asymptote: float, tol: float) -> dict[str, float]:
    """Summary of a Q sweep: last value, and the smallest Q beyond which
    every point stays within ``tol`` of ``asymptote``."""
    close = np.abs(result.etas - asymptote) <= tol
    knee = math.nan
    for i in range(len(close)):
        if close[i:].all():
            knee = float(result.values[i])
            break
    return {"saturation": float(result.etas[-1]), "asymptote": asymptote, "knee": knee}


TRACE_COLUMNS = ("t", "n1", "nb", "n2", "kappa1", "kappa2", "g", "leaked")


def occupation_trace(protocol, params: SystemParams, pulse: PulseParams | None = None,
                     cfg: IntegratorConfig = IntegratorConfig()) -> tuple[Trajectory, np.ndarray]:
    """Dense occupation table for one run.

    Returns the trajectory and an array whose columns follow
    :data:`TRACE_COLUMNS`. A zero procedure time yields the single initial row.
    """
    kind = ProtocolKind.parse(protocol)
    if params.t_final == 0.0:
        s = initial_state(kind)
        k1, k2, g = protocol_rates(kind, params, pulse)(0.0)
        row = np.array([[0.0, *s.occupations, k1, k2, g, 0.0]])
        return None, row
    traj = simulate(kind, params, pulse, cfg)
    table = np.column_stack([traj.t, traj.n1, traj.nb, traj.n2, traj.kappa1,
                             traj.kappa2, traj.g, traj.leaked_cum])
    return traj, table


@dataclass(frozen=True)
class LossRow:
    eta_tr: float
    t1_inv: float
    eta_sim: float
    eta_lossless: float
    estimate: float

    @property
    def ratio(self) -> float:
        return self.eta_sim / self.estimate


def loss_estimate(eta_lossless: float, params: SystemParams) -> float:
    """First-order multiplicative loss rule:
    eta -> eta * eta_tr * exp(-t_f/2T1_cav1) * exp(-t_f/2T1_cav2)."""
    t = params.t_final
    return (eta_lossless * params.eta_tr
            * math.exp(-0.5 * t * params.t1_cav1_inv) * math.exp(-0.5 * t * params.t1_cav2_inv))


def loss_study(params: SystemParams, eta_tr_values: Sequence[float],
               t1_inv_values: Sequence[float], protocol=ProtocolKind.WRITE,
               pulse: PulseParams | None = None,
               cfg: IntegratorConfig = IntegratorConfig()) -> list[LossRow]:
    """Simulated efficiency against the multiplicative loss estimate.

    Every combination of transmission efficiency and intrinsic loss rate
    (applied to both cavities) is run.
    """
    kind = ProtocolKind.parse(protocol)
    base = params.replace(eta_tr=1.0, t1_cav1_inv=0.0, t1_cav2_inv=0.0)
    eta0 = efficiency(simulate(kind, base, pulse, cfg)).eta
    rows = []
    for etr in eta_tr_values:
        for r in t1_inv_values:
            p = base.replace(eta_tr=float(etr), t1_cav1_inv=float(r), t1_cav2_inv=float(r))
            eta = eta0 if p.lossless else efficiency(simulate(kind, p, pulse, cfg)).eta
            rows.append(LossRow(float(etr), float(r), eta, eta0, loss_estimate(eta0, p)))
    return rows
