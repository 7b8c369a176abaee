"""Right-hand sides of the classical mode equations for each protocol.

Write (and memory, with G -> G(t)):

    a1' = -(k1 + r1) a1 / 2
    b'  = -gamma b / 2 - i G a2
    a2' = -(k2 + r2) a2 / 2 - i G b + sqrt(eta_tr k1 k2) a1

Read (the cascade runs from cavity 2 into cavity 1):

    a1' = -(k1 + r1) a1 / 2 + sqrt(eta_tr k1 k2) a2
    b'  = -gamma b / 2 - i G a2
    a2' = -(k2 + r2) a2 / 2 - i G b

``r1``, ``r2`` are the intrinsic cavity loss rates 1/T1.

The integrated system carries two real accumulators next to the amplitudes:
energy leaving through the open port, and energy lost to every other
channel. Their rates sum exactly to -d/dt(|a1|^2 + |b|^2 + |a2|^2).
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .integrator import IntegratorConfig, integrate
from .model import (INITIAL_STATE, ModeState, ProtocolKind, PulseParams,
                    SystemParams, Trajectory, validate, validate_pulse)
from .schedules import protocol_rates


def _derivs(kind: ProtocolKind, a1: complex, b: complex, a2: complex,
            k1: float, k2: float, G: float, p: SystemParams):
    feed = math.sqrt(p.eta_tr * k1 * k2)
    da1 = -0.5 * (k1 + p.t1_cav1_inv) * a1
    db = -0.5 * p.gamma * b - 1j * G * a2
    da2 = -0.5 * (k2 + p.t1_cav2_inv) * a2 - 1j * G * b
    if kind is ProtocolKind.READ:
        da1 += feed * a2
    else:
        da2 += feed * a1
    return da1, db, da2


def _loss_rates(kind: ProtocolKind, a1: complex, b: complex, a2: complex,
                k1: float, k2: float, p: SystemParams) -> tuple[float, float]:
    """(open-port power, all other losses) for the current state."""
    s1, s2 = math.sqrt(k1), math.sqrt(k2)
    root_eta = math.sqrt(p.eta_tr)
    n1, n2 = abs(a1) ** 2, abs(a2) ** 2
    if kind is ProtocolKind.READ:
        port = abs(root_eta * s2 * a2 - s1 * a1) ** 2
        channel = (1.0 - p.eta_tr) * k2 * n2
    else:
        port = abs(root_eta * s1 * a1 - s2 * a2) ** 2
        channel = (1.0 - p.eta_tr) * k1 * n1
    other = p.gamma * abs(b) ** 2 + p.t1_cav1_inv * n1 + p.t1_cav2_inv * n2 + channel
    return port, other


def _as_state(s) -> tuple[complex, complex, complex]:
    if isinstance(s, ModeState):
        return s.alpha1, s.beta, s.alpha2
    return complex(s[0]), complex(s[1]), complex(s[2])


def _rhs_at(kind: ProtocolKind, t: float, s, p: SystemParams,
            pulse: PulseParams | None) -> ModeState:
    k1, k2, G = protocol_rates(kind, p, pulse)(t)
    return ModeState(*_derivs(kind, *_as_state(s), k1, k2, G, p))


def write_rhs(t: float, s, p: SystemParams) -> ModeState:
    """Time derivative of (alpha1, beta, alpha2) under the write protocol."""
    return _rhs_at(ProtocolKind.WRITE, t, s, p, None)


def read_rhs(t: float, s, p: SystemParams) -> ModeState:
    """Time derivative of (alpha1, beta, alpha2) under the read protocol."""
    return _rhs_at(ProtocolKind.READ, t, s, p, None)


def memory_rhs(t: float, s, p: SystemParams, pulse: PulseParams) -> ModeState:
    """Write-protocol derivative with the coupling replaced by the pulse train."""
    return _rhs_at(ProtocolKind.MEMORY, t, s, p, pulse)


def leaked_power(t: float, s, p: SystemParams, kind,
                 pulse: PulseParams | None = None) -> tuple[float, float]:
    """Instantaneous (output-port power, mechanical loss power gamma |beta|^2).

    Only defined for a lossless channel; raises ``ValueError`` otherwise.
    """
    if not p.lossless:
        raise ValueError("leaked_power requires a lossless channel "
                         "(eta_tr = 1, no intrinsic cavity loss)")
    kind = ProtocolKind.parse(kind)
    a1, b, a2 = _as_state(s)
    k1, k2, _ = protocol_rates(kind, p, pulse)(t)
    port, other = _loss_rates(kind, a1, b, a2, k1, k2, p)
    return port, other


def make_rhs(kind, p: SystemParams, pulse: PulseParams | None = None,
             accumulate: bool = True) -> Callable[[float, np.ndarray], np.ndarray]:
    """Vector RHS for the integrator.

    With ``accumulate`` the state is ``[a1, b, a2, port, other]``, the last
    two integrating the loss rates; otherwise just the three amplitudes.
    """
    kind = ProtocolKind.parse(kind)
    rates = protocol_rates(kind, p, pulse)

    if accumulate:
        def rhs(t: float, y: np.ndarray) -> np.ndarray:
            a1, b, a2 = complex(y[0]), complex(y[1]), complex(y[2])
            k1, k2, G = rates(t)
            d = _derivs(kind, a1, b, a2, k1, k2, G, p)
            port, other = _loss_rates(kind, a1, b, a2, k1, k2, p)
            return np.array((d[0], d[1], d[2], port, other))
    else:
        def rhs(t: float, y: np.ndarray) -> np.ndarray:
            k1, k2, G = rates(t)
            return np.array(_derivs(kind, complex(y[0]), complex(y[1]), complex(y[2]),
                                    k1, k2, G, p))
    return rhs


def initial_state(kind) -> ModeState:
    return INITIAL_STATE[ProtocolKind.parse(kind)]


def breakpoints(kind, p: SystemParams) -> tuple[float, ...]:
    """Times where the schedules change slope; the integrator restarts there."""
    return (p.t_mid,)


def simulate(kind, p: SystemParams, pulse: PulseParams | None = None,
             cfg: IntegratorConfig = IntegratorConfig(),
             s0: ModeState | None = None) -> Trajectory:
    """Integrate one protocol run from its initial condition to ``t_final``."""
    kind = ProtocolKind.parse(kind)
    validate(p)
    if kind is ProtocolKind.MEMORY:
        if pulse is None:
            raise ValueError("memory protocol needs pulse parameters")
        validate_pulse(pulse, p.t_final)
    s0 = initial_state(kind) if s0 is None else s0
    y0 = np.array([s0.alpha1, s0.beta, s0.alpha2, 0.0, 0.0], dtype=complex)
    sol = integrate(make_rhs(kind, p, pulse), y0, (0.0, p.t_final), cfg,
                    breakpoints(kind, p))
    rates = protocol_rates(kind, p, pulse)
    r = np.array([rates(float(t)) for t in sol.t]).reshape(-1, 3)
    return Trajectory(
        protocol=kind, params=p, t=sol.t,
        alpha1=sol.y[:, 0].copy(), beta=sol.y[:, 1].copy(), alpha2=sol.y[:, 2].copy(),
        kappa1=r[:, 0], kappa2=r[:, 1], g=r[:, 2],
        # dense-output noise (~tolerance) can dip where the loss rate vanishes
        leaked_port=np.maximum.accumulate(sol.y[:, 3].real),
        dissipated=np.maximum.accumulate(sol.y[:, 4].real),
        pulse=pulse,
        integrator={"rel_tol": cfg.rel_tol, "abs_tol": cfg.abs_tol,
                    "max_step": cfg.max_step, "dense_samples": cfg.dense_samples,
                    "steps": sol.n_steps, "rejected": sol.n_rejected,
                    "rhs_evals": sol.n_rhs},
    )
