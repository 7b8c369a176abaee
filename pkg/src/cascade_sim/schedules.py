"""Time profiles of the cavity damping rates and the pulsed coupling.

The write protocol opens cavity 1 gradually while cavity 2 sits at its
maximum rate, then holds cavity 1 open while cavity 2 closes:

    kappa1(t) = k1m / (2 exp(k2m (t_mid - t)) - 1)   for t <= t_mid, else k1m
    kappa2(t) = k2m / (2 exp(k1m (t - t_mid)) - 1)   for t >= t_mid, else k2m

The read protocol swaps which cavity follows which profile.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .model import PulseParams, SystemParams


def _rise(x: float, k_max: float) -> float:
    # k_max / (2 e^x - 1) for x >= 0, written to stay finite for large x
    if x <= 0.0:
        return k_max
    e = math.exp(-x)
    return k_max * e / (2.0 - e)


def kappa1_write(t: float, t_mid: float, k1m: float, k2m: float,
                 floor: float = 0.0) -> float:
    """Cavity-1 damping rate for the write protocol."""
    if t > t_mid:
        return k1m
    return max(_rise(k2m * (t_mid - t), k1m), floor)


def kappa2_write(t: float, t_mid: float, k1m: float, k2m: float,
                 floor: float = 0.0) -> float:
    """Cavity-2 damping rate for the write protocol."""
    if t < t_mid:
        return k2m
    return max(_rise(k1m * (t - t_mid), k2m), floor)


def kappa_read(t: float, t_mid: float, k1m: float, k2m: float,
               floor: float = 0.0) -> tuple[float, float]:
    """(kappa1, kappa2) for the read protocol.

    Cavity 1 stays at k1m then falls; cavity 2 rises to k2m at ``t_mid``.
    """
    if t <= t_mid:
        return k1m, max(_rise(k1m * (t_mid - t), k2m), floor)
    return max(_rise(k2m * (t - t_mid), k1m), floor), k2m


def coupling_pulse(t: float, p: PulseParams) -> float:
    """G(t) = g0 [exp(-(t-t1)^2 / 2 sigma^2) + exp(-(t-t2)^2 / 2 sigma^2)]."""
    two_s2 = 2.0 * p.sigma * p.sigma
    return p.g0 * (math.exp(-(t - p.t1) ** 2 / two_s2) + math.exp(-(t - p.t2) ** 2 / two_s2))


def kappa1_write_rate(t: float, t_mid: float, k1m: float, k2m: float) -> float:
    """Analytic time derivative of :func:`kappa1_write` for t < t_mid."""
    x = k2m * (t_mid - t)
    e = math.exp(-x)
    # d/dt k1m / (2e^x - 1) = 2 k1m k2m e^x / (2e^x - 1)^2
    return 2.0 * k1m * k2m * e / (2.0 - e) ** 2


def ode_residual(kappa: float, kappa_dot: float, k2m: float) -> float:
    """kappa^2 - kappa' + k2m * kappa, zero along the optimal rising profile."""
    return kappa * kappa - kappa_dot + k2m * kappa


def schedule_ode_residual(t: float, t_mid: float, k1m: float, k2m: float) -> float:
    """Residual of the optimality condition for the write-kappa1 profile.

    Vanishes identically when ``k1m == k2m``. For unequal maxima the closed
    form only satisfies it up to ``k1m (k1m - k2m) / (2e^x - 1)^2``.
    """
    return ode_residual(kappa1_write(t, t_mid, k1m, k2m),
                        kappa1_write_rate(t, t_mid, k1m, k2m), k2m)


def integrated_kappa1_write(t: float, t_mid: float, k1m: float, k2m: float) -> float:
    """Closed form of the integral of kappa1_write from 0 to ``t`` (t <= t_mid)."""
    # antiderivative of 1/(2e^{a u} - 1) in u is ln(1 - e^{-a u}/2) / a
    def F(u: float) -> float:
        return math.log1p(-0.5 * math.exp(-k2m * u)) / k2m

    return k1m * (F(t_mid) - F(t_mid - t))


KINDS = ("write-kappa1", "write-kappa2", "read-kappa1", "read-kappa2",
         "constant", "gaussian-pair")


@dataclass(frozen=True)
class Schedule:
    """A named time profile with its parameter snapshot.

    ``value`` holds the level of a ``constant`` schedule; ``pulse`` the
    parameters of a ``gaussian-pair``.
    """

    kind: str
    t_mid: float = 0.0
    k1m: float = 1.0
    k2m: float = 1.0
    floor: float = 0.0
    value: float = 0.0
    pulse: PulseParams | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown schedule kind {self.kind!r}")
        if self.kind == "gaussian-pair" and self.pulse is None:
            raise ValueError("gaussian-pair schedule needs pulse parameters")

    @classmethod
    def from_params(cls, kind: str, params: SystemParams,
                    pulse: PulseParams | None = None) -> "Schedule":
        return cls(kind, params.t_mid, params.kappa1_max, params.kappa2_max,
                   params.kappa_floor, params.coupling, pulse)

    def __call__(self, t: float) -> float:
        k = self.kind
        if k == "write-kappa1":
            return kappa1_write(t, self.t_mid, self.k1m, self.k2m, self.floor)
        if k == "write-kappa2":
            return kappa2_write(t, self.t_mid, self.k1m, self.k2m, self.floor)
        if k == "read-kappa1":
            return kappa_read(t, self.t_mid, self.k1m, self.k2m, self.floor)[0]
        if k == "read-kappa2":
            return kappa_read(t, self.t_mid, self.k1m, self.k2m, self.floor)[1]
        if k == "constant":
            return self.value
        return coupling_pulse(t, self.pulse)

    def sample(self, ts) -> np.ndarray:
        return np.array([self(float(t)) for t in np.atleast_1d(ts)])


def protocol_rates(kind, params: SystemParams,
                   pulse: PulseParams | None = None) -> Callable[[float], tuple[float, float, float]]:
    """Return ``t -> (kappa1, kappa2, G)`` for a protocol."""
    from .model import ProtocolKind

    kind = ProtocolKind.parse(kind)
    tm, k1m, k2m, fl = params.t_mid, params.kappa1_max, params.kappa2_max, params.kappa_floor
    if kind is ProtocolKind.READ:
        G = params.coupling

        def rates(t):
            k1, k2 = kappa_read(t, tm, k1m, k2m, fl)
            return k1, k2, G
    elif kind is ProtocolKind.WRITE:
        G = params.coupling

        def rates(t):
            return kappa1_write(t, tm, k1m, k2m, fl), kappa2_write(t, tm, k1m, k2m, fl), G
    else:
        if pulse is None:
            raise ValueError("memory protocol needs pulse parameters")

        def rates(t):
            return (kappa1_write(t, tm, k1m, k2m, fl), kappa2_write(t, tm, k1m, k2m, fl),
                    coupling_pulse(t, pulse))
    return rates
