"""Efficiency and fidelity functionals over trajectories."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

from scipy import integrate as _quad

from .model import ProtocolKind, Trajectory
from .schedules import Schedule, integrated_kappa1_write


class UndefinedEfficiency(ValueError):
    """The source mode starts empty, so no efficiency can be formed."""


@dataclass(frozen=True)
class EfficiencyReport:
    protocol: ProtocolKind
    eta: float
    n1: float
    nb: float
    n2: float
    leaked: float
    initial: float

    @property
    def balance_residual(self) -> float:
        return self.initial - (self.n1 + self.nb + self.n2 + self.leaked)


def _report(traj: Trajectory, source: float, target: float) -> EfficiencyReport:
    if source <= 0.0:
        raise UndefinedEfficiency("initial source occupation is zero")
    n1, nb, n2 = traj.final.occupations
    return EfficiencyReport(
        protocol=traj.protocol, eta=target / source, n1=n1, nb=nb, n2=n2,
        leaked=float(traj.leaked_cum[-1]), initial=float(traj.total_occupation[0]))


def write_efficiency(traj: Trajectory) -> EfficiencyReport:
    """eta_w = |beta(t_f)|^2 / |alpha1(0)|^2."""
    return _report(traj, abs(traj.alpha1[0]) ** 2, abs(traj.beta[-1]) ** 2)


def read_efficiency(traj: Trajectory) -> EfficiencyReport:
    """eta_r = |alpha1(t_f)|^2 / |beta(0)|^2."""
    return _report(traj, abs(traj.beta[0]) ** 2, abs(traj.alpha1[-1]) ** 2)


def memory_efficiency(traj: Trajectory) -> EfficiencyReport:
    """Cavity-2 occupation after the read-out pulse over |alpha1(0)|^2."""
    return _report(traj, abs(traj.alpha1[0]) ** 2, abs(traj.alpha2[-1]) ** 2)


def efficiency(traj: Trajectory) -> EfficiencyReport:
    """Dispatch on the trajectory's protocol."""
    return {
        ProtocolKind.WRITE: write_efficiency,
        ProtocolKind.READ: read_efficiency,
        ProtocolKind.MEMORY: memory_efficiency,
    }[traj.protocol](traj)


def two_cavity_efficiency_quadrature(k1_profile: "Schedule | Callable[[float], float]",
                                     k2m: float, t: float,
                                     epsabs: float = 1e-14, epsrel: float = 1e-12) -> float:
    """Transfer efficiency of the bare two-cavity problem by nested quadrature.

    Evaluates

        sqrt(eta) = sqrt(k2m) int_0^t sqrt(k1(t')) exp(-k2m (t - t')/2)
                                     exp(-1/2 int_0^t' k1(t'') dt'') dt'

    with cavity 2 held at ``k2m``. For a write-kappa1 :class:`Schedule`
    without a floor the inner integral is taken in closed form; any other
    profile gets an inner numerical quadrature.
    """
    if t <= 0.0:
        return 0.0
    closed = (isinstance(k1_profile, Schedule) and k1_profile.kind == "write-kappa1"
              and k1_profile.floor == 0.0 and t <= k1_profile.t_mid)
    if closed:
        s = k1_profile

        def inner(tp: float) -> float:
            return integrated_kappa1_write(tp, s.t_mid, s.k1m, s.k2m)
    else:
        def inner(tp: float) -> float:
            if tp <= 0.0:
                return 0.0
            return _quad.quad(k1_profile, 0.0, tp, epsabs=epsabs, epsrel=epsrel,
                              limit=200)[0]

    def integrand(tp: float) -> float:
        k1 = k1_profile(tp)
        if k1 <= 0.0:
            return 0.0
        return math.sqrt(k1) * math.exp(-0.5 * k2m * (t - tp) - 0.5 * inner(tp))

    # the integrand is concentrated within a few 1/k2m of t
    pts = [p for p in (t - 5.0 / max(k2m, 1e-300), t - 20.0 / max(k2m, 1e-300)) if 0 < p < t]
    amp = _quad.quad(integrand, 0.0, t, epsabs=epsabs, epsrel=epsrel, limit=500,
                     points=pts or None)[0]
    return k2m * amp * amp


def process_fidelity(eta: float, phi: float = 0.0) -> float:
    """Single-excitation process fidelity (1 + eta + 2 sqrt(eta) cos phi) / 4.

    This is the normalised form, bounded by 1. Squaring the numerator would
    give 4 at eta = 1, phi = 0.
    """
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"eta out of [0,1]: {eta!r}")
    return (1.0 + eta + 2.0 * math.sqrt(eta) * math.cos(phi)) / 4.0


def inefficiency_estimate(t_final: float, k_m: float = 1.0) -> float:
    """Truncation-loss estimate 1 - eta ~ exp(-k_m t_f / 2) for gamma = 0."""
    return math.exp(-0.5 * k_m * t_final)
