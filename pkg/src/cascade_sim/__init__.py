"""Simulation of cascaded optomechanical state transfer and quantum memory.

Rates are in units of the maximum cavity damping rate, times in its inverse.
"""

__version__ = "0.1.0"

from .dynamics import leaked_power, memory_rhs, read_rhs, simulate, write_rhs
from .integrator import IntegrationError, IntegratorConfig, integrate, integrate_fixed_oracle
from .metrics import (EfficiencyReport, efficiency, inefficiency_estimate, memory_efficiency,
                      process_fidelity, read_efficiency, two_cavity_efficiency_quadrature,
                      write_efficiency)
from .model import (ModeState, ProtocolKind, PulseParams, SystemParams, Trajectory,
                    ValidationError, default_params, default_pulse, from_lab_units, swap_pulse,
                    to_lab_units, validate)
