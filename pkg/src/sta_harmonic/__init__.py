"""Shortcut-to-adiabaticity trajectories for the time-dependent harmonic
oscillator and the energy cost of running them fast."""

__version__ = "0.1.0"

from .trajectories import (ExpansionSpec, RejectedTrajectory, bang_bang_min_time,  # noqa: E402
                           bang_bang_single, bang_bang_trajectory, make_hybrid,
                           make_polynomial, make_quasi_optimal, make_trajectory,
                           omega_squared_from_b)
from .energetics import (energy_bound, energy_bound_asymptotic, energy_report,  # noqa: E402
                         instantaneous_energy, instantaneous_std, time_averaged_energy,
                         time_averaged_std)

__all__ = [
    "ExpansionSpec", "RejectedTrajectory", "bang_bang_min_time", "bang_bang_single",
    "bang_bang_trajectory", "make_hybrid", "make_polynomial", "make_quasi_optimal",
    "make_trajectory", "omega_squared_from_b", "energy_bound", "energy_bound_asymptotic",
    "energy_report", "instantaneous_energy", "instantaneous_std", "time_averaged_energy",
    "time_averaged_std",
]
