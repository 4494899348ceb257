"""Energetics of counterdiabatic (transitionless) driving of the oscillator.

The driven state follows the instantaneous eigenstates exactly, so only
closed-form scalar quantities are needed: the coupling omega_dot/(4 omega) of
the squeezing term, the mean energy and the energy spread.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.interpolate import PchipInterpolator

from .numerics import integrate

QUAD_TOL = 1e-12
SIGN_GRID = 2001


@dataclass(frozen=True)
class FrequencyRamp:
    omega: Callable[[np.ndarray], np.ndarray]
    omega_dot: Callable[[np.ndarray], np.ndarray]
    tf: float
    kind: str = "user"
    knots: tuple[float, ...] = ()

    def __post_init__(self):
        grid = np.linspace(0.0, self.tf, SIGN_GRID)
        if np.min(self.omega(grid)) <= 0.0:
            raise ValueError("ramp frequency must stay positive on [0, tf]")

    @classmethod
    def linear(cls, omega0: float, omegaf: float, tf: float) -> "FrequencyRamp":
        slope = (omegaf - omega0) / tf
        return cls(omega=lambda t: omega0 + slope * np.asarray(t, dtype=float),
                   omega_dot=lambda t: np.full_like(np.asarray(t, dtype=float), slope),
                   tf=tf, kind="linear")

    @classmethod
    def constant(cls, omega0: float, tf: float) -> "FrequencyRamp":
        return cls.linear(omega0, omega0, tf)

    @classmethod
    def from_samples(cls, t, omega) -> "FrequencyRamp":
        """Monotone-preserving cubic interpolation of sampled frequencies."""
        t = np.asarray(t, dtype=float)
        if t[0] != 0.0:
            raise ValueError("samples must start at t = 0")
        spline = PchipInterpolator(t, np.asarray(omega, dtype=float))
        deriv = spline.derivative()
        return cls(omega=spline, omega_dot=deriv, tf=float(t[-1]), kind="sampled",
                   knots=tuple(t[1:-1]))

    @property
    def omega0(self) -> float:
        return float(self.omega(0.0))

    @property
    def omegaf(self) -> float:
        return float(self.omega(self.tf))


@dataclass(frozen=True)
class TransitionlessReport:
    avg_energy: float
    avg_std: float
    instantaneous_std_max: float
    n: int


def _check_t(ramp: FrequencyRamp, t):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0.0) or np.any(t > ramp.tf * (1 + 1e-12)):
        raise ValueError(f"t outside [0, {ramp.tf}]")
    return t


def cd_coupling(ramp: FrequencyRamp, t):
    """omega_dot / (4 omega): the coefficient of the squeezing term."""
    t = _check_t(ramp, t)
    w = ramp.omega(t)
    if np.any(w <= 0.0):
        raise ValueError("ramp frequency must be positive")
    return ramp.omega_dot(t) / (4.0 * w)


def mean_energy(ramp: FrequencyRamp, n: int = 0) -> float:
    """Time-averaged energy (n + 1/2) <omega>."""
    total = integrate(ramp.omega, (0.0, ramp.tf), rel_tol=QUAD_TOL, breakpoints=ramp.knots)
    return (n + 0.5) * total / ramp.tf


def _spread_factor(n: int) -> float:
    return math.sqrt(2.0 * (n * n + n + 1)) / 4.0


def std_energy(ramp: FrequencyRamp, n: int, t):
    t = _check_t(ramp, t)
    return _spread_factor(n) * np.abs(ramp.omega_dot(t)) / ramp.omega(t)


def monotone_segments(ramp: FrequencyRamp) -> list[tuple[float, float]]:
    """Split [0, tf] where omega_dot changes sign (sampled, then bisected)."""
    grid = np.linspace(0.0, ramp.tf, SIGN_GRID)
    sign = np.sign(ramp.omega_dot(grid))
    cuts = [0.0]
    for i in np.nonzero(sign[1:] * sign[:-1] < 0)[0]:
        lo, hi = grid[i], grid[i + 1]
        s_lo = sign[i]
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if np.sign(ramp.omega_dot(mid)) == s_lo:
                lo = mid
            else:
                hi = mid
        cuts.append(0.5 * (lo + hi))
    cuts.append(ramp.tf)
    return list(zip(cuts[:-1], cuts[1:]))


def time_avg_std(ramp: FrequencyRamp, n: int = 0) -> float:
    total = 0.0
    for a, b in monotone_segments(ramp):
        inner = [k for k in ramp.knots if a < k < b]
        total += abs(integrate(lambda t: ramp.omega_dot(t) / ramp.omega(t), (a, b),
                               rel_tol=QUAD_TOL, abs_tol=1e-300, breakpoints=inner))
    return _spread_factor(n) * total / ramp.tf


def log_ramp_std(omega0: float, omegaf: float, tf: float, n: int = 0) -> float:
    """Closed form of ``time_avg_std`` for any monotone ramp."""
    return _spread_factor(n) * abs(math.log(omega0 / omegaf)) / tf


def transitionless_report(ramp: FrequencyRamp, n: int = 0) -> TransitionlessReport:
    grid = np.linspace(0.0, ramp.tf, SIGN_GRID)
    return TransitionlessReport(avg_energy=mean_energy(ramp, n), avg_std=time_avg_std(ramp, n),
                                instantaneous_std_max=float(np.max(std_energy(ramp, n, grid))),
                                n=n)
