"""Scaling functions b(t), the frequency profiles they induce, and bang-bang
schedules for harmonic trap expansions and compressions.

Units: hbar = 1 and mass = 1 throughout; frequencies are angular (rad/s).
Every trajectory evaluates ``(b, bdot, bddot)`` vectorised over time.
"""

from __future__ import annotations

import math
from functools import cached_property
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .numerics import solve_linear

GRID_POINTS = 2001


class RejectedTrajectory(ValueError):
    """The scaling function is not strictly positive on [0, tf]."""


@dataclass(frozen=True)
class ExpansionSpec:
    omega0: float
    omegaf: float
    tf: float
    n: int = 0
    mass: float = 1.0

    def __post_init__(self):
        for name in ("omega0", "omegaf", "tf", "mass"):
            val = getattr(self, name)
            if not (math.isfinite(val) and val > 0):
                raise ValueError(f"{name} must be positive and finite, got {val!r}")
        if int(self.n) != self.n or self.n < 0:
            raise ValueError(f"n must be a non-negative integer, got {self.n!r}")

    @classmethod
    def from_hz(cls, f0: float, ff: float, tf: float, n: int = 0) -> "ExpansionSpec":
        return cls(2 * math.pi * f0, 2 * math.pi * ff, tf, n)

    @property
    def gamma(self) -> float:
        return math.sqrt(self.omega0 / self.omegaf)

    @property
    def e0(self) -> float:
        """Initial ground-state energy, the reporting unit for energies."""
        return 0.5 * self.omega0

    def replace(self, **changes) -> "ExpansionSpec":
        fields = dict(omega0=self.omega0, omegaf=self.omegaf, tf=self.tf, n=self.n, mass=self.mass)
        fields.update(changes)
        return ExpansionSpec(**fields)


@dataclass(frozen=True)
class FrequencyProfile:
    omega2: Callable[[np.ndarray], np.ndarray]
    tf: float
    has_repulsive_interval: bool
    breakpoints: tuple[float, ...] = ()

    def __call__(self, t):
        return self.omega2(t)


class ScalingTrajectory:
    """Base class. Subclasses implement ``_eval_s`` returning b and its first
    two derivatives with respect to the reduced time s = t / tf."""

    kind = "abstract"

    def __init__(self, spec: ExpansionSpec):
        self.spec = spec

    # subclasses -----------------------------------------------------------
    def _eval_s(self, s: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        raise NotImplementedError

    @property
    def parameters(self) -> tuple[float, ...]:
        return ()

    @property
    def breakpoints_s(self) -> tuple[float, ...]:
        return ()

    # ----------------------------------------------------------------------
    @property
    def breakpoints(self) -> tuple[float, ...]:
        return tuple(s * self.spec.tf for s in self.breakpoints_s)

    def evaluate(self, t):
        """Return ``(b, bdot, bddot)`` at time(s) ``t``."""
        tf = self.spec.tf
        s = np.asarray(t, dtype=float) / tf
        b, b1, b2 = self._eval_s(s)
        return b, b1 / tf, b2 / tf ** 2

    def __call__(self, t):
        return self.evaluate(t)[0]

    @cached_property
    def profile(self) -> "FrequencyProfile":
        return omega_squared_from_b(self)

    def boundary_residuals(self) -> list[float]:
        """|b(0)-1|, |bdot(0)|, |bddot(0)|, |b(tf)-gamma|, |bdot(tf)|, |bddot(tf)|,
        with derivatives taken in reduced time so the entries are dimensionless."""
        b0, b10, b20 = (float(x) for x in self._eval_s(np.array(0.0)))
        b1, b11, b21 = (float(x) for x in self._eval_s(np.array(1.0)))
        return [abs(b0 - 1.0), abs(b10), abs(b20),
                abs(b1 - self.spec.gamma), abs(b11), abs(b21)]

    def satisfies_boundary_conditions(self, tol: float = 1e-10) -> bool:
        scale = max(1.0, self.spec.gamma)
        return all(r <= tol * scale for r in self.boundary_residuals())

    def check_positive(self) -> None:
        s = np.linspace(0.0, 1.0, GRID_POINTS)
        b = self._eval_s(s)[0]
        if not np.all(np.isfinite(b)) or np.min(b) <= 0.0:
            idx = int(np.argmin(np.where(np.isfinite(b), b, -np.inf)))
            raise RejectedTrajectory(
                f"{self.kind} trajectory has b <= 0 near t={s[idx] * self.spec.tf!r}")

    def __repr__(self):
        return f"{type(self).__name__}(kind={self.kind!r}, spec={self.spec!r})"


def _smoothstep5(s):
    return s ** 3 * (10 - 15 * s + 6 * s ** 2)


class PolynomialTrajectory(ScalingTrajectory):
    """b(s) = 1 + (gamma - 1)(10 s^3 - 15 s^4 + 6 s^5)."""

    kind = "polynomial"

    def __init__(self, spec: ExpansionSpec):
        super().__init__(spec)
        self.amplitude = spec.gamma - 1.0

    @property
    def parameters(self):
        g = self.amplitude
        return (1.0, 0.0, 0.0, 10 * g, -15 * g, 6 * g)

    def _eval_s(self, s):
        g = self.amplitude
        b = 1.0 + g * _smoothstep5(s)
        b1 = g * 30 * s ** 2 * (1 - s) ** 2
        b2 = g * 60 * s * (1 - s) * (1 - 2 * s)
        return b, b1, b2


class QuasiOptimalTrajectory(ScalingTrajectory):
    """Minimiser of the time-averaged energy functional with only b(0) = 1 and
    b(tf) = gamma imposed: b(s) = sqrt(A s^2 + 2 B s + 1), A = B^2 - (omega0 tf)^2.
    """

    kind = "quasi-optimal"

    def __init__(self, spec: ExpansionSpec):
        super().__init__(spec)
        w = spec.omega0 * spec.tf
        self.w = w
        self.B = -1.0 + math.hypot(spec.gamma, w)
        self.A = self.B ** 2 - w ** 2
        self._check_radicand()

    @property
    def parameters(self):
        return (self.A, self.B)

    def _check_radicand(self):
        A, B = self.A, self.B
        candidates = [1.0, A + 2 * B + 1.0]
        if A > 0 and 0.0 < -B / A < 1.0:
            candidates.append(1.0 - B * B / A)
        if min(candidates) <= 0.0:
            raise RejectedTrajectory("quasi-optimal radicand is not positive on [0, tf]")

    def radicand(self, s):
        return (self.A * s + 2 * self.B) * s + 1.0

    def _eval_s(self, s):
        q = self.radicand(s)
        b = np.sqrt(q)
        b1 = (self.A * s + self.B) / b
        b2 = -self.w ** 2 / b ** 3
        return b, b1, b2


class HybridTrajectory(ScalingTrajectory):
    """Quasi-optimal centre on [tau, 1 - tau] joined to quintic caps that carry
    the remaining boundary conditions and match b, b', b'' at the joins.

    Cap coefficients are solved in the local variable u = s / tau (left) and
    u = (1 - s) / tau (right), which keeps the 6x6 systems well conditioned
    for small tau; ``monomial_coefficients`` expands them in powers of s.
    """

    kind = "hybrid"

    def __init__(self, spec: ExpansionSpec, tau: float):
        if not (0.0 < tau < 0.5):
            raise ValueError(f"tau must lie in (0, 0.5), got {tau!r}")
        super().__init__(spec)
        self.tau = float(tau)
        self.center = QuasiOptimalTrajectory(spec)
        bl, bl1, bl2 = (float(x) for x in self.center._eval_s(np.array(tau)))
        br, br1, br2 = (float(x) for x in self.center._eval_s(np.array(1.0 - tau)))
        self.left = cap_coefficients((1.0, 0.0, 0.0), (bl, tau * bl1, tau ** 2 * bl2))
        self.right = cap_coefficients((spec.gamma, 0.0, 0.0), (br, -tau * br1, tau ** 2 * br2))

    @property
    def parameters(self):
        return (self.tau, *self.left, *self.right)

    @property
    def breakpoints_s(self):
        return (self.tau, 1.0 - self.tau)

    def monomial_coefficients(self) -> tuple[np.ndarray, np.ndarray]:
        """Cap coefficients (c_j, d_j) of sum_j c_j s^j and sum_j d_j s^j."""
        tau = self.tau
        left = np.array([c / tau ** j for j, c in enumerate(self.left)])
        # right cap in u = (1 - s) / tau: expand sum_k r_k ((1 - s)/tau)^k
        right = np.zeros(6)
        for k, r in enumerate(self.right):
            for j in range(k + 1):
                right[j] += r / tau ** k * math.comb(k, j) * (-1) ** j
        return left, right

    def _eval_s(self, s):
        s = np.asarray(s, dtype=float)
        shape = s.shape
        s = s.reshape(-1)
        tau = self.tau
        b, b1, b2 = (np.array(x, dtype=float) for x in self.center._eval_s(np.clip(s, tau, 1 - tau)))
        lm = s < tau
        if np.any(lm):
            p, p1, p2 = _poly_eval(self.left, s[lm] / tau)
            b[lm], b1[lm], b2[lm] = p, p1 / tau, p2 / tau ** 2
        rm = s > 1.0 - tau
        if np.any(rm):
            p, p1, p2 = _poly_eval(self.right, (1.0 - s[rm]) / tau)
            b[rm], b1[rm], b2[rm] = p, -p1 / tau, p2 / tau ** 2
        return b.reshape(shape), b1.reshape(shape), b2.reshape(shape)

    def join_residuals(self) -> list[float]:
        """Jumps |db|, |db'|, |db''| (reduced time) at s = tau and s = 1 - tau."""
        out = []
        for s0, cap, sign in ((self.tau, self.left, 1.0), (1.0 - self.tau, self.right, -1.0)):
            c = self.center._eval_s(np.array(s0))
            p, p1, p2 = _poly_eval(cap, np.array(1.0))
            capvals = (p, sign * p1 / self.tau, p2 / self.tau ** 2)
            out.extend(abs(float(x) - float(y)) for x, y in zip(c, capvals))
        return out


_CAP_MATRIX = np.array([
    [1, 0, 0, 0, 0, 0],
    [0, 1, 0, 0, 0, 0],
    [0, 0, 2, 0, 0, 0],
    [1, 1, 1, 1, 1, 1],
    [0, 1, 2, 3, 4, 5],
    [0, 0, 2, 6, 12, 20],
], dtype=float)


def cap_coefficients(at_zero, at_one) -> np.ndarray:
    """Quintic p(u) with (p, p', p'') prescribed at u = 0 and u = 1."""
    return solve_linear(_CAP_MATRIX, [*at_zero, *at_one])


def _poly_eval(coef, u):
    c = np.asarray(coef)
    d1 = c[1:] * np.arange(1, 6)
    d2 = d1[1:] * np.arange(1, 5)
    return (np.polynomial.polynomial.polyval(u, c),
            np.polynomial.polynomial.polyval(u, d1),
            np.polynomial.polynomial.polyval(u, d2))


class ConstantFrequencyTrajectory(ScalingTrajectory):
    """Exact Ermakov solution at constant frequency omega1 from b(0)=1, bdot(0)=0:
    b^2 = cos^2(omega1 t) + (omega0 / omega1)^2 sin^2(omega1 t)."""

    kind = "constant-frequency-segment"

    def __init__(self, spec: ExpansionSpec, omega1: float):
        super().__init__(spec)
        self.omega1 = float(omega1)

    @property
    def parameters(self):
        return (self.omega1,)

    def _eval_s(self, s):
        tf = self.spec.tf
        w1 = self.omega1
        r2 = (self.spec.omega0 / w1) ** 2
        th = w1 * tf * np.asarray(s, dtype=float)
        c, sn = np.cos(th), np.sin(th)
        q = c * c + r2 * sn * sn
        b = np.sqrt(q)
        qd = 2 * (r2 - 1) * sn * c * w1          # dq/dt
        qdd = 2 * (r2 - 1) * np.cos(2 * th) * w1 ** 2
        bd = qd / (2 * b)
        bdd = (qdd - 2 * bd ** 2) / (2 * b)
        return b, bd * tf, bdd * tf ** 2


def make_polynomial(spec: ExpansionSpec) -> PolynomialTrajectory:
    traj = PolynomialTrajectory(spec)
    traj.check_positive()
    return traj


def make_quasi_optimal(spec: ExpansionSpec) -> QuasiOptimalTrajectory:
    traj = QuasiOptimalTrajectory(spec)
    traj.check_positive()
    return traj


def make_hybrid(spec: ExpansionSpec, tau: float) -> HybridTrajectory:
    traj = HybridTrajectory(spec, tau)
    traj.check_positive()
    return traj


def make_trajectory(spec: ExpansionSpec, kind: str, tau: float | None = None) -> ScalingTrajectory:
    """Build a trajectory by short name: poly, qopt or hybrid."""
    if kind in ("poly", "polynomial"):
        return make_polynomial(spec)
    if kind in ("qopt", "quasi-optimal"):
        return make_quasi_optimal(spec)
    if kind == "hybrid":
        if tau is None:
            raise ValueError("hybrid trajectories need tau")
        return make_hybrid(spec, tau)
    raise ValueError(f"unknown trajectory kind {kind!r}")


def omega_squared_from_b(traj: ScalingTrajectory) -> FrequencyProfile:
    """Invert the Ermakov equation: omega^2 = omega0^2 / b^4 - bddot / b."""
    w02 = traj.spec.omega0 ** 2
    tf = traj.spec.tf
    traj.check_positive()

    if isinstance(traj, ConstantFrequencyTrajectory):
        w12 = traj.omega1 ** 2

        def omega2(t):
            return np.full_like(np.asarray(t, dtype=float), w12)
    else:
        def omega2(t):
            b, _, bdd = traj.evaluate(t)
            return w02 / b ** 4 - bdd / b

    grid = omega2(np.linspace(0.0, tf, GRID_POINTS))
    return FrequencyProfile(omega2=omega2, tf=tf,
                            has_repulsive_interval=bool(np.any(grid < 0.0)),
                            breakpoints=traj.breakpoints)


@dataclass(frozen=True)
class BangBangSchedule:
    segments: tuple[tuple[float, float], ...]   # (duration, omega)
    total_time: float = field(init=False)

    def __post_init__(self):
        if any(d <= 0 for d, _ in self.segments):
            raise ValueError("segment durations must be positive")
        object.__setattr__(self, "total_time", math.fsum(d for d, _ in self.segments))

    def omega_at(self, t):
        t = np.asarray(t, dtype=float)
        edges = np.cumsum([d for d, _ in self.segments])
        idx = np.minimum(np.searchsorted(edges, t, side="right"), len(edges) - 1)
        return np.array([w for _, w in self.segments])[idx]

    def profile(self) -> FrequencyProfile:
        edges = tuple(np.cumsum([d for d, _ in self.segments])[:-1])
        return FrequencyProfile(omega2=lambda t: self.omega_at(t) ** 2, tf=self.total_time,
                                has_repulsive_interval=False, breakpoints=edges)


def bang_bang_single(spec: ExpansionSpec) -> BangBangSchedule:
    """One intermediate frequency sqrt(omega0 omegaf) held for a quarter period."""
    w1 = math.sqrt(spec.omega0 * spec.omegaf)
    return BangBangSchedule(segments=((math.pi / (2 * w1), w1),))


def bang_bang_trajectory(spec: ExpansionSpec) -> ConstantFrequencyTrajectory:
    """Scaling function of the single-intermediate schedule; its spec carries the
    schedule's own duration."""
    sched = bang_bang_single(spec)
    (duration, w1), = sched.segments
    return ConstantFrequencyTrajectory(spec.replace(tf=duration), w1)


def bang_bang_min_time(spec: ExpansionSpec) -> float:
    """Minimal expansion time with real intermediate frequencies."""
    if spec.omegaf >= spec.omega0:
        raise ValueError("the bang-bang time bound applies to expansions (omegaf < omega0)")
    return math.sqrt(1.0 - spec.omegaf / spec.omega0) / math.sqrt(spec.omegaf * spec.omega0)
