"""Transient energetics of the expanding modes: instantaneous and time-averaged
energies, the closed-form lower bound, energy standard deviations and the
Anandan-Aharonov (Fubini-Study) quantities.

All values are returned in raw units (hbar = 1, energies in rad/s) unless a
function says otherwise; divide by ``spec.e0`` for units of the initial
ground-state energy.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .numerics import integrate
from .trajectories import ExpansionSpec, ScalingTrajectory, make_quasi_optimal

QUAD_TOL = 1e-10
IDENTITY_TOL = 1e-6


class IntegrationIdentityError(ArithmeticError):
    """The direct and integrated-by-parts energy averages disagree, which means
    the trajectory does not satisfy the endpoint conditions."""


class GroundStateOnly(NotImplementedError):
    pass


def _check_t(spec: ExpansionSpec, t):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0.0) or np.any(t > spec.tf * (1 + 1e-12)):
        raise ValueError(f"t outside [0, {spec.tf}]")
    return t


def _pieces(spec: ExpansionSpec, traj: ScalingTrajectory, t):
    b, bd, _ = traj.evaluate(t)
    w2 = traj.profile.omega2(t)
    return b, bd, w2


def _avg(spec, traj, f, abs_tol=0.0):
    return integrate(f, (0.0, spec.tf), rel_tol=QUAD_TOL, abs_tol=abs_tol,
                     breakpoints=traj.breakpoints) / spec.tf


def instantaneous_energy(spec: ExpansionSpec, traj: ScalingTrajectory, t):
    """Mean energy of the n-th expanding mode at time(s) t."""
    t = _check_t(spec, t)
    w0 = spec.omega0
    b, bd, w2 = _pieces(spec, traj, t)
    return (2 * spec.n + 1) / (4 * w0) * (bd ** 2 + w2 * b ** 2 + w0 ** 2 / b ** 2)


def reduced_energy_average(spec: ExpansionSpec, traj: ScalingTrajectory) -> float:
    """Time average of (2n+1)/(2 omega0) (bdot^2 + omega0^2 / b^2); equal to the
    mean energy average whenever bdot vanishes at both ends."""
    w0 = spec.omega0

    def f(t):
        b, bd, _ = traj.evaluate(t)
        return bd ** 2 + w0 ** 2 / b ** 2

    return (2 * spec.n + 1) / (2 * w0) * _avg(spec, traj, f)


def time_averaged_energy(spec: ExpansionSpec, traj: ScalingTrajectory, check: bool = True) -> float:
    """Time average of ``instantaneous_energy`` over [0, tf].

    With ``check`` the value is compared to ``reduced_energy_average``; a
    relative mismatch above IDENTITY_TOL raises IntegrationIdentityError.
    """
    direct = _avg(spec, traj, lambda t: instantaneous_energy(spec, traj, t))
    if check:
        reduced = reduced_energy_average(spec, traj)
        if abs(direct - reduced) > IDENTITY_TOL * abs(reduced):
            raise IntegrationIdentityError(
                f"direct average {direct!r} != reduced average {reduced!r}; "
                f"{traj.kind} trajectory violates the endpoint conditions")
    return direct


def segment_energy_contributions(spec: ExpansionSpec, traj: ScalingTrajectory) -> list[float]:
    """Contribution of each breakpoint-delimited segment to the time-averaged energy."""
    edges = [0.0, *traj.breakpoints, spec.tf]
    return [integrate(lambda t: instantaneous_energy(spec, traj, t), (a, b), rel_tol=QUAD_TOL) / spec.tf
            for a, b in zip(edges[:-1], edges[1:])]


def artanh_real(x: float) -> float:
    """0.5 ln|(1+x)/(1-x)|, the real part of artanh on both branches."""
    if abs(x) < 1.0:
        return math.atanh(x)
    if abs(x) > 1.0:
        return math.atanh(1.0 / x)
    raise ValueError("artanh_real is singular at |x| = 1")


def energy_bound(spec: ExpansionSpec) -> float:
    """Closed-form lower bound on the time-averaged energy (from the
    quasi-optimal trajectory)."""
    w = spec.omega0 * spec.tf
    B = -1.0 + math.hypot(spec.gamma, w)
    A = B * B - w * w
    bracket = A - 2 * w * (artanh_real((A + B) / w) - artanh_real(B / w))
    return (2 * spec.n + 1) / (2 * spec.omega0 * spec.tf ** 2) * bracket


def energy_bound_asymptotic(spec: ExpansionSpec) -> float:
    return (2 * spec.n + 1) / (2 * spec.omegaf * spec.tf ** 2)


def min_time_from_budget(spec: ExpansionSpec, avg_energy_budget: float) -> float:
    """Shortest tf compatible with a time-averaged energy budget (raw units)."""
    if not avg_energy_budget > 0:
        raise ValueError("energy budget must be positive")
    return math.sqrt((2 * spec.n + 1) / (2 * spec.omegaf * avg_energy_budget))


def instantaneous_std(spec: ExpansionSpec, traj: ScalingTrajectory, t, printed_sign: bool = False):
    """Energy standard deviation of the n-th expanding mode.

    The default uses (bdot^2 + omega^2 b^2 - omega0^2/b^2) in the squared term,
    which vanishes on eigenstates; ``printed_sign=True`` evaluates the variant
    with a plus sign there, kept only for comparison.
    """
    t = _check_t(spec, t)
    w0 = spec.omega0
    b, bd, w2 = _pieces(spec, traj, t)
    sign = 1.0 if printed_sign else -1.0
    first = bd ** 2 + w2 * b ** 2 + sign * w0 ** 2 / b ** 2
    pref = math.sqrt(2.0 * (spec.n ** 2 + spec.n + 1)) / (4 * w0)
    return pref * np.sqrt(first ** 2 + 4 * w0 ** 2 * bd ** 2 / b ** 2)


def time_averaged_std(spec: ExpansionSpec, traj: ScalingTrajectory) -> float:
    return _avg(spec, traj, lambda t: instantaneous_std(spec, traj, t), abs_tol=1e-300)


def _require_ground(spec: ExpansionSpec):
    if spec.n != 0:
        raise GroundStateOnly("only the ground-state (n = 0) overlap is available")


def eigenstate_overlap(spec: ExpansionSpec) -> float:
    """|<initial ground state|final ground state>|^2."""
    _require_ground(spec)
    w0, wf = spec.omega0, spec.omegaf
    return 2 * math.sqrt(w0 * wf) / (w0 + wf)


def fs_geodesic(spec: ExpansionSpec) -> float:
    """Fubini-Study geodesic distance between initial and final ground states."""
    return 2 * math.acos(min(1.0, math.sqrt(eigenstate_overlap(spec))))


def aa_lower_bound(spec: ExpansionSpec) -> float:
    """Anandan-Aharonov lower bound on the time-averaged energy spread (n = 0)."""
    _require_ground(spec)
    w0, wf = spec.omega0, spec.omegaf
    arg = math.sqrt(2.0) * (w0 * wf) ** 0.25 / math.sqrt(w0 + wf)
    return math.acos(min(1.0, arg)) / spec.tf


def fs_distance(spec: ExpansionSpec, traj: ScalingTrajectory) -> tuple[float, float]:
    """Return (S, S0): the Fubini-Study length of the evolution and the geodesic."""
    _require_ground(spec)
    S = 2 * spec.tf * time_averaged_std(spec, traj)
    return S, fs_geodesic(spec)


def final_fidelity(spec: ExpansionSpec, traj: ScalingTrajectory) -> float:
    """Squared overlap between the evolved Gaussian at tf and the final ground state."""
    _require_ground(spec)
    b, bd, _ = (float(x) for x in traj.evaluate(spec.tf))
    w0, wf = spec.omega0, spec.omegaf
    return 2 * math.sqrt(wf * w0 / b ** 2) / abs(complex(wf + w0 / b ** 2, -bd / b))


def bang_bang_energy(spec: ExpansionSpec) -> float:
    """Constant transient energy of the single-intermediate-frequency schedule."""
    return (spec.n + 0.5) * (spec.omega0 + spec.omegaf) / 2


@dataclass(frozen=True)
class EnergyReport:
    avg_energy: float
    max_energy: float
    bound: float
    bound_asymptotic: float
    avg_std: float
    aa_lower_bound: float | None
    fs_distance: float | None
    fs_geodesic: float | None
    final_fidelity: float | None
    boundary_residuals: tuple[float, ...]
    reduced_energy: float
    identity_ok: bool
    units: str = "e0"

    def as_dict(self) -> dict:
        d = asdict(self)
        d["boundary_residuals"] = list(self.boundary_residuals)
        return d


def energy_report(spec: ExpansionSpec, traj: ScalingTrajectory, units: str = "e0",
                  samples: int = 2001) -> EnergyReport:
    """Collect every energetic figure of merit for one trajectory.

    Energies are divided by E0(0) = omega0/2 for ``units="e0"``. Ground-state
    only quantities are None for n > 0.
    """
    if units not in ("e0", "raw"):
        raise ValueError(f"units must be 'e0' or 'raw', got {units!r}")
    scale = 1.0 / spec.e0 if units == "e0" else 1.0

    direct = time_averaged_energy(spec, traj, check=False)
    reduced = reduced_energy_average(spec, traj)
    identity_ok = abs(direct - reduced) <= IDENTITY_TOL * abs(reduced)
    grid = np.linspace(0.0, spec.tf, samples)
    e_max = float(np.max(instantaneous_energy(spec, traj, grid)))
    avg_std = time_averaged_std(spec, traj)

    if spec.n == 0:
        aa = aa_lower_bound(spec) * scale
        s_len = 2 * spec.tf * avg_std
        s_geo = fs_geodesic(spec)
        fid = final_fidelity(spec, traj)
    else:
        aa = s_len = s_geo = fid = None

    return EnergyReport(
        avg_energy=direct * scale,
        max_energy=e_max * scale,
        bound=energy_bound(spec) * scale,
        bound_asymptotic=energy_bound_asymptotic(spec) * scale,
        avg_std=avg_std * scale,
        aa_lower_bound=aa,
        fs_distance=s_len,
        fs_geodesic=s_geo,
        final_fidelity=fid,
        boundary_residuals=tuple(traj.boundary_residuals()),
        reduced_energy=reduced * scale,
        identity_ok=bool(identity_ok),
        units=units,
    )


def quasi_optimal_energy(spec: ExpansionSpec) -> float:
    """Quadrature of the reduced functional along the quasi-optimal trajectory;
    an independent route to ``energy_bound``."""
    return reduced_energy_average(spec, make_quasi_optimal(spec))
