"""Independent checks and parameter sweeps.

* forward integration of the Ermakov equation through a designed frequency
  profile (roundtrip of the inverse-engineering step);
* a brute-force energy-variance oracle on a spatial grid;
* sweeps over tf, omegaf and tau, the Otto cooling-rate scaling and the
  bound surface, returned as ScanResult / Grid2D tables.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import hermite as _herm

from . import energetics as en
from .numerics import FitResult, IntegrationError, fit_power_law, ode_solve
from .trajectories import (ExpansionSpec, FrequencyProfile, ScalingTrajectory,
                           bang_bang_min_time, make_hybrid, make_polynomial)

ODE_TOL = 1e-10


class ErmakovSingularity(IntegrationError):
    pass


class ResolutionError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# forward Ermakov integration

def ermakov_forward(profile: FrequencyProfile, spec: ExpansionSpec,
                    t_eval: Sequence[float] | None = None, rel_tol: float = ODE_TOL):
    """Integrate bddot = -omega^2(t) b + omega0^2 / b^3 from b = 1, bdot = 0.

    Returns ``(t, b, bdot)`` sampled at ``t_eval`` (default: 2001 uniform times).
    """
    w02 = spec.omega0 ** 2
    omega2 = profile.omega2

    def rhs(t, y):
        b, bd = y
        if b <= 0.0:
            raise ErmakovSingularity("scaling function reached zero", t)
        return np.array([bd, -float(omega2(t)) * b + w02 / b ** 3])

    if t_eval is None:
        t_eval = np.linspace(0.0, profile.tf, 2001)
    t, y = ode_solve(rhs, [1.0, 0.0], (0.0, profile.tf), rel_tol=rel_tol, t_eval=t_eval,
                     breakpoints=profile.breakpoints)
    return t, y[:, 0], y[:, 1]


@dataclass(frozen=True)
class RoundtripReport:
    residual_b: float
    residual_bdot: float
    max_rel_deviation: float
    passed: bool
    tol: float


def roundtrip_check(spec: ExpansionSpec, traj: ScalingTrajectory, tol: float = 1e-6,
                    samples: int = 201) -> RoundtripReport:
    """Drive the Ermakov equation with the trajectory's own omega^2(t) and compare
    the endpoint with b = gamma, bdot = 0."""
    if not (1e-10 <= tol <= 1e-3):
        raise ValueError("tol must lie in [1e-10, 1e-3]")
    t, b, bd = ermakov_forward(traj.profile, spec, np.linspace(0.0, spec.tf, samples))
    res_b = abs(b[-1] - spec.gamma) / spec.gamma
    res_bd = abs(bd[-1]) * spec.tf
    designed = traj(t)
    dev = float(np.max(np.abs(b - designed) / designed))
    return RoundtripReport(residual_b=float(res_b), residual_bdot=float(res_bd),
                           max_rel_deviation=dev, passed=bool(res_b < tol and res_bd < tol), tol=tol)


# ---------------------------------------------------------------------------
# spatial-grid variance oracle

def expanding_mode(spec: ExpansionSpec, traj: ScalingTrajectory, t: float, x: np.ndarray) -> np.ndarray:
    """n-th expanding mode on the grid ``x`` (global phase dropped), normalised
    on the discrete grid."""
    m, w0, n = spec.mass, spec.omega0, spec.n
    b, bd, _ = (float(v) for v in traj.evaluate(t))
    coeff = np.zeros(n + 1)
    coeff[n] = 1.0
    xi = math.sqrt(m * w0) * x / b
    psi = (np.exp(0.5j * m * (bd / b) * x ** 2 - 0.5 * xi ** 2) * _herm.hermval(xi, coeff))
    h = x[1] - x[0]
    return psi / math.sqrt(np.sum(np.abs(psi) ** 2) * h)


def _grid_variance(spec, traj, t, omega2, h, half_width):
    npts = 2 * int(math.ceil(half_width / h)) + 1
    x = (np.arange(npts) - npts // 2) * h
    psi = expanding_mode(spec, traj, t, x)
    pad = np.concatenate([np.zeros(2), psi, np.zeros(2)])
    lap = (-pad[:-4] + 16 * pad[1:-3] - 30 * pad[2:-2] + 16 * pad[3:-1] - pad[4:]) / (12 * h * h)
    m = spec.mass
    hpsi = -lap / (2 * m) + 0.5 * m * omega2 * x ** 2 * psi
    energy = float(np.real(np.vdot(psi, hpsi)) * h)
    resid = hpsi - energy * psi
    return float(np.real(np.vdot(resid, resid)) * h), energy


def variance_oracle(spec: ExpansionSpec, traj: ScalingTrajectory, t: float,
                    points_per_wave: int = 40, conv_tol: float = 1e-3) -> float:
    """Energy standard deviation of the expanding mode by brute force: build the
    wave function on a grid, apply a 5-point-stencil Hamiltonian, and evaluate
    ||(H - <H>) psi||. The grid is refined once; the two results are combined
    by Richardson extrapolation after a convergence check."""
    if spec.n > 4:
        raise ValueError("variance_oracle supports n <= 4")
    m, w0 = spec.mass, spec.omega0
    b, bd, _ = (float(v) for v in traj.evaluate(t))
    omega2 = float(traj.profile.omega2(t))
    width = b / math.sqrt(m * w0)
    half_width = 8.0 * math.sqrt(2 * spec.n + 1) * width
    k_max = half_width * math.hypot(m * bd / b, 1.0 / width ** 2)
    h = min(2 * math.pi / (points_per_wave * k_max), width / points_per_wave)

    v1, e1 = _grid_variance(spec, traj, t, omega2, h, half_width)
    v2, e2 = _grid_variance(spec, traj, t, omega2, 0.5 * h, half_width)
    floor = 1e-12 * e2 ** 2
    if abs(v2 - v1) > conv_tol * max(v2, floor):
        raise ResolutionError(f"variance not converged at t={t!r}: {v1!r} vs {v2!r}")
    v = (16 * v2 - v1) / 15
    return math.sqrt(max(v, 0.0))


# ---------------------------------------------------------------------------
# sweeps

@dataclass
class ScanResult:
    axis_name: str
    rows: list[tuple[float, dict[str, float]]]
    fits: dict[str, FitResult] = field(default_factory=dict)
    config: dict = field(default_factory=dict)

    @property
    def columns(self) -> list[str]:
        return list(self.rows[0][1]) if self.rows else []

    @property
    def x(self) -> np.ndarray:
        return np.array([r[0] for r in self.rows])

    def column(self, name: str) -> np.ndarray:
        return np.array([r[1][name] for r in self.rows])

    def fit(self, name: str, x_max: float | None = None) -> FitResult:
        pts = [(x, q[name]) for x, q in self.rows if x_max is None or x <= x_max]
        return fit_power_law(pts)


@dataclass
class Grid2D:
    tf: list[float]
    wf: list[float]
    bound: list[list[float]]   # bound[i][j] at (tf[i], wf[j]), units of E0(0)
    config: dict = field(default_factory=dict)


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("STA_THREADS", "1")))
    except ValueError:
        return 1


def _pmap(fn: Callable, items) -> list:
    items = list(items)
    workers = _threads()
    if workers == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _check_sweep(values):
    v = [float(x) for x in values]
    if any(x <= 0 for x in v) or any(b <= a for a, b in zip(v, v[1:])):
        raise ValueError("sweep values must be positive and strictly increasing")
    return v


def _sweep_row(spec: ExpansionSpec) -> dict[str, float]:
    poly = make_polynomial(spec)
    e0 = spec.e0
    row = {
        "bound": en.energy_bound(spec) / e0,
        "asymptotic": en.energy_bound_asymptotic(spec) / e0,
        "poly_energy": en.time_averaged_energy(spec, poly) / e0,
        "poly_std": en.time_averaged_std(spec, poly) / e0,
    }
    if spec.n == 0:
        row["aa_bound"] = en.aa_lower_bound(spec) / e0
    return row


def _fit_lowest_decade(result: ScanResult) -> dict[str, FitResult]:
    x = result.x
    window = x[0] * 10 * (1 + 1e-9)
    fits = {}
    for name in result.columns:
        pts = [(xx, q[name]) for xx, q in result.rows if xx <= window]
        if len(pts) >= 3 and all(p[1] > 0 for p in pts):
            fits[name] = fit_power_law(pts)
    return fits


def scan_tf(spec: ExpansionSpec, tf_values: Sequence[float]) -> ScanResult:
    """Bound, asymptote, polynomial energy/spread and AA bound versus tf
    (E0(0) units), with power-law fits over the lowest decade."""
    tfs = _check_sweep(tf_values)
    rows = _pmap(lambda tf: (tf, _sweep_row(spec.replace(tf=tf))), tfs)
    result = ScanResult("tf", rows)
    result.fits = _fit_lowest_decade(result)
    return result


def scan_wf(spec: ExpansionSpec, wf_values: Sequence[float]) -> ScanResult:
    """Same quantities as ``scan_tf`` versus the final angular frequency."""
    wfs = _check_sweep(wf_values)
    rows = _pmap(lambda wf: (wf, _sweep_row(spec.replace(omegaf=wf))), wfs)
    result = ScanResult("wf", rows)
    result.fits = _fit_lowest_decade(result)
    return result


def hybrid_tau_scan(spec: ExpansionSpec, tau_values: Sequence[float]) -> ScanResult:
    """Hybrid time-averaged energy split into cap and central contributions."""
    taus = _check_sweep(tau_values)
    if taus[-1] >= 0.5:
        raise ValueError("tau values must lie in (0, 0.5)")
    e0 = spec.e0
    bound = en.energy_bound(spec) / e0
    poly = en.time_averaged_energy(spec, make_polynomial(spec)) / e0

    def row(tau):
        hyb = make_hybrid(spec, tau)
        left, centre, right = en.segment_energy_contributions(spec, hyb)
        total = en.time_averaged_energy(spec, hyb) / e0
        return tau, {"total": total, "caps": (left + right) / e0, "central": centre / e0,
                     "bound": bound, "poly": poly}

    return ScanResult("tau", _pmap(row, taus))


TF_LAWS = ("budget", "bang-bang", "bang-bang-single", "power")


def otto_scaling(spec: ExpansionSpec, wf_values: Sequence[float], law: str = "budget",
                 budget: float | None = None, power: float = -1.0,
                 prefactor: float = 1.0) -> ScanResult:
    """Cooling rate R = omegaf / tf across final frequencies (omegaf taken
    proportional to the cold-bath temperature).

    ``law`` selects tf(omegaf): ``budget`` saturates the time bound implied by a
    time-averaged energy budget (raw units), ``bang-bang`` uses the minimal
    real-frequency bang-bang time, ``bang-bang-single`` the quarter period at
    the geometric-mean frequency, and ``power`` uses prefactor * omegaf**power.
    """
    wfs = _check_sweep(wf_values)
    if law == "budget":
        if budget is None:
            raise ValueError("law 'budget' needs an energy budget")

        def tf_of(wf):
            return en.min_time_from_budget(spec.replace(omegaf=wf), budget)
    elif law == "bang-bang":
        def tf_of(wf):
            return bang_bang_min_time(spec.replace(omegaf=wf))
    elif law == "bang-bang-single":
        def tf_of(wf):
            return math.pi / (2 * math.sqrt(spec.omega0 * wf))
    elif law == "power":
        def tf_of(wf):
            return prefactor * wf ** power
    else:
        raise ValueError(f"unknown tf law {law!r}; choose from {TF_LAWS}")

    rows = []
    for wf in wfs:
        tf = tf_of(wf)
        rows.append((wf, {"tf": tf, "R": wf / tf}))
    result = ScanResult("wf", rows)
    result.fits = {"R": result.fit("R")}
    return result


def grid_fig1(spec: ExpansionSpec, tf_values: Sequence[float], wf_values: Sequence[float]) -> Grid2D:
    """Lower-bound surface over (tf, omegaf) in units of E0(0)."""
    tfs, wfs = _check_sweep(tf_values), _check_sweep(wf_values)
    e0 = spec.e0
    bound = _pmap(lambda tf: [en.energy_bound(spec.replace(tf=tf, omegaf=wf)) / e0 for wf in wfs], tfs)
    return Grid2D(tf=tfs, wf=wfs, bound=bound)


def geometric_grid(lo: float, hi: float, per_decade: int = 25) -> list[float]:
    """Geometric grid including both ends with about ``per_decade`` points per decade."""
    count = max(2, int(round(per_decade * math.log10(hi / lo))) + 1)
    return [float(v) for v in np.geomspace(lo, hi, count)]
