"""Numerical kernels: adaptive quadrature, embedded Runge-Kutta integration,
small dense linear solves and log-log power-law regression.

Everything here is pure; callers pass vectorised numpy callables where noted.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np


class QuadratureError(RuntimeError):
    """Adaptive quadrature hit its subdivision limit."""

    def __init__(self, message: str, estimate: float, error: float):
        super().__init__(f"{message} (estimate={estimate!r}, error={error!r})")
        self.estimate = estimate
        self.error = error


class IntegrationError(RuntimeError):
    """ODE step size collapsed; ``t`` is where it happened."""

    def __init__(self, message: str, t: float):
        super().__init__(f"{message} at t={t!r}")
        self.t = t


class SingularMatrixError(np.linalg.LinAlgError):
    def __init__(self, message: str, condition: float):
        super().__init__(f"{message} (condition estimate {condition:.3e})")
        self.condition = condition


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise ValueError(f"interval bounds must be finite, got [{self.lo}, {self.hi}]")
        if not self.lo < self.hi:
            raise ValueError(f"interval needs lo < hi, got [{self.lo}, {self.hi}]")

    @property
    def length(self) -> float:
        return self.hi - self.lo


@dataclass(frozen=True)
class FitResult:
    exponent: float
    prefactor: float
    residual: float


def _as_interval(iv) -> Interval:
    if isinstance(iv, Interval):
        return iv
    lo, hi = iv
    return Interval(float(lo), float(hi))


# ---------------------------------------------------------------------------
# Gauss-Kronrod 7/15 quadrature

_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])
_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_WK15 = np.concatenate([_WGK[:-1], _WGK[::-1]])
_WG7 = np.zeros(15)
_WG7[[1, 3, 5, 7, 9, 11, 13]] = np.concatenate([_WG[:-1], _WG[::-1]])


def _gk15(f, a: float, b: float) -> tuple[float, float]:
    half = 0.5 * (b - a)
    center = 0.5 * (a + b)
    fx = np.asarray(f(center + half * _NODES), dtype=float)
    if fx.shape != (15,):
        fx = np.broadcast_to(fx, (15,))
    if not np.all(np.isfinite(fx)):
        raise ValueError(f"integrand not finite on [{a}, {b}]")
    resk = float(np.dot(_WK15, fx))
    resg = float(np.dot(_WG7, fx))
    mean = 0.5 * resk
    resasc = float(np.dot(_WK15, np.abs(fx - mean)))
    err = abs(resk - resg)
    # QUADPACK error scaling
    if resasc != 0.0 and err != 0.0:
        err = resasc * min(1.0, (200.0 * err / resasc) ** 1.5)
    return resk * half, err * abs(half)


def integrate(f: Callable[[np.ndarray], np.ndarray], iv, rel_tol: float = 1e-10,
              abs_tol: float = 0.0, breakpoints: Sequence[float] = (),
              max_intervals: int = 4000) -> float:
    """Integrate ``f`` over ``iv`` with globally adaptive Gauss-Kronrod (7, 15).

    ``f`` must accept a 1-D array of abscissae and return values of the same
    shape. ``breakpoints`` inside the interval seed the initial partition, which
    is how piecewise integrands should be handled.

    Raises QuadratureError if the error target is not met within
    ``max_intervals`` subintervals.
    """
    iv = _as_interval(iv)
    if not (0.0 < rel_tol <= 1e-2):
        raise ValueError(f"rel_tol must lie in (0, 1e-2], got {rel_tol}")
    cuts = sorted({iv.lo, iv.hi, *(float(p) for p in breakpoints if iv.lo < p < iv.hi)})

    heap: list[tuple[float, float, float, float]] = []
    total = 0.0
    total_err = 0.0
    for a, b in zip(cuts[:-1], cuts[1:]):
        val, err = _gk15(f, a, b)
        heapq.heappush(heap, (-err, a, b, val))
        total += val
        total_err += err

    eps = 50.0 * np.finfo(float).eps
    while total_err > max(rel_tol * abs(total), abs_tol):
        if len(heap) >= max_intervals:
            raise QuadratureError("quadrature did not converge", total, total_err)
        neg_err, a, b, val = heapq.heappop(heap)
        mid = 0.5 * (a + b)
        if (b - a) <= eps * max(abs(a), abs(b), 1.0):
            raise QuadratureError(f"subinterval collapsed near {mid!r}", total, total_err)
        v1, e1 = _gk15(f, a, mid)
        v2, e2 = _gk15(f, mid, b)
        heapq.heappush(heap, (-e1, a, mid, v1))
        heapq.heappush(heap, (-e2, mid, b, v2))
        total += v1 + v2 - val
        total_err += e1 + e2 + neg_err
        # re-sum occasionally to stop drift from the running updates
        if len(heap) % 64 == 0:
            total = math.fsum(item[3] for item in heap)
            total_err = math.fsum(-item[0] for item in heap)
    return math.fsum(item[3] for item in heap)


# ---------------------------------------------------------------------------
# Dormand-Prince 5(4)

_DP_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_DP_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_DP_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_DP_E = _DP_B - np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640,
                          -92097 / 339200, 187 / 2100, 1 / 40])


def ode_solve(rhs: Callable[[float, np.ndarray], np.ndarray], y0: Sequence[float], iv,
              rel_tol: float = 1e-10, abs_tol: float | None = None,
              t_eval: Sequence[float] | None = None,
              breakpoints: Sequence[float] = ()) -> tuple[np.ndarray, np.ndarray]:
    """Integrate ``y' = rhs(t, y)`` across ``iv`` with adaptive Dormand-Prince 5(4).

    Returns ``(times, states)`` with ``states[i]`` the solution at ``times[i]``.
    The integrator lands exactly on every ``t_eval`` point and restarts at each
    breakpoint, so piecewise right-hand sides keep full order.
    """
    iv = _as_interval(iv)
    if not (0.0 < rel_tol <= 1e-4):
        raise ValueError(f"rel_tol must lie in (0, 1e-4], got {rel_tol}")
    if abs_tol is None:
        abs_tol = rel_tol * 1e-3
    if t_eval is None:
        t_eval = [iv.lo, iv.hi]
    t_eval = np.asarray(t_eval, dtype=float)
    if np.any(np.diff(t_eval) < 0) or t_eval[0] < iv.lo or t_eval[-1] > iv.hi:
        raise ValueError("t_eval must be sorted and lie inside the interval")

    stops = sorted({iv.hi, *(float(p) for p in breakpoints if iv.lo < p < iv.hi),
                    *(float(t) for t in t_eval if t > iv.lo)})
    want = set(float(t) for t in t_eval)

    y = np.array(y0, dtype=float)
    t = iv.lo
    out_t, out_y = [], []
    if iv.lo in want:
        out_t.append(t)
        out_y.append(y.copy())

    h = 1e-3 * iv.length
    k1 = np.asarray(rhs(t, y), dtype=float)
    tiny = 1e-13 * max(abs(iv.lo), abs(iv.hi), iv.length)
    for stop in stops:
        if stop - t <= tiny:
            # coincident stops (e.g. a breakpoint equal to a sample time up to rounding)
            t = max(t, stop)
        while t < stop:
            h = min(h, stop - t)
            if h <= 1e-14 * max(abs(t), iv.length):
                raise IntegrationError("step size underflow", t)
            k = [k1]
            for i in range(1, 7):
                yi = y + h * sum(a * kj for a, kj in zip(_DP_A[i], k))
                k.append(np.asarray(rhs(t + _DP_C[i] * h, yi), dtype=float))
            y_new = y + h * sum(bj * kj for bj, kj in zip(_DP_B, k) if bj != 0.0)
            err_vec = h * sum(ej * kj for ej, kj in zip(_DP_E, k) if ej != 0.0)
            if not np.all(np.isfinite(y_new)):
                h *= 0.25
                continue
            scale = abs_tol + rel_tol * np.maximum(np.abs(y), np.abs(y_new))
            err = float(np.sqrt(np.mean((err_vec / scale) ** 2)))
            if err <= 1.0:
                last = (stop - t) <= h * (1 + 1e-12)
                t = stop if last else t + h
                y = y_new
                k1 = k[6]
                factor = 5.0 if err == 0.0 else min(5.0, 0.9 * err ** -0.2)
                h *= factor
            else:
                h *= max(0.1, 0.9 * err ** -0.2)
        if stop in want:
            out_t.append(t)
            out_y.append(y.copy())
        k1 = np.asarray(rhs(t, y), dtype=float)
    return np.array(out_t), np.array(out_y)


# ---------------------------------------------------------------------------
# linear algebra and fitting

def solve_linear(A, y, max_condition: float = 1e12) -> np.ndarray:
    """Solve ``A x = y`` by Gaussian elimination with partial pivoting (n <= 8)."""
    A = np.array(A, dtype=float)
    y = np.array(y, dtype=float)
    n = A.shape[0]
    if A.shape != (n, n) or y.shape != (n,):
        raise ValueError(f"shape mismatch: A {A.shape}, y {y.shape}")
    if n > 8:
        raise ValueError("solve_linear is meant for n <= 8")
    with np.errstate(divide="ignore", invalid="ignore"):
        cond = float(np.linalg.cond(A, 1))
    if not math.isfinite(cond) or cond > max_condition:
        raise SingularMatrixError("matrix is singular or ill-conditioned", cond)

    M = np.hstack([A, y[:, None]])
    for col in range(n):
        piv = col + int(np.argmax(np.abs(M[col:, col])))
        if M[piv, col] == 0.0:
            raise SingularMatrixError("zero pivot", cond)
        if piv != col:
            M[[col, piv]] = M[[piv, col]]
        M[col + 1:] -= np.outer(M[col + 1:, col] / M[col, col], M[col])
    x = np.zeros(n)
    for row in range(n - 1, -1, -1):
        x[row] = (M[row, n] - np.dot(M[row, row + 1:n], x[row + 1:])) / M[row, row]
    return x


def fit_power_law(points) -> FitResult:
    """Least-squares fit of ``log y = exponent * log x + log prefactor``.

    Every point is used; restrict the input to select an asymptotic window.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 3:
        raise ValueError("need at least 3 (x, y) points")
    if np.any(pts <= 0) or not np.all(np.isfinite(pts)):
        raise ValueError("power-law fit needs strictly positive, finite coordinates")
    lx, ly = np.log(pts[:, 0]), np.log(pts[:, 1])
    mx, my = lx.mean(), ly.mean()
    dx = lx - mx
    slope = float(np.dot(dx, ly - my) / np.dot(dx, dx))
    intercept = my - slope * mx
    resid = ly - (slope * lx + intercept)
    return FitResult(exponent=slope, prefactor=float(np.exp(intercept)),
                     residual=float(np.sqrt(np.mean(resid ** 2))))
