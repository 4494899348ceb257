"""Command-line front end: ``sta-harmonic {design,analyze,scan,otto,verify}``.

Frequencies are given in Hz and converted once with omega = 2 pi f (``--angular``
takes them as rad/s). Exit codes: 0 ok, 2 usage error, 3 rejected trajectory,
4 verification failure.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import asdict, dataclass

import numpy as np

from . import __version__
from . import energetics as en
from . import io
from . import verifier as vf
from .numerics import SingularMatrixError
from .trajectories import (ExpansionSpec, RejectedTrajectory, bang_bang_trajectory,
                           make_trajectory)

EXIT_USAGE, EXIT_REJECTED, EXIT_VERIFY = 2, 3, 4


@dataclass(frozen=True)
class RunConfig:
    f0_hz: float
    ff_hz: float
    tf_s: float
    n: int = 0
    trajectory: str = "poly"
    tau: float | None = None
    samples: int = 2001
    format: str = "csv"
    out: str | None = None
    units: str = "e0"
    angular: bool = False

    @property
    def spec(self) -> ExpansionSpec:
        k = 1.0 if self.angular else 2 * math.pi
        return ExpansionSpec(k * self.f0_hz, k * self.ff_hz, self.tf_s, self.n)

    def provenance(self) -> dict:
        d = asdict(self)
        d.pop("out")
        d["version"] = __version__
        return d


def _positive(text: str) -> float:
    val = float(text)
    if not (math.isfinite(val) and val > 0):
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text!r}")
    return val


def _nonneg_int(text: str) -> int:
    val = int(text)
    if val < 0:
        raise argparse.ArgumentTypeError("expected a non-negative integer")
    return val


def _common(p: argparse.ArgumentParser, need_tf: bool = True) -> None:
    p.add_argument("--f0-hz", type=_positive, default=250.0, help="initial trap frequency (Hz)")
    p.add_argument("--ff-hz", type=_positive, default=0.25, help="final trap frequency (Hz)")
    p.add_argument("--tf-s", type=_positive, default=0.002, help="process duration (s)")
    p.add_argument("--n", type=_nonneg_int, default=0, help="oscillator quantum number")
    p.add_argument("--traj", choices=("poly", "qopt", "hybrid"), default="poly")
    p.add_argument("--tau", type=float, help="cap fraction for --traj hybrid, in (0, 0.5)")
    p.add_argument("--samples", type=int, default=2001)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", help="output file (default: standard output)")
    p.add_argument("--units", choices=("e0", "raw"), default="e0",
                   help="energies in units of hbar*omega0/2 (e0) or hbar*rad/s (raw)")
    p.add_argument("--angular", action="store_true", help="frequencies are angular (rad/s)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sta-harmonic", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"sta-harmonic {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("design", help="tabulate b(t), omega^2(t), E_n(t) and Delta H_n(t)")
    _common(p)
    p = sub.add_parser("analyze", help="energy report for one trajectory")
    _common(p)
    p = sub.add_parser("scan", help="sweep tf, wf or tau (figure data)")
    _common(p)
    p.add_argument("--axis", choices=("tf", "wf", "tau", "fig1"), required=True)
    p.add_argument("--range", type=_positive, nargs=2, metavar=("LO", "HI"),
                   help="sweep range: tf in s, wf in Hz (rad/s with --angular) for wf and fig1, tau")
    p.add_argument("--points", type=int, help="number of sweep points (default 25 per decade)")
    p = sub.add_parser("otto", help="cooling-rate scaling R = wf / tf")
    _common(p)
    p.add_argument("--law", choices=vf.TF_LAWS, default="budget")
    p.add_argument("--budget", type=_positive,
                   help="time-averaged energy budget (units per --units)")
    p.add_argument("--power", type=float, default=-1.0, help="exponent for --law power")
    p.add_argument("--range", type=_positive, nargs=2, metavar=("LO", "HI"),
                   help="final-frequency range in Hz (default 2.5e-3 2.5)")
    p.add_argument("--points", type=int)
    p = sub.add_parser("verify", help="run the consistency checks and oracles")
    _common(p)
    return parser


def _config(args, parser) -> RunConfig:
    if args.traj == "hybrid":
        if args.tau is None:
            parser.error("--traj hybrid requires --tau")
        if not 0.0 < args.tau < 0.5:
            parser.error("--tau must lie in (0, 0.5)")
    elif args.tau is not None:
        parser.error("--tau is only valid with --traj hybrid")
    if args.samples < 101:
        parser.error("--samples must be at least 101")
    return RunConfig(f0_hz=args.f0_hz, ff_hz=args.ff_hz, tf_s=args.tf_s, n=args.n,
                     trajectory=args.traj, tau=args.tau, samples=args.samples,
                     format=args.format, out=args.out, units=args.units, angular=args.angular)


def _emit(cfg: RunConfig, text: str) -> None:
    io.write_text(text, cfg.out, sys.stdout)


def _energy_scale(cfg: RunConfig, spec: ExpansionSpec) -> float:
    return 1.0 / spec.e0 if cfg.units == "e0" else 1.0


# --- commands --------------------------------------------------------------

def cmd_design(cfg: RunConfig) -> int:
    spec = cfg.spec
    traj = make_trajectory(spec, cfg.trajectory, cfg.tau)
    t = np.linspace(0.0, spec.tf, cfg.samples)
    b, bd, bdd = traj.evaluate(t)
    scale = _energy_scale(cfg, spec)
    energy = en.instantaneous_energy(spec, traj, t) * scale
    spread = en.instantaneous_std(spec, traj, t) * scale
    columns = ["t", "s", "b", "bdot", "bddot", "omega2", "E_n", "dH_n"]
    data = np.column_stack([t, t / spec.tf, b, bd, bdd, traj.profile.omega2(t), energy, spread])
    if cfg.format == "csv":
        _emit(cfg, io.table_to_csv(columns, data.tolist(), [f"# config {io._dumps(cfg.provenance())}"]))
    else:
        _emit(cfg, io.to_json({"config": cfg.provenance(), "columns": columns, "rows": data.tolist(),
                               "has_repulsive_interval": traj.profile.has_repulsive_interval}))
    return 0


def _analysis(cfg: RunConfig) -> dict:
    spec = cfg.spec
    traj = make_trajectory(spec, cfg.trajectory, cfg.tau)
    report = en.energy_report(spec, traj, units=cfg.units, samples=cfg.samples)
    rt = vf.roundtrip_check(spec, traj)
    out = report.as_dict()
    out.update(roundtrip_residual_b=rt.residual_b, roundtrip_residual_bdot=rt.residual_bdot,
               roundtrip_passed=rt.passed)
    return out


def cmd_analyze(cfg: RunConfig) -> int:
    data = _analysis(cfg)
    if cfg.format == "json":
        _emit(cfg, io.to_json({"config": cfg.provenance(), **data}))
        return 0
    flat = {}
    for key, val in data.items():
        if key == "boundary_residuals":
            flat.update({f"boundary_residual_{i}": v for i, v in enumerate(val)})
        elif key != "units":
            flat[key] = val
    _emit(cfg, io.table_to_csv(list(flat), [list(flat.values())],
                               [f"# config {io._dumps(cfg.provenance())}"]))
    return 0


_SCAN_DEFAULTS = {"tf": (2e-5, 2e-2), "wf": (2.5e-3, 250.0), "tau": (0.005, 0.4)}


def _sweep(lo, hi, points):
    if points is None:
        return vf.geometric_grid(lo, hi)
    if points < 3:
        raise ValueError("--points must be at least 3")
    return [float(v) for v in np.geomspace(lo, hi, points)]


def cmd_scan(cfg: RunConfig, axis: str, rng, points) -> int:
    spec = cfg.spec
    k = 1.0 if cfg.angular else 2 * math.pi
    if axis == "fig1":
        tfs = _sweep(*_SCAN_DEFAULTS["tf"], points)
        wfs = [k * f for f in _sweep(*(rng or _SCAN_DEFAULTS["wf"]), points)]
        grid = vf.grid_fig1(spec, tfs, wfs)
        grid.config = cfg.provenance()
        _emit(cfg, io.grid_to_csv(grid) if cfg.format == "csv" else io.to_json(io.grid_to_dict(grid)))
        return 0
    lo, hi = rng or _SCAN_DEFAULTS[axis]
    values = _sweep(lo, hi, points)
    if axis == "tf":
        result = vf.scan_tf(spec, values)
    elif axis == "wf":
        result = vf.scan_wf(spec, [k * f for f in values])
    else:
        result = vf.hybrid_tau_scan(spec, values)
    if cfg.units == "raw":
        result = _rescale(result, spec.e0, keep=("tf", "R"))
    result.config = {**cfg.provenance(), "axis": axis}
    _emit(cfg, io.scan_to_csv(result) if cfg.format == "csv" else io.to_json(io.scan_to_dict(result)))
    return 0


def _rescale(result: vf.ScanResult, factor: float, keep=()) -> vf.ScanResult:
    rows = [(x, {c: (v if c in keep else v * factor) for c, v in q.items()}) for x, q in result.rows]
    fits = {c: (f if c in keep else type(f)(f.exponent, f.prefactor * factor, f.residual))
            for c, f in result.fits.items()}
    return vf.ScanResult(result.axis_name, rows, fits, result.config)


def cmd_otto(cfg: RunConfig, law: str, budget, power: float, rng, points) -> int:
    spec = cfg.spec
    k = 1.0 if cfg.angular else 2 * math.pi
    if budget is not None and cfg.units == "e0":
        budget = budget * spec.e0
    wfs = [k * f for f in _sweep(*(rng or (2.5e-3, 2.5)), points)]
    result = vf.otto_scaling(spec, wfs, law=law, budget=budget, power=power)
    result.config = {**cfg.provenance(), "law": law, "budget_raw": budget, "power": power}
    _emit(cfg, io.scan_to_csv(result) if cfg.format == "csv" else io.to_json(io.scan_to_dict(result)))
    return 0


def run_checks(cfg: RunConfig) -> list[dict]:
    """Each check: name, passed, expected (False when failure is inherent to
    the trajectory kind), value."""
    spec = cfg.spec
    traj = make_trajectory(spec, cfg.trajectory, cfg.tau)
    bc_ok = traj.satisfies_boundary_conditions()
    expected = cfg.trajectory != "qopt"
    checks = []

    def add(name, passed, value, exp=True):
        checks.append({"name": name, "passed": bool(passed), "expected": bool(exp), "value": value})

    res = traj.boundary_residuals()
    add("boundary_conditions", bc_ok, max(res), expected)
    rt = vf.roundtrip_check(spec, traj)
    add("ermakov_roundtrip", rt.passed, max(rt.residual_b, rt.residual_bdot), expected)

    direct = en.time_averaged_energy(spec, traj, check=False)
    reduced = en.reduced_energy_average(spec, traj)
    add("integration_by_parts", abs(direct - reduced) <= 1e-8 * abs(reduced),
        abs(direct - reduced) / abs(reduced), expected)
    bound = en.energy_bound(spec)
    add("bound_dominance", direct >= bound * (1 - 1e-12), direct / bound, expected)

    ends = en.instantaneous_std(spec, traj, np.array([0.0, spec.tf])) / spec.e0
    add("eigenstate_endpoints", float(np.max(ends)) < 1e-9, float(np.max(ends)), expected)

    if spec.n <= 4:
        times = np.random.default_rng(0).uniform(0.02, 0.98, 5) * spec.tf
        worst = 0.0
        for t in times:
            ref = float(en.instantaneous_std(spec, traj, t))
            worst = max(worst, abs(vf.variance_oracle(spec, traj, float(t)) / ref - 1))
        add("variance_oracle", worst < 1e-6, worst)

    if spec.n == 0:
        s_len, s_geo = en.fs_distance(spec, traj)
        add("anandan_aharonov", s_len >= s_geo, s_len - s_geo)

    if spec.omegaf != spec.omega0:
        bb = bang_bang_trajectory(spec)
        t, b, bd = vf.ermakov_forward(bb.profile, bb.spec)
        e_inst = (2 * spec.n + 1) / (4 * spec.omega0) * (bd ** 2 + bb.omega1 ** 2 * b ** 2
                                                         + spec.omega0 ** 2 / b ** 2)
        dev = float(np.max(np.abs(e_inst / en.bang_bang_energy(spec) - 1)))
        end = max(abs(b[-1] - spec.gamma) / spec.gamma, abs(bd[-1]) * bb.spec.tf)
        add("bang_bang_constant_energy", dev < 1e-8, dev)
        add("bang_bang_endpoint", end < 1e-8, end)
    return checks


def cmd_verify(cfg: RunConfig) -> int:
    checks = run_checks(cfg)
    failed = [c for c in checks if not c["passed"] and c["expected"]]
    for c in checks:
        if c["passed"]:
            status = "PASS"
        elif not c["expected"]:
            status = "XFAIL"
        else:
            status = "FAIL"
        print(f"{status:5s} {c['name']:28s} {c['value']:.3e}", file=sys.stderr)
    if cfg.trajectory == "qopt":
        print("note: the quasi-optimal trajectory fixes only b(0) and b(tf); endpoint-derivative "
              "checks are expected to fail", file=sys.stderr)
    _emit(cfg, io.to_json({"config": cfg.provenance(), "checks": checks, "passed": not failed}))
    return EXIT_VERIFY if failed else 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    cfg = _config(args, parser)
    try:
        if args.command == "design":
            return cmd_design(cfg)
        if args.command == "analyze":
            return cmd_analyze(cfg)
        if args.command == "scan":
            return cmd_scan(cfg, args.axis, args.range, args.points)
        if args.command == "otto":
            return cmd_otto(cfg, args.law, args.budget, args.power, args.range, args.points)
        return cmd_verify(cfg)
    except (RejectedTrajectory, SingularMatrixError) as exc:
        print(f"sta-harmonic: rejected trajectory: {exc}", file=sys.stderr)
        return EXIT_REJECTED
    except ValueError as exc:
        print(f"sta-harmonic: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
