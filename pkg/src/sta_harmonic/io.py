"""CSV / JSON serialisation of tables, scans and bound surfaces.

CSV layout: a ``# sta-harmonic v<version>`` line, a comma-separated header,
data rows with 17 significant digits, then optional ``# fit {json}`` and
``# config {json}`` trailer lines. Every writer has a matching reader that
reproduces the original object exactly.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from dataclasses import asdict

from . import __version__
from .numerics import FitResult
from .verifier import Grid2D, ScanResult

MAGIC = f"# sta-harmonic v{__version__}"


def fmt(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if value is None:
        return "nan"
    return format(float(value), ".17g")


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=True)


def table_to_csv(columns, rows, trailer: list[str] = ()) -> str:
    lines = [MAGIC, ",".join(columns)]
    lines += [",".join(fmt(v) for v in row) for row in rows]
    lines += list(trailer)
    return "\n".join(lines) + "\n"


def parse_csv(text: str) -> tuple[list[str], list[list[float]], list[tuple[str, object]]]:
    """Split a CSV document into (columns, rows, trailer) with trailer entries
    given as (tag, decoded json)."""
    lines = text.splitlines()
    if not lines or not lines[0].startswith("# sta-harmonic v"):
        raise ValueError("not an sta-harmonic CSV file")
    columns = lines[1].split(",")
    rows, trailer = [], []
    for line in lines[2:]:
        if not line:
            continue
        if line.startswith("# "):
            tag, _, payload = line[2:].partition(" ")
            trailer.append((tag, json.loads(payload)))
        else:
            rows.append([float(v) for v in line.split(",")])
    return columns, rows, trailer


# --- scans -----------------------------------------------------------------

def scan_to_csv(result: ScanResult) -> str:
    columns = [result.axis_name, *result.columns]
    rows = [[x, *(q[c] for c in result.columns)] for x, q in result.rows]
    trailer = [f"# fit {_dumps({'column': name, **asdict(fit)})}" for name, fit in result.fits.items()]
    if result.config:
        trailer.append(f"# config {_dumps(result.config)}")
    return table_to_csv(columns, rows, trailer)


def scan_from_csv(text: str) -> ScanResult:
    columns, rows, trailer = parse_csv(text)
    axis, names = columns[0], columns[1:]
    result = ScanResult(axis, [(r[0], dict(zip(names, r[1:]))) for r in rows])
    for tag, payload in trailer:
        if tag == "fit":
            name = payload.pop("column")
            result.fits[name] = FitResult(**payload)
        elif tag == "config":
            result.config = payload
    return result


def scan_to_dict(result: ScanResult) -> dict:
    return {
        "axis_name": result.axis_name,
        "columns": result.columns,
        "rows": [{result.axis_name: x, **q} for x, q in result.rows],
        "fits": {k: asdict(v) for k, v in result.fits.items()},
        "config": result.config,
    }


def scan_from_dict(d: dict) -> ScanResult:
    axis = d["axis_name"]
    rows = [(r[axis], {c: r[c] for c in d["columns"]}) for r in d["rows"]]
    fits = {k: FitResult(**v) for k, v in d["fits"].items()}
    return ScanResult(axis, rows, fits, d.get("config", {}))


# --- 2-D bound surface -----------------------------------------------------

def grid_to_csv(grid: Grid2D) -> str:
    rows = [[tf, wf, grid.bound[i][j]] for i, tf in enumerate(grid.tf) for j, wf in enumerate(grid.wf)]
    trailer = [f"# config {_dumps(grid.config)}"] if grid.config else []
    return table_to_csv(["tf", "wf", "bound"], rows, trailer)


def grid_from_csv(text: str) -> Grid2D:
    _, rows, trailer = parse_csv(text)
    tfs = list(dict.fromkeys(r[0] for r in rows))
    wfs = list(dict.fromkeys(r[1] for r in rows))
    bound = [[rows[i * len(wfs) + j][2] for j in range(len(wfs))] for i in range(len(tfs))]
    config = next((p for tag, p in trailer if tag == "config"), {})
    return Grid2D(tf=tfs, wf=wfs, bound=bound, config=config)


def grid_to_dict(grid: Grid2D) -> dict:
    return asdict(grid)


# --- output ----------------------------------------------------------------

def to_json(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True, allow_nan=True) + "\n"


def _clean(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def write_text(text: str, path: str | None, stream=None) -> None:
    """Write to ``path`` atomically (temp file + rename), or to ``stream``."""
    if path is None:
        stream.write(text)
        return
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".sta-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
