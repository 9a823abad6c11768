"""Snapshot, ledger and metrics writers.

Snapshots sample every field at cell centres:

* CSV columns ``x, y, u, v, p, S_xx, S_xy, S_yy``;
* legacy VTK (ASCII) ``STRUCTURED_GRID`` with ``DIMENSIONS nx ny 1``, the
  centre points, a ``velocity`` vector and scalars ``p, S_xx, S_xy, S_yy``.

Ledger CSV columns are ``t, kinetic, bulk_diss, boundary_diss, work, defect``.
Metrics JSON is written with sorted keys so equal runs give equal bytes.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

SNAPSHOT_COLUMNS = ("x", "y", "u", "v", "p", "S_xx", "S_xy", "S_yy")


def centre_fields(grid, state) -> dict:
    X, Y = grid.centre_coords()
    return {
        "x": X,
        "y": Y,
        "u": grid.u_at_centres(state.u),
        "v": grid.v_at_centres(state.v),
        "p": state.p,
        "S_xx": state.S_c[..., 0],
        "S_xy": state.S_c[..., 2],
        "S_yy": state.S_c[..., 1],
    }


def write_snapshot_csv(path, grid, state) -> Path:
    path = Path(path)
    f = centre_fields(grid, state)
    cols = np.column_stack([f[c].ravel() for c in SNAPSHOT_COLUMNS])
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SNAPSHOT_COLUMNS)
        for row in cols:
            w.writerow([repr(float(x)) for x in row])
    return path


def write_vtk(path, grid, state, title: str = "flow snapshot") -> Path:
    path = Path(path)
    f = centre_fields(grid, state)
    n = grid.nx * grid.ny
    lines = [
        "# vtk DataFile Version 3.0",
        f"{title} t={state.t!r}",
        "ASCII",
        "DATASET STRUCTURED_GRID",
        f"DIMENSIONS {grid.nx} {grid.ny} 1",
        f"POINTS {n} double",
    ]
    lines += [f"{x!r} {y!r} 0.0" for x, y in zip(f["x"].ravel(), f["y"].ravel())]
    lines += [f"POINT_DATA {n}", "VECTORS velocity double"]
    lines += [f"{u!r} {v!r} 0.0" for u, v in zip(f["u"].ravel(), f["v"].ravel())]
    for name in ("p", "S_xx", "S_xy", "S_yy"):
        lines += [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
        lines += [repr(float(x)) for x in f[name].ravel()]
    path.write_text("\n".join(lines) + "\n")
    return path


def read_vtk_header(path) -> dict:
    """Dataset type and dimensions of a legacy VTK file (for checks)."""
    out = {}
    with Path(path).open() as fh:
        for line in fh:
            if line.startswith("DATASET"):
                out["dataset"] = line.split()[1]
            elif line.startswith("DIMENSIONS"):
                out["dimensions"] = tuple(int(x) for x in line.split()[1:])
                break
    return out


def write_ledger_csv(path, ledger) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(ledger.COLUMNS)
        for row in ledger.rows():
            w.writerow([repr(float(x)) for x in row])
    return path


def write_profile_csv(path, y, u, header=("y", "u")) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for a, b in zip(np.ravel(y), np.ravel(u)):
            w.writerow([repr(float(a)), repr(float(b))])
    return path


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=2) + "\n"


def write_json(path, obj) -> Path:
    path = Path(path)
    path.write_text(dumps(obj))
    return path
