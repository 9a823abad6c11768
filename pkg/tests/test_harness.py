from __future__ import annotations

import csv
import json
import math

import numpy as np
import pytest
from conftest import channel_text

from rheoflow.config import bundled_scenarios, load_scenario, scenario_from_text
from rheoflow.harness import (
    OracleMismatch,
    load_baseline,
    run_scenario,
    sweep,
    with_parameter,
    write_oracle,
)
from rheoflow.io import read_vtk_header

REST = bundled_scenarios()["rest"]


def test_rest_run_passes_with_zero_metrics(tmp_path):
    res = run_scenario(REST, out_dir=tmp_path)
    assert res.exit_code == 0
    m = res.metrics
    for key in ("max_div_ratio", "max_wall_normal_velocity", "energy_defect", "kinetic_final",
                "bulk_dissipation", "boundary_dissipation", "work", "weak_residual", "pressure_ratio_max"):
        assert m[key] == 0.0, key
    assert m["steps"] == 10


def test_rest_artifacts(tmp_path):
    text = REST.read_text() + "\n[output]\nsnapshot_every = 5\nvtk = on\n"
    sc = scenario_from_text(text, str(REST))
    run_scenario(sc, out_dir=tmp_path)
    names = sorted(p.name for p in tmp_path.iterdir())
    assert "rest_ledger.csv" in names and "rest_metrics.json" in names
    assert {"rest_000000.csv", "rest_000005.csv", "rest_000010.csv", "rest_000010.vtk"} <= set(names)
    with (tmp_path / "rest_000010.csv").open() as fh:
        header = next(csv.reader(fh))
    assert header == ["x", "y", "u", "v", "p", "S_xx", "S_xy", "S_yy"]
    with (tmp_path / "rest_ledger.csv").open() as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["t", "kinetic", "bulk_diss", "boundary_diss", "work", "defect"]
    assert len(rows) == 12
    hdr = read_vtk_header(tmp_path / "rest_000010.vtk")
    assert hdr == {"dataset": "STRUCTURED_GRID", "dimensions": (sc.config.grid.nx, sc.config.grid.ny, 1)}


def test_metrics_json_is_reproducible(tmp_path):
    text = channel_text(bx="1", dt=0.1, t_end=0.5, oracle="poiseuille")
    sc = scenario_from_text(text)
    run_scenario(sc, out_dir=tmp_path / "a", seed=3)
    run_scenario(sc, out_dir=tmp_path / "b", seed=3)
    a = (tmp_path / "a" / "t_metrics.json").read_bytes()
    b = (tmp_path / "b" / "t_metrics.json").read_bytes()
    assert a == b
    m = json.loads(a)
    assert m["seed"] == 3 and math.isfinite(m["profile_l2_rel"])
    assert "runtime" not in m


def test_tolerance_failure_gives_exit_one():
    text = channel_text(bx="1", dt=0.1, t_end=0.5, oracle="poiseuille") + "[acceptance]\nprofile_l2_rel = 1e-6\n"
    res = run_scenario(scenario_from_text(text))
    assert not res.checks["profile_l2_rel"]["passed"]
    assert res.exit_code == 1


def test_oracle_mismatch():
    with pytest.raises(OracleMismatch):
        run_scenario(scenario_from_text(channel_text(bx="y", oracle="poiseuille")))
    with pytest.raises(OracleMismatch):
        run_scenario(scenario_from_text(channel_text(bx="1", oracle="couette_stick_slip")))


def test_oracle_file(tmp_path):
    sc = load_scenario(bundled_scenarios()["poiseuille_NS_navier"])
    out = write_oracle(sc, tmp_path / "o.csv", n=5)
    rows = list(csv.reader(out.open()))
    assert rows[0] == ["y", "u"]
    y = np.array([float(r[0]) for r in rows[1:]])
    u = np.array([float(r[1]) for r in rows[1:]])
    np.testing.assert_allclose(u, (1 - y**2) / 2 + 1, rtol=1e-12)


def test_delta_sweep_on_rest_is_identical():
    res = sweep(REST, "delta", [1e-1, 1e-2, 1e-3])
    assert not res.failed and res.identical
    assert res.differences == [0.0, 0.0]


def test_sweep_validation():
    with pytest.raises(ValueError):
        sweep(REST, "delta", [1e-1, 1e-3, 1e-2])
    with pytest.raises(ValueError):
        sweep(REST, "colour", [1, 2])
    with pytest.raises(ValueError):
        sweep(REST, "h", [0.3, 0.1])


def test_with_parameter_h():
    sc = load_scenario(bundled_scenarios()["poiseuille_NS_navier"])
    g = with_parameter(sc, "h", 1 / 16).config.grid
    assert (g.dx, g.dy, g.ly) == (1 / 16, 1 / 16, 2.0)


def test_dt_sweep_runs_in_processes():
    res = sweep(REST, "dt", [0.2, 0.1], threads=2)
    assert not res.failed and len(res.metrics) == 2


def test_baseline_is_frozen():
    base = load_baseline()
    assert base["C_scheme"] > 0
    assert set(base["scenarios"]) == set(bundled_scenarios())
