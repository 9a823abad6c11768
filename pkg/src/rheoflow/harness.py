"""Scenario runner, oracle comparison, parameter sweeps and the frozen baseline."""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import Scenario, bundled_scenarios, load_scenario
from .diagnostics import (
    LedgerAccumulator,
    WeakResidual,
    dissipation_sign,
    divergence_ratio,
    pressure_diagnostic,
    wall_normal_max,
)
from .expr import Expression
from .grid import Grid
from .io import write_json, write_ledger_csv, write_profile_csv, write_snapshot_csv, write_vtk
from .oracles import analytic_poiseuille, plug_halfwidth, stokes_decay
from .solver import FlowSolver

CHANNEL_ORACLES = ("poiseuille", "poiseuille_power_slip", "couette_stick_slip", "bingham_channel")
SWEEP_PARAMS = ("eps", "delta", "h", "dt")

DIV_TOL = 1e-10
SIGN_TOL = 1e-12


class OracleMismatch(ValueError):
    """The oracle does not apply to the scenario's geometry or relations."""


def baseline_path() -> Path:
    return Path(__file__).parent / "data" / "baseline.json"


def load_baseline() -> dict:
    p = baseline_path()
    return json.loads(p.read_text()) if p.is_file() else {}


# oracles ----------------------------------------------------------------------------
def channel_force(scenario: Scenario) -> float:
    """Constant along-channel force of a channel oracle scenario."""
    cfg = scenario.config
    g = cfg.grid
    X, Y = g.u_coords()
    vals = []
    for t in (0.0, cfg.t_end):
        bx = np.broadcast_to(Expression(cfg.bx, ("x", "y", "t"))(x=X, y=Y, t=t), X.shape)
        by = np.broadcast_to(Expression(cfg.by, ("x", "y", "t"))(x=X, y=Y, t=t), X.shape)
        if np.any(by != 0):
            raise OracleMismatch("channel oracle needs by = 0")
        vals.append(bx)
    b = np.concatenate([v.ravel() for v in vals])
    if np.ptp(b) != 0:
        raise OracleMismatch("channel oracle needs a constant bx")
    return float(b[0])


def check_oracle(scenario: Scenario) -> None:
    o, cfg = scenario.oracle, scenario.config
    if o in CHANNEL_ORACLES:
        channel_force(scenario)
        if o == "bingham_channel" and not any(s == "s" for s, _ in cfg.bulk.kinks):
            raise OracleMismatch("bingham_channel needs a bulk relation with a yield stress")
        if o == "couette_stick_slip" and cfg.boundary.kind != "stick_slip":
            raise OracleMismatch("couette_stick_slip needs a stick_slip boundary")
    elif o == "stokes_decay":
        if cfg.initial_mode != "stokes":
            raise OracleMismatch("stokes_decay needs [initial] mode = stokes")
        if cfg.bulk.kind != "navier_stokes" or cfg.boundary.kind != "navier_slip":
            raise OracleMismatch("stokes_decay needs navier_stokes with navier_slip")


def oracle_profile(scenario: Scenario, y=None, t=None, eps: float | None = None):
    """Reference ``u`` at centred heights ``y`` (default: the grid's cell centres)."""
    cfg = scenario.config
    g = cfg.grid
    H = 0.5 * g.ly
    y = g.yc - H if y is None else np.asarray(y, dtype=float)
    if scenario.oracle in CHANNEL_ORACLES:
        _, u, _ = analytic_poiseuille(cfg.bulk, cfg.boundary, H, channel_force(scenario), y, eps=eps)
        return y, u
    if scenario.oracle == "stokes_decay":
        t = cfg.t_end if t is None else t
        return y, stokes_decay(cfg.bulk, cfg.boundary, H, cfg.amplitude, y, t, eps=cfg.eps)
    raise OracleMismatch(f"scenario {scenario.name!r} has no oracle")


def _l2_rel(a, b) -> float:
    den = float(np.sqrt(np.sum(b * b)))
    num = float(np.sqrt(np.sum((a - b) ** 2)))
    return num / den if den > 0 else num


def measured_plug_halfwidth(scenario: Scenario, state) -> float:
    """Half the height of the cells whose stress stays at or below the yield value."""
    cfg = scenario.config
    tau = next(v for s, v in cfg.bulk.kinks if s == "s")
    limit = tau / (1.0 - cfg.eps**2) * (1.0 + 1e-9)
    S = state.S_c
    mag = np.sqrt(S[..., 0] ** 2 + S[..., 1] ** 2 + 2.0 * S[..., 2] ** 2).mean(axis=1)
    return 0.5 * cfg.grid.dy * int(np.sum(mag <= limit))


# runs -------------------------------------------------------------------------------
@dataclass
class RunResult:
    scenario: Scenario
    metrics: dict
    checks: dict
    state: object = field(repr=False, default=None)
    ledger: object = field(repr=False, default=None)
    runtime: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.checks.values())

    @property
    def exit_code(self) -> int:
        return 0 if self.passed else 1


def _check(passed, value, bound):
    return {"passed": bool(passed), "value": value, "bound": bound}


def simulate(scenario: Scenario, on_state=None):
    """Run the solver and collect diagnostics; returns ``(state, ledger, metrics)``."""
    check_oracle(scenario)
    cfg = scenario.config
    g = cfg.grid
    fs = FlowSolver(cfg)
    st = fs.init()
    ledger = LedgerAccumulator(g, fs.body_force)
    weak = WeakResidual(g, fs.body_force)
    track = dict(div=0.0, wall=0.0, sign_bulk=0.0, sign_wall=0.0, pressure=0.0, cfl=0.0)

    def observe(s):
        ledger.add(s)
        weak.add(s)
        track["div"] = max(track["div"], divergence_ratio(g, s.u, s.v))
        track["wall"] = max(track["wall"], wall_normal_max(s.v))
        b, w = dissipation_sign(s)
        track["sign_bulk"] = min(track["sign_bulk"], b)
        track["sign_wall"] = min(track["sign_wall"], w)
        track["pressure"] = max(track["pressure"], pressure_diagnostic(s, cfg, fs.body_force)["ratio"])
        track["cfl"] = max(track["cfl"], fs.cfl(g.pack(s.u, s.v)))
        if on_state is not None:
            on_state(s)

    observe(st)
    steady_res = math.nan
    steady = False
    for _ in range(fs.n_steps()):
        prev = st
        st = fs.step(st)
        observe(st)
        umax = st.speed_max
        du = max(float(np.abs(st.u - prev.u).max()), float(np.abs(st.v - prev.v).max()))
        steady_res = du / (cfg.dt * umax) if umax > 0 else 0.0
        if cfg.steady_tol is not None and steady_res < cfg.steady_tol:
            steady = True
            break
    L = ledger.ledger
    metrics = {
        "scenario": scenario.name,
        "seed": scenario.seed,
        "steps": st.step,
        "t_final": st.t,
        "steady": steady,
        "steady_residual": steady_res,
        "max_div_ratio": track["div"],
        "max_wall_normal_velocity": track["wall"],
        "min_bulk_dissipation_sign": track["sign_bulk"],
        "min_wall_dissipation_sign": track["sign_wall"],
        "energy_defect": L.max_defect(normalized=False),
        "energy_defect_normalized": L.max_defect(normalized=True),
        "energy_scale": L.energy_scale,
        "kinetic_final": L.kinetic[-1],
        "bulk_dissipation": L.bulk_diss[-1],
        "boundary_dissipation": L.boundary_diss[-1],
        "work": L.work[-1],
        "weak_residual": weak.value(),
        "pressure_ratio_max": track["pressure"],
        "cfl_max": track["cfl"],
        "dt_plus_h": cfg.dt + g.h,
        "h": g.h,
        "dt": cfg.dt,
        "eps": cfg.eps,
        "delta": cfg.delta,
    }
    if scenario.oracle != "none":
        u_prof = st.u.mean(axis=1)
        y, ue = oracle_profile(scenario, t=st.t)
        metrics["profile_l2_rel"] = _l2_rel(u_prof, ue)
        if scenario.oracle in CHANNEL_ORACLES:
            _, ue_eps = oracle_profile(scenario, eps=cfg.eps)
            metrics["profile_l2_rel_eps"] = _l2_rel(u_prof, ue_eps)
        else:
            metrics["profile_l2_rel_eps"] = metrics["profile_l2_rel"]
        if scenario.oracle == "bingham_channel":
            f = channel_force(scenario)
            tau = next(v for s, v in cfg.bulk.kinks if s == "s")
            metrics["plug_halfwidth"] = measured_plug_halfwidth(scenario, st)
            metrics["plug_halfwidth_target"] = tau / abs(f)
            metrics["plug_halfwidth_oracle"] = plug_halfwidth(cfg.bulk, f)
    return st, L, metrics


def evaluate_checks(scenario: Scenario, metrics: dict, baseline: dict | None = None) -> dict:
    """Pass/fail of the invariant checks and the scenario's declared tolerances."""
    baseline = load_baseline() if baseline is None else baseline
    acc = scenario.acceptance
    g = scenario.config.grid
    checks = {
        "incompressibility": _check(metrics["max_div_ratio"] <= DIV_TOL, metrics["max_div_ratio"], DIV_TOL),
        "impermeability": _check(metrics["max_wall_normal_velocity"] == 0.0, metrics["max_wall_normal_velocity"], 0.0),
        "bulk_dissipation_sign": _check(metrics["min_bulk_dissipation_sign"] >= -SIGN_TOL,
                                        metrics["min_bulk_dissipation_sign"], -SIGN_TOL),
        "wall_dissipation_sign": _check(metrics["min_wall_dissipation_sign"] >= -SIGN_TOL,
                                        metrics["min_wall_dissipation_sign"], -SIGN_TOL),
    }
    c_scheme = baseline.get("C_scheme")
    if c_scheme is not None:
        bound = c_scheme * metrics["dt_plus_h"]
        checks["energy_inequality"] = _check(metrics["energy_defect_normalized"] <= bound,
                                             metrics["energy_defect_normalized"], bound)
    if "profile_l2_rel" in acc:
        checks["profile_l2_rel"] = _check(metrics.get("profile_l2_rel", math.inf) <= acc["profile_l2_rel"],
                                          metrics.get("profile_l2_rel"), acc["profile_l2_rel"])
    if "plug_halfwidth_cells" in acc:
        dev = abs(metrics["plug_halfwidth"] - metrics["plug_halfwidth_target"])
        bound = acc["plug_halfwidth_cells"] * g.dy
        checks["plug_halfwidth"] = _check(dev <= bound, dev, bound)
    if "pressure_ratio_max" in acc:
        checks["pressure_ratio"] = _check(metrics["pressure_ratio_max"] <= acc["pressure_ratio_max"],
                                          metrics["pressure_ratio_max"], acc["pressure_ratio_max"])
    if "steady_residual" in acc:
        checks["steady_residual"] = _check(metrics["steady_residual"] <= acc["steady_residual"],
                                           metrics["steady_residual"], acc["steady_residual"])
    return checks


def run_scenario(scenario: Scenario | str | Path, out_dir=None, seed: int | None = None,
                 baseline: dict | None = None) -> RunResult:
    """Run to ``t_end`` (or steady state), write artifacts to ``out_dir`` and check tolerances."""
    if not isinstance(scenario, Scenario):
        scenario = load_scenario(scenario)
    if seed is not None:
        from dataclasses import replace

        scenario = replace(scenario, seed=int(seed))
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    g = scenario.config.grid
    snaps = []

    def on_state(s):
        if out is not None and scenario.snapshot_every > 0 and s.step % scenario.snapshot_every == 0:
            snaps.append(s.step)
            _write_snapshot(out, scenario, g, s)

    t0 = time.perf_counter()
    st, ledger, metrics = simulate(scenario, on_state)
    runtime = time.perf_counter() - t0
    checks = evaluate_checks(scenario, metrics, baseline)
    metrics["checks"] = checks
    metrics["passed"] = all(c["passed"] for c in checks.values())
    if out is not None:
        if st.step not in snaps:
            _write_snapshot(out, scenario, g, st)
        write_ledger_csv(out / f"{scenario.name}_ledger.csv", ledger)
        if scenario.oracle != "none":
            y, ue = oracle_profile(scenario, t=st.t)
            _write_profiles(out, scenario, y, st, ue)
        write_json(out / f"{scenario.name}_metrics.json", metrics)
    return RunResult(scenario, metrics, checks, st, ledger, runtime)


def _write_profiles(out, scenario, y, st, ue):
    import csv

    with (out / f"{scenario.name}_profile.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("y", "u_numeric", "u_oracle"))
        for a, b, c in zip(y, st.u.mean(axis=1), ue):
            w.writerow([repr(float(a)), repr(float(b)), repr(float(c))])


def _write_snapshot(out, scenario, g, s):
    stem = out / f"{scenario.name}_{s.step:06d}"
    if scenario.csv:
        write_snapshot_csv(stem.with_suffix(".csv"), g, s)
    if scenario.vtk:
        write_vtk(stem.with_suffix(".vtk"), g, s, scenario.name)


def write_oracle(scenario: Scenario, path, n: int = 201) -> Path:
    """Oracle profile on ``n`` equispaced centred heights."""
    H = 0.5 * scenario.config.grid.ly
    y, u = oracle_profile(scenario, y=np.linspace(-H, H, n))
    return write_profile_csv(path, y, u)


# sweeps -----------------------------------------------------------------------------
def with_parameter(scenario: Scenario, param: str, value: float) -> Scenario:
    """Copy of ``scenario`` with one discretization parameter replaced.

    ``h`` sets ``dx = dy = h`` on the scenario's domain (``nx`` at least 4).
    """
    cfg = scenario.config
    if param in ("eps", "delta", "dt"):
        return scenario.with_config(**{param: float(value)})
    if param == "h":
        g = cfg.grid
        ny = int(round(g.ly / value))
        nx = max(4, int(round(g.lx / value)))
        if not (math.isclose(g.ly / ny, value, rel_tol=1e-9)):
            raise ValueError(f"h = {value} does not divide ly = {g.ly}")
        return scenario.with_config(grid=Grid(nx, ny, nx * value, g.ly))
    raise ValueError(f"unknown sweep parameter {param!r} (expected one of {', '.join(SWEEP_PARAMS)})")


@dataclass
class SweepResult:
    parameter: str
    values: list
    metrics: list
    errors: list
    differences: list
    orders: list
    identical: bool
    failed: bool = False
    message: str = ""

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in
                ("parameter", "values", "metrics", "errors", "differences", "orders", "identical", "failed", "message")}


def _error_metric(scenario: Scenario, param: str) -> str | None:
    if scenario.oracle == "none":
        return None
    return "profile_l2_rel_eps" if param in ("h", "dt") else "profile_l2_rel"


def _sweep_one(args):
    scenario, path, param, value = args
    if scenario is None:
        scenario = load_scenario(path)
    sc = with_parameter(scenario, param, value)
    t0 = time.perf_counter()
    st, _, metrics = simulate(sc)
    return metrics, time.perf_counter() - t0, (st.u, st.v, st.p)


def sweep(scenario: Scenario | str | Path, param: str, values, threads: int = 1) -> SweepResult:
    """Run ``scenario`` once per value of ``param`` and compare the runs."""
    path = None
    if not isinstance(scenario, Scenario):
        path = str(scenario)
        scenario = load_scenario(scenario)
    values = [float(v) for v in values]
    if param not in SWEEP_PARAMS:
        raise ValueError(f"unknown sweep parameter {param!r} (expected one of {', '.join(SWEEP_PARAMS)})")
    if len(values) < 2:
        raise ValueError("a sweep needs at least two values")
    d = np.diff(values)
    if not (np.all(d > 0) or np.all(d < 0)):
        raise ValueError("sweep values must be strictly monotone")
    for v in values:
        with_parameter(scenario, param, v)
    jobs = [(None if path and threads > 1 else scenario, path, param, v) for v in values]
    try:
        if threads > 1 and path is not None:
            with ProcessPoolExecutor(max_workers=threads) as ex:
                outs = list(ex.map(_sweep_one, jobs))
        else:
            outs = [_sweep_one(j) for j in jobs]
    except Exception as exc:  # any failed run fails the sweep
        return SweepResult(param, values, [], [], [], [], False, True, f"{type(exc).__name__}: {exc}")
    metrics, fields = [], []
    for m, rt, f in outs:
        m = dict(m)
        m["runtime"] = rt
        metrics.append(m)
        fields.append(f)
    key = _error_metric(scenario, param)
    diffs = []
    for (a, b) in zip(fields[:-1], fields[1:]):
        if a[0].shape == b[0].shape:
            num = np.sqrt(np.sum((a[0] - b[0]) ** 2) + np.sum((a[1] - b[1]) ** 2))
            den = np.sqrt(np.sum(b[0] ** 2) + np.sum(b[1] ** 2))
            diffs.append(float(num / den) if den > 0 else float(num))
        else:
            diffs.append(None)
    errors = [m.get(key) for m in metrics] if key else list(diffs)
    orders = []
    for k in range(len(errors) - 1):
        e0, e1 = errors[k], errors[k + 1]
        if e0 is None or e1 is None or e0 <= 0 or e1 <= 0:
            orders.append(None)
            continue
        ratio = values[k] / values[k + 1]
        orders.append(math.log(e0 / e1) / math.log(ratio))
    identical = all(
        np.array_equal(a[i], b[i]) for a, b in zip(fields[:-1], fields[1:]) for i in range(3)
    )
    finite = all(
        isinstance(v, (int, float)) and math.isfinite(v)
        for m in metrics for k2, v in m.items() if k2 in ("energy_defect", "weak_residual", "runtime")
    )
    return SweepResult(param, values, metrics, errors, diffs, orders, identical, not finite,
                       "" if finite else "non-finite metric")


# baseline ------------------------------------------------------------------------------
def measure_baseline(names=None, margin: float = 2.0) -> dict:
    """Run the bundled suite and derive the frozen energy constant.

    ``C_scheme`` is ``margin`` times the largest ``defect / (dt + h)``
    observed (normalized defect); it is written once and then only read.
    """
    per = {}
    for name, path in bundled_scenarios().items():
        if names and name not in names:
            continue
        sc = load_scenario(path)
        _, _, m = simulate(sc)
        per[name] = {
            "defect_over_dt_plus_h": max(m["energy_defect_normalized"], 0.0) / m["dt_plus_h"],
            "pressure_ratio_max": m["pressure_ratio_max"],
        }
    worst = max((v["defect_over_dt_plus_h"] for v in per.values()), default=0.0)
    return {"C_scheme": margin * worst if worst > 0 else 1e-12, "margin": margin, "scenarios": per}
