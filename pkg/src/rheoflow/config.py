"""Scenario files: simulation configuration plus oracle and acceptance settings.

A scenario is a ``key = value`` file with sections::

    [scenario]  name, oracle, seed
    [grid]      nx, ny, lx, ly, dim
    [bulk]      kind + parameters, or file = <relation file>
    [boundary]  kind + parameters, or file = <relation file>
    [scheme]    eps, delta, dt, t_end, picard_sweeps, cutoff, steady_tol, max_steps
    [forcing]   bx, by            (expressions in x, y, t)
    [initial]   u, v              (expressions in x, y)  or  mode = stokes, amplitude
    [acceptance] profile_l2_rel, plug_halfwidth_cells, pressure_ratio_max,
                 steady_residual
    [output]    snapshot_every, vtk, csv

Unknown sections or keys are errors reported with their line number.
``oracle`` is one of ``none``, ``poiseuille`` (alias
``poiseuille_power_slip``), ``couette_stick_slip``, ``bingham_channel``,
``stokes_decay``.  The channel oracles share one steady profile solver.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

from .expr import Expression, ExpressionError
from .grid import Grid
from .kvfile import ConfigError, Entry, parse_file, parse_text, to_bool, to_float, to_int
from .relations import BoundaryRelation, BulkRelation, bundled_relation_dir, load_relation, relation_from_entries

ORACLES = ("none", "poiseuille", "poiseuille_power_slip", "couette_stick_slip", "bingham_channel", "stokes_decay")

_KEYS = {
    "scenario": {"name", "oracle", "seed"},
    "grid": {"nx", "ny", "lx", "ly", "dim"},
    "scheme": {"eps", "delta", "dt", "t_end", "picard_sweeps", "cutoff", "steady_tol", "max_steps"},
    "forcing": {"bx", "by"},
    "initial": {"u", "v", "mode", "amplitude"},
    "acceptance": {"profile_l2_rel", "plug_halfwidth_cells", "pressure_ratio_max", "steady_residual"},
    "output": {"snapshot_every", "vtk", "csv"},
}
_RELATION_SECTIONS = ("bulk", "boundary")


@dataclass(frozen=True)
class SimConfig:
    grid: Grid
    bulk: BulkRelation
    boundary: BoundaryRelation
    eps: float = 1e-3
    delta: float = 1e-2
    dt: float = 0.05
    t_end: float = 1.0
    bx: str = "0"
    by: str = "0"
    u0: str = "0"
    v0: str = "0"
    initial_mode: str = "expr"
    amplitude: float = 0.0
    picard_sweeps: int = 2
    cutoff: bool = True
    steady_tol: float | None = None
    max_steps: int = 1_000_000
    dim: int = 2

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be > 0")
        if not self.t_end >= 0:
            raise ValueError("t_end must be >= 0")
        if not 0.0 < self.eps < 1.0:
            raise ValueError("eps must lie in (0, 1)")
        if not 0.0 < self.delta <= 1.0:
            raise ValueError("delta must lie in (0, 1]")
        if not 1 <= self.picard_sweeps <= 3:
            raise ValueError("picard_sweeps must be 1, 2 or 3")
        if self.dim not in (2, 3):
            raise ValueError("dim must be 2 or 3")
        r = self.r
        lower = 2.0 * self.dim / (self.dim + 2.0)
        if not r > lower:
            raise ValueError(f"growth exponent r = {r:g} must exceed 2d/(d+2) = {lower:g}")
        if self.dim == 3:
            raise ValueError("three-dimensional runs are not supported")
        for name in ("bx", "by", "u0", "v0"):
            try:
                Expression(getattr(self, name), ("x", "y", "t"))
            except ExpressionError as exc:
                raise ValueError(f"{name}: {exc}") from None
        if self.initial_mode not in ("expr", "stokes"):
            raise ValueError("initial mode must be 'expr' or 'stokes'")

    @property
    def r(self) -> float:
        return self.bulk.growth_exponent

    @property
    def q(self) -> float:
        return self.boundary.growth_exponent

    @property
    def z(self) -> float:
        d, r = self.dim, self.r
        return max(r, self.q, (d + 2) * r / ((d + 2) * r - 2 * d))

    def with_(self, **changes) -> "SimConfig":
        return replace(self, **changes)


@dataclass(frozen=True)
class Scenario:
    name: str
    config: SimConfig
    oracle: str = "none"
    acceptance: dict = field(default_factory=dict)
    seed: int = 0
    snapshot_every: int = 0
    vtk: bool = False
    csv: bool = True
    path: str | None = None

    def with_config(self, **changes) -> "Scenario":
        return replace(self, config=self.config.with_(**changes))


def _resolve_relation_file(value: str, base: Path | None) -> Path:
    cands = []
    if base is not None:
        cands.append(base / value)
    cands.append(Path(value))
    cands.append(bundled_relation_dir() / value)
    for c in cands:
        if c.is_file():
            return c
    raise FileNotFoundError(value)


def scenario_from_entries(entries: list[Entry], path: str | None = None) -> Scenario:
    base = Path(path).parent if path else None
    sections: dict[str, list[Entry]] = {}
    for e in entries:
        if e.section == "":
            raise ConfigError(f"key {e.key!r} outside of any section", e.line, path)
        if e.section not in _KEYS and e.section not in _RELATION_SECTIONS:
            raise ConfigError(f"unknown section [{e.section}]", e.line, path)
        if e.section in _KEYS and e.key not in _KEYS[e.section]:
            raise ConfigError(f"unknown key {e.key!r} in [{e.section}]", e.line, path)
        sections.setdefault(e.section, []).append(e)

    def get(section, key):
        for e in sections.get(section, []):
            if e.key == key:
                return e
        return None

    def num(section, key, default, conv=to_float):
        e = get(section, key)
        return default if e is None else conv(e, path)

    rels = {}
    for sec in _RELATION_SECTIONS:
        es = sections.get(sec)
        if not es:
            raise ConfigError(f"missing [{sec}] section", None, path)
        f = get(sec, "file")
        if f is not None:
            if len(es) > 1:
                raise ConfigError(f"[{sec}] with 'file' takes no other keys", es[1].line, path)
            try:
                rp = _resolve_relation_file(f.value, base)
            except FileNotFoundError:
                raise ConfigError(f"relation file {f.value!r} not found", f.line, path) from None
            rels[sec] = load_relation(rp, sec)
        else:
            rels[sec] = relation_from_entries(es, sec, path)

    grid_keys = {k: get("grid", k) for k in ("nx", "ny", "lx", "ly")}
    for k, e in grid_keys.items():
        if e is None:
            raise ConfigError(f"missing grid key {k!r}", None, path)
    try:
        grid = Grid(to_int(grid_keys["nx"], path), to_int(grid_keys["ny"], path),
                    to_float(grid_keys["lx"], path), to_float(grid_keys["ly"], path))
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc), grid_keys["nx"].line, path) from None

    kw = {}
    for key, conv in (("eps", to_float), ("delta", to_float), ("dt", to_float), ("t_end", to_float),
                      ("picard_sweeps", to_int), ("steady_tol", to_float), ("max_steps", to_int)):
        e = get("scheme", key)
        if e is not None:
            kw[key] = conv(e, path)
    e = get("scheme", "cutoff")
    if e is not None:
        kw["cutoff"] = to_bool(e, path)
    for key in ("bx", "by"):
        e = get("forcing", key)
        if e is not None:
            kw[key] = e.value
    for key, name in (("u", "u0"), ("v", "v0")):
        e = get("initial", key)
        if e is not None:
            kw[name] = e.value
    e = get("initial", "mode")
    if e is not None:
        kw["initial_mode"] = e.value
    kw["amplitude"] = num("initial", "amplitude", 0.0)
    kw["dim"] = num("grid", "dim", 2, to_int)

    try:
        cfg = SimConfig(grid, rels["bulk"], rels["boundary"], **kw)
    except ValueError as exc:
        line = None
        msg = str(exc)
        for sec, keys in (("scheme", _KEYS["scheme"]), ("forcing", {"bx", "by"}), ("initial", {"u", "v", "mode"})):
            for k in keys:
                ent = get(sec, k)
                if ent is not None and msg.startswith(k):
                    line = ent.line
        if line is None and ("growth exponent" in msg or "three-dimensional" in msg or "dim" in msg):
            ent = get("grid", "dim")
            line = ent.line if ent else None
        raise ConfigError(msg, line, path) from None

    oracle_e = get("scenario", "oracle")
    oracle = oracle_e.value if oracle_e else "none"
    if oracle not in ORACLES:
        raise ConfigError(f"unknown oracle {oracle!r}", oracle_e.line, path)
    name_e = get("scenario", "name")
    name = name_e.value if name_e else (Path(path).stem if path else "scenario")
    acceptance = {e.key: to_float(e, path) for e in sections.get("acceptance", [])}
    return Scenario(
        name=name,
        config=cfg,
        oracle=oracle,
        acceptance=acceptance,
        seed=num("scenario", "seed", 0, to_int),
        snapshot_every=num("output", "snapshot_every", 0, to_int),
        vtk=to_bool(get("output", "vtk"), path) if get("output", "vtk") else False,
        csv=to_bool(get("output", "csv"), path) if get("output", "csv") else True,
        path=path,
    )


def load_scenario(path: str | Path) -> Scenario:
    return scenario_from_entries(parse_file(path), str(path))


def scenario_from_text(text: str, path: str | None = None) -> Scenario:
    return scenario_from_entries(parse_text(text, path), path)


def bundled_scenario_dir() -> Path:
    return Path(__file__).parent / "data" / "scenarios"


def bundled_scenarios() -> dict[str, Path]:
    return {p.stem: p for p in sorted(bundled_scenario_dir().glob("*.scn"))}
