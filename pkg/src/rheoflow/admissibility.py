"""Sampling-based checks of the structural conditions on implicit relations.

Each check returns an :class:`AdmissibilityReport`.  Conditions are labelled
``G1``, ``G2``, ``G2star``, ``G3`` and ``G4`` for bulk and boundary relations
alike; ``report.target`` tells them apart.

``G1``
    Lipschitz continuity: slopes ``|G(x1) - G(x2)| / |x1 - x2|`` over nearby
    pairs on each radius shell.  Passes when every slope is finite; a growing
    slope across shells is flagged as super-linear growth.
``G2``
    Derivative signs at graph points, by central differences and randomized
    Rayleigh quotients.
``G2star``
    Monotonicity ``(S1 - S2):(D1 - D2) >= 0`` over pairs of graph points.
``G3``
    Asymptotic sign of ``G:S`` along rays in ``S`` (or ``G:D`` along rays in
    ``D``); reports ``passed``, ``failed`` or ``inconclusive``.
``G4``
    Coercivity ``S:D >= C1 (|S|^r' + |D|^r) - C2`` fitted on graph points;
    also fails when the least ratio ``S:D / (|S|^r' + |D|^r)`` decays faster
    than ``R**DECAY_LIMIT`` across the outer shells.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .relations import BoundaryRelation, BulkRelation, relation_to_text
from .sampling import Sampler, fit_coercivity
from .tensors import mandel_size, norms

TOL = 1e-7
PROBES = 256
CONDITIONS = ("G1", "G2", "G2star", "G3", "G4")
DECAY_LIMIT = -0.5


@dataclass
class AdmissibilityReport:
    condition: str
    passed: bool
    estimated_constants: dict = field(default_factory=dict)
    worst_witness: dict | None = None
    status: str = ""
    target: str = "bulk"
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.status:
            self.status = "passed" if self.passed else "failed"

    def to_dict(self) -> dict:
        return _jsonable(asdict(self))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else str(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _components(rel, dim: int) -> int:
    return mandel_size(dim) if rel.target == "bulk" else dim


def _graph_sample(rel, sampler: Sampler, m: int, stream: int):
    pts = sampler.shells(m, stream).reshape(-1, m)
    nsh = len(sampler.radii)
    shell = np.repeat(np.arange(nsh), sampler.count)
    t = norms(pts)
    dirs = sampler.directions(len(t), m, stream + 100)
    return t, dirs, shell


# -- G1 ----------------------------------------------------------------------

def check_lipschitz(rel, sampler: Sampler | None = None, dim: int = 2) -> AdmissibilityReport:
    sampler = sampler or Sampler()
    m = _components(rel, dim)
    X = sampler.shells(2 * m, stream=1)
    nsh, cnt, _ = X.shape
    rng = sampler.rng(2)
    radii = sampler.radii[:, None, None]
    # mixed, stress-only and rate-only perturbations
    dirs = rng.standard_normal((3, nsh, cnt, 2 * m))
    dirs[1, ..., m:] = 0.0
    dirs[2, ..., :m] = 0.0
    dirs /= norms(dirs)[..., None]
    G = lambda x: rel.residual(x[..., :m], x[..., m:])
    with np.errstate(all="ignore"):
        G0 = G(X)
        slopes = np.empty((3, nsh, cnt))
        for k in range(3):
            dX = 0.05 * radii * dirs[k]
            slopes[k] = norms(G(X + dX) - G0) / norms(dX)
    finite = np.isfinite(slopes)
    per_shell = np.where(finite, slopes, -np.inf).max(axis=(0, 2))
    consts = {"L": float(per_shell.max()), "slope_per_shell": per_shell.tolist(),
              "radii": sampler.radii.tolist()}
    if not np.all(finite):
        k, i, j = np.argwhere(~finite)[0]
        wit = {"x1": X[i, j].tolist(), "x2": (X[i, j] + 0.05 * sampler.radii[i] * dirs[k, i, j]).tolist(),
               "reason": "non-finite evaluation"}
        return AdmissibilityReport("G1", False, consts, wit, target=rel.target)
    lo, hi = per_shell[0], per_shell[-1]
    if lo > 0 and hi > 0:
        expo = float(np.log(hi / lo) / np.log(sampler.radii[-1] / sampler.radii[0]))
    else:
        expo = 0.0
    consts["slope_growth_exponent"] = expo
    consts["superlinear_growth"] = bool(expo > 0.05)
    k, i, j = np.unravel_index(np.argmax(slopes), slopes.shape)
    wit = {"x1": X[i, j].tolist(), "x2": (X[i, j] + 0.05 * sampler.radii[i] * dirs[k, i, j]).tolist(),
           "slope": float(slopes[k, i, j])}
    return AdmissibilityReport("G1", True, consts, wit, target=rel.target)


# -- G2 ----------------------------------------------------------------------

def _fd_jacobians(rel, S, D, h):
    n, m = S.shape
    JA = np.empty((n, m, m))
    JB = np.empty((n, m, m))
    hh = h[:, None]
    for k in range(m):
        E = np.zeros_like(S)
        E[:, k] = h
        JA[:, :, k] = (rel.residual(S + E, D) - rel.residual(S - E, D)) / (2 * hh)
        JB[:, :, k] = (rel.residual(S, D + E) - rel.residual(S, D - E)) / (2 * hh)
    return JA, JB


def sign_quotients(JA, JB, X):
    """Rayleigh quotients of the four sign conditions for unit probes ``X``."""
    qa = np.einsum("pi,nij,pj->np", X, JA, X)
    qb = np.einsum("pi,nij,pj->np", X, JB, X)
    ta = np.einsum("nji,pj->npi", JA, X)
    tb = np.einsum("nji,pj->npi", JB, X)
    qp = np.einsum("npi,npi->np", ta, tb)
    return qa, qb, qa - qb, qp


def fd_step(S, D, factor=1e-5):
    return factor * (1.0 + np.sqrt(norms(S) ** 2 + norms(D) ** 2))


def _near_kink(rel, s, d, radius):
    near = np.zeros(s.shape, dtype=bool)
    for side, val in rel.kinks:
        mag = s if side == "s" else d
        near |= np.abs(mag - val) < radius
    return near


def check_derivative_signs(rel, sampler: Sampler | None = None, fd_step_factor: float = 1e-5,
                           dim: int = 2, tol: float = TOL, probes: int = PROBES,
                           max_retries: int = 20) -> AdmissibilityReport:
    """Sign conditions on ``dG/dS`` and ``dG/dD`` at sampled graph points."""
    sampler = sampler or Sampler()
    if not fd_step_factor > 0:
        raise ValueError("fd_step must be > 0")
    m = _components(rel, dim)
    t, dirs, _ = _graph_sample(rel, sampler, m, stream=3)
    rng = sampler.rng(4)
    excl_factor = 10.0
    keep = np.ones(len(t), dtype=bool)
    for attempt in range(max_retries + 1):
        S, D = rel.graph_points(t, dirs)
        h = fd_step(S, D, fd_step_factor)
        near = _near_kink(rel, norms(S), norms(D), excl_factor * h)
        if not np.any(near):
            break
        if attempt == max_retries:
            keep = ~near
            break
        t = np.where(near, t * np.exp(rng.uniform(-0.3, 0.3, size=t.shape)), t)
    S, D, h = S[keep], D[keep], h[keep]
    X = rng.standard_normal((probes, m))
    X /= norms(X)[:, None]
    JA, JB = _fd_jacobians(rel, S, D, h)
    qa, qb, qd, qp = sign_quotients(JA, JB, X)
    stats = {
        "A_min": (qa, np.argmin, lambda v: v >= -tol),
        "B_max": (qb, np.argmax, lambda v: v <= tol),
        "AminusB_min": (qd, np.argmin, lambda v: v > tol),
        "product_max": (qp, np.argmax, lambda v: v <= tol),
    }
    consts = {"fd_step_factor": fd_step_factor, "exclusion_radius_factor": excl_factor,
              "tol": tol, "probes": probes, "points": int(len(S)), "dropped": int((~keep).sum())}
    passed = True
    worst = None
    for name, (q, pick, ok) in stats.items():
        if not np.all(np.isfinite(q)):
            n, p = np.argwhere(~np.isfinite(q))[0]
            passed = False
            worst = worst or {"condition": name, "S": S[n], "D": D[n], "X": X[p], "value": "non-finite"}
            consts[name] = float("nan")
            continue
        flat = pick(q)
        n, p = np.unravel_index(flat, q.shape)
        val = float(q[n, p])
        consts[name] = val
        if not ok(val):
            passed = False
            if worst is None:
                worst = {"condition": name, "S": S[n], "D": D[n], "X": X[p], "value": val,
                         "fd_step": float(h[n])}
    if len(S) == 0:
        passed = False
        worst = {"reason": "all samples fell into kink neighbourhoods"}
    return AdmissibilityReport("G2", passed, consts, _jsonable(worst), target=rel.target)


# -- G2* ---------------------------------------------------------------------

def check_graph_monotone(rel, sampler: Sampler | None = None, dim: int = 2, tol: float = TOL,
                         pairs_per_point: int = 4) -> AdmissibilityReport:
    sampler = sampler or Sampler()
    m = _components(rel, dim)
    t, dirs, _ = _graph_sample(rel, sampler, m, stream=5)
    S, D = rel.graph_points(t, dirs)
    n = len(t)
    rng = sampler.rng(6)
    i = np.concatenate([np.arange(n)] * pairs_per_point + [np.arange(n)])
    j = np.concatenate([rng.permutation(n) for _ in range(pairs_per_point)] + [np.arange(n)])
    # collinear pairs along the same direction, where non-monotone responses show up
    t2 = t * np.exp(rng.uniform(-1.0, 1.0, size=n))
    S2, D2 = rel.graph_points(t2, dirs)
    S1 = np.concatenate([S[i], S])
    D1 = np.concatenate([D[i], D])
    Sb = np.concatenate([S[j], S2])
    Db = np.concatenate([D[j], D2])
    dS, dD = S1 - Sb, D1 - Db
    prod = np.einsum("ij,ij->i", dS, dD)
    scale = norms(dS) * norms(dD)
    thresh = -tol * (1.0 + scale)
    viol = prod - thresh
    k = int(np.argmin(viol))
    with np.errstate(invalid="ignore", divide="ignore"):
        normalized = np.where(scale > 0, prod / np.where(scale > 0, scale, 1.0), 1.0)
    consts = {"min_product": float(prod.min()), "min_normalized_product": float(normalized.min()),
              "pairs": int(len(prod)), "tol": tol}
    passed = bool(np.all(np.isfinite(prod)) and viol.min() >= 0.0)
    wit = {"S1": S1[k], "D1": D1[k], "S2": Sb[k], "D2": Db[k], "product": float(prod[k])}
    return AdmissibilityReport("G2star", passed, consts, _jsonable(wit), target=rel.target)


# -- G3 ----------------------------------------------------------------------

def _trend(vals, sign, tol):
    """Classify the tail of ``sign * vals`` along a ray: pos, nonpos or decaying."""
    v = sign * vals[..., -3:]
    if np.any(~np.isfinite(v)):
        return "nonpos"
    if np.all(v[..., -1] <= tol):
        return "nonpos"
    if np.all(v > tol) and v[..., -1] >= v[..., 0] * (1.0 - 1e-9):
        return "pos"
    return "decay"


def _branch_status(values, sign, tol):
    kinds = [_trend(values[f, k], sign, tol) for f in range(values.shape[0]) for k in range(values.shape[1])]
    if all(k == "pos" for k in kinds):
        return "passed", kinds
    if any(k == "nonpos" for k in kinds):
        return "failed", kinds
    return "inconclusive", kinds


def check_asymptotics(rel, ray_count: int = 32, radius_schedule=None, seed: int = 0, dim: int = 2,
                      tol: float = TOL) -> AdmissibilityReport:
    radii = np.asarray(radius_schedule if radius_schedule is not None else np.geomspace(1.0, 1e6, 7), dtype=float)
    if len(radii) < 3 or np.any(np.diff(radii) <= 0):
        raise ValueError("radius schedule must be increasing with at least three entries")
    if radii[-1] / radii[0] < 1e3 * (1 - 1e-12):
        raise ValueError("radius schedule must span at least three decades")
    m = _components(rel, dim)
    rng = np.random.default_rng([seed, 7])
    rays = rng.standard_normal((ray_count, m))
    rays /= norms(rays)[:, None]
    fixed_dirs = rng.standard_normal((2, m))
    fixed_dirs /= norms(fixed_dirs)[:, None]
    fixed = np.concatenate([np.zeros((1, m)), fixed_dirs * 1.0, fixed_dirs * 10.0])
    R = radii[None, None, :, None]
    Y = R * rays[None, :, None, :]  # (1, rays, radii, m)
    F = np.broadcast_to(fixed[:, None, None, :], (len(fixed), ray_count, len(radii), m))
    Yb = np.broadcast_to(Y, F.shape)
    with np.errstate(all="ignore"):
        gs = np.einsum("...i,...i->...", rel.residual(Yb, F), Yb)
        gd = np.einsum("...i,...i->...", rel.residual(F, Yb), Yb)
    s_status, _ = _branch_status(gs, 1.0, tol)
    d_status, _ = _branch_status(gd, -1.0, tol)
    if "passed" in (s_status, d_status):
        status = "passed"
    elif s_status == "failed" and d_status == "failed":
        status = "failed"
    else:
        status = "inconclusive"
    consts = {"stress_branch": s_status, "rate_branch": d_status,
              "min_GS_at_largest_radius": float(np.nanmin(gs[..., -1])),
              "max_GD_at_largest_radius": float(np.nanmax(gd[..., -1])),
              "radii": radii.tolist(), "rays": ray_count}
    wit = None
    if status != "passed":
        f, k = np.unravel_index(np.nanargmin(gs[..., -1]), gs.shape[:2])
        wit = {"fixed_D": fixed[f], "S": Y[0, k, -1], "G_dot_S": float(gs[f, k, -1])}
    return AdmissibilityReport("G3", status == "passed", consts, _jsonable(wit), status=status,
                               target=rel.target)


# -- G4 ----------------------------------------------------------------------

def check_coercivity(rel, sampler: Sampler | None = None, dim: int = 2) -> AdmissibilityReport:
    sampler = sampler or Sampler()
    m = _components(rel, dim)
    t, dirs, shell = _graph_sample(rel, sampler, m, stream=8)
    S, D = rel.graph_points(t, dirs)
    r = rel.growth_exponent
    rp = r / (r - 1.0)
    sd = np.einsum("ij,ij->i", S, D)
    s, d = norms(S), norms(D)
    c1, c2, k = fit_coercivity(sd, s, d, rp, r, shell, 1.0 / r)
    decay = _ratio_decay(sd, s ** rp + d ** r, shell, sampler.radii)
    consts = {"C1": c1, "C2": c2, "r": r, "r_dual": rp}
    wit = {"S": S[k], "D": D[k], "S_dot_D": float(sd[k]),
           "bound": float(c1 * (s[k] ** rp + d[k] ** r) - c2) if c1 > 0 else None}
    passed = bool(c1 > 0) and not decay < DECAY_LIMIT
    return AdmissibilityReport("G4", passed, consts, _jsonable(wit), target=rel.target,
                               details={"ratio_decay_exponent": decay, "decay_limit": DECAY_LIMIT})


def _ratio_decay(sd, growth, shell, radii):
    """Log-log slope of the least ``S:D / (|S|^r' + |D|^r)`` over the outer shells.

    A coercive relation keeps this ratio bounded below, so the slope tends
    to zero or above; a finite sample cannot rule out a tiny ``C1`` on its
    own, but a ratio that keeps falling like a power of the radius does.
    """
    n = len(radii)
    if n < 2:
        return 0.0
    inner = max(0, n - 3)
    with np.errstate(divide="ignore", invalid="ignore"):
        q = sd / growth
    lo = np.nanmin(q[shell == inner])
    hi = np.nanmin(q[shell == n - 1])
    if not (lo > 0 and hi > 0):
        return 0.0 if hi > 0 or lo <= 0 else -np.inf
    return float(np.log(hi / lo) / np.log(radii[-1] / radii[inner]))


# -- bundles -----------------------------------------------------------------

def check_all(rel, sampler: Sampler | None = None, dim: int = 2, fd_step_factor: float = 1e-5):
    sampler = sampler or Sampler()
    return [
        check_lipschitz(rel, sampler, dim),
        check_derivative_signs(rel, sampler, fd_step_factor, dim),
        check_graph_monotone(rel, sampler, dim),
        check_asymptotics(rel, seed=sampler.seed, dim=dim),
        check_coercivity(rel, sampler, dim),
    ]


def check_boundary(rel: BoundaryRelation, sampler: Sampler | None = None, dim: int = 2):
    if not isinstance(rel, BoundaryRelation):
        raise TypeError("check_boundary needs a BoundaryRelation")
    return check_all(rel, sampler, dim)


def report_dict(rel, reports, sampler: Sampler | None = None, extra: dict | None = None) -> dict:
    """JSON-ready admissibility report.

    Schema: ``relation`` (kind, target, params, form, text), ``sampler``
    (seed, count, radii, distribution), ``passed`` (all conditions),
    ``conditions``: list of ``{condition, passed, status, target,
    estimated_constants, worst_witness, details}``, plus optional extras.
    """
    sampler = sampler or Sampler()
    out = {
        "relation": {"kind": rel.kind, "target": rel.target, "params": dict(rel.params),
                     "form": rel.orientation_form, "text": relation_to_text(rel)},
        "sampler": {"seed": sampler.seed, "count": sampler.count,
                    "radii": list(sampler.radius_schedule), "distribution": sampler.distribution},
        "passed": all(r.passed for r in reports),
        "conditions": [r.to_dict() for r in reports],
    }
    if extra:
        out.update(_jsonable(extra))
    return out


def write_report(path, rel, reports, sampler=None, extra=None) -> dict:
    data = report_dict(rel, reports, sampler, extra)
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
    return data


def compare_forms(rel: BulkRelation, sampler: Sampler | None = None, dim: int = 2) -> dict:
    """Run the derivative-sign check on every residual form a model offers."""
    out = {}
    for form in rel.available_forms:
        alt = rel.with_form(form)
        rep = check_derivative_signs(alt, sampler, dim=dim)
        out[alt.orientation_form] = rep.passed
    return out
