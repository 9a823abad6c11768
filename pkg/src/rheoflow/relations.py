"""Catalog of implicit isotropic bulk and boundary relations.

Every relation is stored in the collinear form

    G(S, D) = a(|S|, |D|) S - b(|S|, |D|) D,

with ``a >= 0`` and ``b >= 0`` chosen so that ``dG/dS >= 0`` (the canonical
orientation).  Explicit models put ``a = 1`` (stress form, ``S = S*(D)``) or
``b = 1`` (rate form, ``D = D*(S)``); Herschel-Bulkley keeps both factors.
Boundary relations ``g(s, v)`` use exactly the same machinery on tangential
vectors, so the code below calls the two magnitudes ``s`` (stress side) and
``d`` (kinematic side) for both.

Array arguments are Mandel vectors (bulk) or plain vectors (boundary) with
the component axis last; :class:`~rheoflow.tensors.SymTensor2` arguments are
accepted by the public ``eval_*`` / ``explicit_*`` functions.

Relation file format
--------------------
One ``key = value`` per line, ``#`` starts a comment::

    kind = carreau
    nu0 = 1.0
    nu_inf = 0.1
    A = 1.0
    n = 0.5

Optional ``form = viscosity`` selects the alternate ``a = 1`` form of the
stress-viscosity models (ellis, seely, glen, blatter).  ``kind = custom``
additionally needs ``target`` (bulk/boundary), ``alpha`` and ``beta``
expressions in ``s``, ``d`` and any numeric constants declared in the same
file, the growth exponent ``r`` (bulk) or ``q`` (boundary), ``graph``
(stress/rate: which side is solved for when sampling graph points) and
optionally ``orientation`` (+1 or -1).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType
from typing import Callable, Mapping

import numpy as np

from .expr import Expression, ExpressionError
from .kvfile import ConfigError, Entry, parse_file, parse_text
from .numerics import bisect_increasing, bisect_sign_change
from .tensors import SymTensor2, as_mandel, norms


class ExplicitFormUnavailable(LookupError):
    """The relation has no closed-form explicit branch in the requested direction."""


Mag = Callable[[np.ndarray, Mapping[str, float]], np.ndarray]


@dataclass(frozen=True)
class _Model:
    kind: str
    target: str
    required: tuple[str, ...]
    growth: Callable[[Mapping[str, float]], float]
    canonical: Callable[[Mapping[str, float]], str]
    optional: Mapping[str, float] = field(default_factory=dict)
    positive: tuple[str, ...] = ()
    nonneg: tuple[str, ...] = ()
    stress_mag: Mag | None = None
    rate_mag: Mag | None = None
    visc2: Mag | None = None
    implicit: Callable | None = None
    rate_solve: Mag | None = None
    kinks: Callable[[Mapping[str, float]], tuple] = lambda p: ()
    check: Callable[[Mapping[str, float]], None] | None = None


def _pos(x):
    return np.maximum(x, 0.0)


def _safe_ratio(num, den):
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        out = num / den
    return np.where(np.isfinite(out) & (den > 0), out, 0.0)


def _stress_or_rate(key):
    return lambda p: "stress" if p[key] >= 2.0 else "rate"


def _need(cond: bool, msg: str):
    if not cond:
        raise ValueError(msg)


def _power_stress(d, p, scale="nu0", exp="r"):
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        return 2.0 * p[scale] * d ** (p[exp] - 1.0)


def _power_rate(s, p, scale="nu0", exp="r"):
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        return (s / (2.0 * p[scale])) ** (1.0 / (p[exp] - 1.0))


def _eyring_factor(x):
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(x > 0, np.arcsinh(x) / np.where(x > 0, x, 1.0), 1.0)


def _hb_rate(s, p):
    """Invert ``2 nu0 (1+d^2)^((r-2)/2) d = (s - tau)^+`` for ``d``."""
    rhs = _pos(np.asarray(s, dtype=float) - p["tau"])
    f = lambda d: 2.0 * p["nu0"] * (1.0 + d * d) ** (0.5 * (p["r"] - 2.0)) * d
    out = np.zeros_like(rhs)
    live = rhs > 0
    if np.any(live):
        out[live] = bisect_increasing(f, rhs[live], 0.0, 1.0)
    return out


def _hb_coeffs(s, d, p):
    a = _safe_ratio(_pos(s - p["tau"]), s)
    b = 2.0 * p["nu0"] * (1.0 + d * d) ** (0.5 * (p["r"] - 2.0))
    return a, b


_BULK = [
    _Model(
        "navier_stokes", "bulk", ("nu",), lambda p: 2.0, lambda p: "stress",
        positive=("nu",),
        stress_mag=lambda d, p: 2.0 * p["nu"] * d,
        rate_mag=lambda s, p: s / (2.0 * p["nu"]),
    ),
    _Model(
        "power_law", "bulk", ("nu0", "r"), lambda p: p["r"], _stress_or_rate("r"),
        positive=("nu0",),
        stress_mag=_power_stress,
        rate_mag=_power_rate,
        check=lambda p: _need(p["r"] > 1.0, "power_law needs r > 1"),
    ),
    _Model(
        "carreau", "bulk", ("nu0", "nu_inf", "A", "n"), lambda p: 2.0, lambda p: "stress",
        positive=("nu0", "nu_inf", "A"),
        stress_mag=lambda d, p: 2.0 * (p["nu_inf"] + (p["nu0"] - p["nu_inf"]) / (1.0 + p["A"] * d * d) ** (0.5 * p["n"])) * d,
    ),
    _Model(
        "carreau_yasuda", "bulk", ("nu0", "nu_inf", "A", "a", "n"), lambda p: 2.0, lambda p: "stress",
        positive=("nu0", "nu_inf", "A", "a"),
        stress_mag=lambda d, p: 2.0 * (p["nu_inf"] + (p["nu0"] - p["nu_inf"]) / (1.0 + p["A"] * d ** p["a"]) ** (p["n"] / p["a"])) * d,
    ),
    _Model(
        "cross", "bulk", ("nu0", "nu_inf", "A", "n"), lambda p: 2.0, lambda p: "stress",
        positive=("nu0", "nu_inf", "A"),
        stress_mag=lambda d, p: 2.0 * (p["nu_inf"] + (p["nu0"] - p["nu_inf"]) / (1.0 + p["A"] * d ** p["n"])) * d,
        check=lambda p: _need(p["n"] > 0.0, "cross needs n > 0"),
    ),
    _Model(
        "eyring", "bulk", ("nu0", "nu_inf", "A"), lambda p: 2.0, lambda p: "stress",
        positive=("nu0", "nu_inf", "A"),
        stress_mag=lambda d, p: 2.0 * (p["nu_inf"] + (p["nu0"] - p["nu_inf"]) * _eyring_factor(p["A"] * d)) * d,
    ),
    _Model(
        "sisko", "bulk", ("nu_inf", "A", "n"), lambda p: 1.0 + max(p["n"], 1.0), lambda p: "stress",
        positive=("nu_inf", "A"),
        stress_mag=lambda d, p: 2.0 * (p["nu_inf"] * d + p["A"] * d ** p["n"]),
        check=lambda p: _need(p["n"] > 0.0, "sisko needs n > 0"),
    ),
    _Model(
        "ellis", "bulk", ("nu0", "A", "n"), lambda p: 1.0 + 1.0 / max(p["n"], 1.0), lambda p: "rate",
        positive=("nu0", "A"),
        rate_mag=lambda s, p: (s + p["A"] * s ** p["n"]) / (2.0 * p["nu0"]),
        visc2=lambda s, p: 2.0 * p["nu0"] / (1.0 + p["A"] * s ** (p["n"] - 1.0)),
        check=lambda p: _need(p["n"] > 0.0, "ellis needs n > 0"),
    ),
    _Model(
        "seely", "bulk", ("nu0", "nu_inf", "tau0"), lambda p: 2.0, lambda p: "rate",
        positive=("nu0", "nu_inf"),
        rate_mag=lambda s, p: s / (2.0 * (p["nu_inf"] + (p["nu0"] - p["nu_inf"]) * np.exp(-s / p["tau0"] ** 2))),
        visc2=lambda s, p: 2.0 * (p["nu_inf"] + (p["nu0"] - p["nu_inf"]) * np.exp(-s / p["tau0"] ** 2)),
        check=lambda p: _need(p["tau0"] != 0.0, "seely needs tau0 != 0"),
    ),
    _Model(
        "glen", "bulk", ("A", "m"), lambda p: 1.0 + 1.0 / p["m"], lambda p: "rate",
        positive=("A", "m"),
        rate_mag=lambda s, p: p["A"] * s ** p["m"],
        visc2=lambda s, p: s ** (1.0 - p["m"]) / p["A"],
    ),
    _Model(
        "blatter", "bulk", ("A", "tau0", "n"), lambda p: 1.0 + 1.0 / p["n"], lambda p: "rate",
        positive=("A", "n"),
        rate_mag=lambda s, p: s * (s * s + p["tau0"] ** 2) ** (0.5 * (p["n"] - 1.0)) / (2.0 * p["A"]),
        visc2=lambda s, p: 2.0 * p["A"] / (s * s + p["tau0"] ** 2) ** (0.5 * (p["n"] - 1.0)),
    ),
    _Model(
        "bingham", "bulk", ("nu", "tau"), lambda p: 2.0, lambda p: "rate",
        positive=("nu",), nonneg=("tau",),
        rate_mag=lambda s, p: _pos(s - p["tau"]) / (2.0 * p["nu"]),
        kinks=lambda p: (("s", p["tau"]),),
    ),
    _Model(
        "herschel_bulkley", "bulk", ("nu0", "tau", "r"), lambda p: p["r"], lambda p: "implicit",
        positive=("nu0",), nonneg=("tau",),
        implicit=_hb_coeffs,
        rate_solve=_hb_rate,
        kinks=lambda p: (("s", p["tau"]),),
        check=lambda p: _need(p["r"] > 1.0, "herschel_bulkley needs r > 1"),
    ),
    _Model(
        "activated_euler", "bulk", ("nu", "delta"), lambda p: 2.0, lambda p: "stress",
        positive=("nu",), nonneg=("delta",),
        stress_mag=lambda d, p: 2.0 * p["nu"] * _pos(d - p["delta"]),
        kinks=lambda p: (("d", p["delta"]),),
    ),
]

_BOUNDARY = [
    _Model(
        "navier_slip", "boundary", ("gamma",), lambda p: 2.0, lambda p: "stress",
        positive=("gamma",),
        stress_mag=lambda d, p: p["gamma"] * d,
        rate_mag=lambda s, p: s / p["gamma"],
    ),
    _Model(
        "power_slip", "boundary", ("gamma", "q"), lambda p: p["q"], _stress_or_rate("q"),
        positive=("gamma",),
        stress_mag=lambda d, p: p["gamma"] * d ** (p["q"] - 1.0),
        rate_mag=lambda s, p: (s / p["gamma"]) ** (1.0 / (p["q"] - 1.0)),
        check=lambda p: _need(p["q"] > 1.0, "power_slip needs q > 1"),
    ),
    _Model(
        "regularized_power_slip", "boundary", ("gamma", "q"), lambda p: p["q"], lambda p: "stress",
        positive=("gamma",),
        stress_mag=lambda d, p: p["gamma"] * (1.0 + d * d) ** (0.5 * (p["q"] - 2.0)) * d,
        check=lambda p: _need(p["q"] > 1.0, "regularized_power_slip needs q > 1"),
    ),
    _Model(
        "stick_slip", "boundary", ("sigma",), lambda p: 2.0, lambda p: "rate",
        optional={"gamma": 1.0},
        positive=("gamma",), nonneg=("sigma",),
        rate_mag=lambda s, p: _pos(s - p["sigma"]) / p["gamma"],
        kinks=lambda p: (("s", p["sigma"]),),
    ),
    _Model(
        "activated_navier_slip", "boundary", ("gamma", "beta"), lambda p: 2.0, lambda p: "stress",
        positive=("gamma",), nonneg=("beta",),
        stress_mag=lambda d, p: p["gamma"] * _pos(d - p["beta"]),
        kinks=lambda p: (("d", p["beta"]),),
    ),
]

CATALOG: Mapping[str, Mapping[str, _Model]] = MappingProxyType({
    "bulk": MappingProxyType({m.kind: m for m in _BULK}),
    "boundary": MappingProxyType({m.kind: m for m in _BOUNDARY}),
})
BULK_KINDS = tuple(CATALOG["bulk"]) + ("custom",)
BOUNDARY_KINDS = tuple(CATALOG["boundary"]) + ("custom",)
VISCOSITY_FORM_KINDS = tuple(m.kind for m in _BULK if m.visc2 is not None)
_CUSTOM_KEYS = ("alpha", "beta", "graph", "orientation", "target")


@dataclass(frozen=True, eq=False)
class _Relation:
    """Shared implementation; use :class:`BulkRelation` or :class:`BoundaryRelation`."""

    kind: str
    params: Mapping[str, float] = field(default_factory=dict)
    form: str = "canonical"
    alpha: str | None = None
    beta: str | None = None
    orientation: int = 1
    graph: str = "stress"

    target = "bulk"
    exponent_key = "r"

    def __post_init__(self):
        params = {k: float(v) for k, v in dict(self.params).items()}
        for k, v in params.items():
            if not np.isfinite(v):
                raise ValueError(f"parameter {k} must be finite")
        if self.kind == "custom":
            self._init_custom(params)
        else:
            model = CATALOG[self.target].get(self.kind)
            if model is None:
                kinds = ", ".join(CATALOG[self.target])
                raise ValueError(f"unknown {self.target} kind {self.kind!r} (expected one of {kinds}, custom)")
            for k, v in model.optional.items():
                params.setdefault(k, v)
            allowed = set(model.required) | set(model.optional)
            missing = [k for k in model.required if k not in params]
            extra = sorted(set(params) - allowed)
            if missing:
                raise ValueError(f"{self.kind}: missing parameter(s) {', '.join(missing)}")
            if extra:
                raise ValueError(f"{self.kind}: unknown parameter(s) {', '.join(extra)}")
            for k in model.positive:
                if not params[k] > 0.0:
                    raise ValueError(f"{self.kind}: {k} must be > 0")
            for k in model.nonneg:
                if not params[k] >= 0.0:
                    raise ValueError(f"{self.kind}: {k} must be >= 0")
            if model.check is not None:
                model.check(params)
            if self.form not in ("canonical", "viscosity"):
                raise ValueError(f"form must be 'canonical' or 'viscosity', got {self.form!r}")
            if self.form == "viscosity" and model.visc2 is None:
                raise ValueError(f"{self.kind} has no viscosity form")
            object.__setattr__(self, "_model", model)
        object.__setattr__(self, "params", MappingProxyType(dict(sorted(params.items()))))

    def _init_custom(self, params):
        k = self.exponent_key
        if k not in params:
            raise ValueError(f"custom relation needs growth exponent {k}")
        if not params[k] > 1.0:
            raise ValueError(f"growth exponent {k} must be > 1")
        if self.alpha is None or self.beta is None:
            raise ValueError("custom relation needs alpha and beta expressions")
        if self.orientation not in (1, -1):
            raise ValueError("orientation must be +1 or -1")
        if self.graph not in ("stress", "rate"):
            raise ValueError("graph must be 'stress' or 'rate'")
        names = ("s", "d") + tuple(n for n in params if n != k)
        try:
            ea = Expression(str(self.alpha), names)
            eb = Expression(str(self.beta), names)
        except ExpressionError as exc:
            raise ValueError(str(exc)) from None
        object.__setattr__(self, "_model", None)
        object.__setattr__(self, "_exprs", (ea, eb))

    # identity ---------------------------------------------------------
    def _key(self):
        return (type(self).__name__, self.kind, tuple(self.params.items()), self.form,
                self.alpha, self.beta, self.orientation, self.graph)

    def __eq__(self, other):
        return isinstance(other, _Relation) and self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    def __repr__(self):
        ps = ", ".join(f"{k}={v:g}" for k, v in self.params.items())
        extra = "" if self.form == "canonical" else f", form={self.form}"
        return f"{type(self).__name__}({self.kind}: {ps}{extra})"

    # properties -------------------------------------------------------
    @property
    def growth_exponent(self) -> float:
        if self.kind == "custom":
            return self.params[self.exponent_key]
        return float(self._model.growth(self.params))

    @property
    def dual_exponent(self) -> float:
        r = self.growth_exponent
        return r / (r - 1.0)

    @property
    def orientation_form(self) -> str:
        """One of ``stress``, ``rate``, ``implicit``, ``viscosity``, ``custom``."""
        if self.kind == "custom":
            return "custom"
        if self.form == "viscosity":
            return "viscosity"
        return self._model.canonical(self.params)

    @property
    def available_forms(self) -> tuple[str, ...]:
        if self.kind != "custom" and self._model.visc2 is not None:
            return ("canonical", "viscosity")
        return ("canonical",)

    def with_form(self, form: str):
        return type(self)(self.kind, dict(self.params), form, self.alpha, self.beta,
                          self.orientation, self.graph)

    @property
    def kinks(self) -> tuple[tuple[str, float], ...]:
        """Activation thresholds as ``(side, magnitude)`` pairs, side in ``{'s','d'}``."""
        if self.kind == "custom":
            return ()
        return tuple((side, float(v)) for side, v in self._model.kinks(self.params) if v > 0)

    @property
    def has_explicit_stress(self) -> bool:
        return self.kind != "custom" and self._model.stress_mag is not None

    @property
    def has_explicit_rate(self) -> bool:
        return self.kind != "custom" and (self._model.rate_mag is not None or self._model.rate_solve is not None)

    # evaluation ---------------------------------------------------------
    def coefficients(self, s, d):
        """Scalar factors ``(a, b)`` of ``G = a S - b D`` at magnitudes ``s, d``."""
        s = np.asarray(s, dtype=float)
        d = np.asarray(d, dtype=float)
        s, d = np.broadcast_arrays(s, d)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            if self.kind == "custom":
                ea, eb = self._exprs
                consts = {k: v for k, v in self.params.items() if k != self.exponent_key}
                a = np.broadcast_to(ea(s=s, d=d, **consts), s.shape) * self.orientation
                b = np.broadcast_to(eb(s=s, d=d, **consts), s.shape) * self.orientation
                return np.asarray(a, dtype=float), np.asarray(b, dtype=float)
            m, p = self._model, self.params
            form = self.orientation_form
            one = np.ones(s.shape)
            if form == "stress":
                return one, _safe_ratio(m.stress_mag(d, p), d)
            if form == "rate":
                return _safe_ratio(m.rate_mag(s, p), s), one
            if form == "viscosity":
                b = m.visc2(s, p)
                return one, np.where(np.isfinite(b), b, 0.0)
            return m.implicit(s, d, p)

    def residual(self, S: np.ndarray, D: np.ndarray) -> np.ndarray:
        """``G(S, D)`` on arrays with the component axis last (no input checks)."""
        a, b = self.coefficients(norms(S), norms(D))
        return a[..., None] * S - b[..., None] * D

    def scalar_residual(self, u, w):
        """Collinear reduction ``a(|u|,|w|) u - b(|u|,|w|) w`` for signed scalars."""
        u = np.asarray(u, dtype=float)
        w = np.asarray(w, dtype=float)
        a, b = self.coefficients(np.abs(u), np.abs(w))
        return a * u - b * w

    def stress_magnitude(self, d):
        """``|S*(D)|`` as a function of ``|D|``."""
        if not self.has_explicit_stress:
            raise ExplicitFormUnavailable(f"{self.kind} has no explicit stress branch")
        d = np.asarray(d, dtype=float)
        return _safe_ratio(self._model.stress_mag(d, self.params), d) * d

    def rate_magnitude(self, s):
        """``|D*(S)|`` as a function of ``|S|``."""
        if not self.has_explicit_rate:
            raise ExplicitFormUnavailable(f"{self.kind} has no explicit rate branch")
        s = np.asarray(s, dtype=float)
        if self._model.rate_mag is not None:
            return _safe_ratio(self._model.rate_mag(s, self.params), s) * s
        return self._model.rate_solve(s, self.params)

    def explicit_stress_array(self, D: np.ndarray) -> np.ndarray:
        if not self.has_explicit_stress:
            raise ExplicitFormUnavailable(f"{self.kind} has no explicit stress branch")
        d = norms(D)
        return _safe_ratio(self._model.stress_mag(d, self.params), d)[..., None] * D

    def explicit_rate_array(self, S: np.ndarray) -> np.ndarray:
        if not self.has_explicit_rate:
            raise ExplicitFormUnavailable(f"{self.kind} has no explicit rate branch")
        s = norms(S)
        if self._model.rate_mag is not None:
            fac = _safe_ratio(self._model.rate_mag(s, self.params), s)
        else:
            fac = _safe_ratio(self._model.rate_solve(s, self.params), s)
        return fac[..., None] * S

    def graph_magnitudes(self, t) -> tuple[np.ndarray, np.ndarray]:
        """Magnitudes ``(|S|, |D|)`` of graph points parameterized by ``t >= 0``.

        ``t`` is the magnitude on the explicit side of the canonical form
        (``|D|`` for stress forms, ``|S|`` for rate and implicit forms).
        """
        t = np.asarray(t, dtype=float)
        if self.kind == "custom":
            return self._custom_graph(t)
        form = self._model.canonical(self.params)
        if form == "stress":
            return self.stress_magnitude(t), t
        return t, self.rate_magnitude(t)

    def _custom_graph(self, t):
        # solve the collinear scalar relation on the declared side
        if self.graph == "stress":
            h = lambda x: self.scalar_residual(x, t)
        else:
            h = lambda x: -self.scalar_residual(t, x)
        lo = np.zeros_like(t)
        hi = np.maximum(1.0, 2.0 * t)
        for _ in range(200):
            short = h(hi) < 0.0
            if not np.any(short):
                break
            hi = np.where(short, 2.0 * hi, hi)
        else:
            raise ArithmeticError("custom relation: could not bracket graph point")
        x = bisect_sign_change(h, lo, hi)
        x = np.where(h(lo) >= 0.0, 0.0, x)
        return (x, t) if self.graph == "stress" else (t, x)

    def graph_points(self, t, directions) -> tuple[np.ndarray, np.ndarray]:
        """Collinear graph points ``(S, D)`` with unit ``directions`` (last axis)."""
        s, d = self.graph_magnitudes(t)
        e = np.asarray(directions, dtype=float)
        e = e / norms(e)[..., None]
        if self.has_explicit_stress and self._model.canonical(self.params) == "stress":
            D = d[..., None] * e
            return self.explicit_stress_array(D), D
        if self.has_explicit_rate:
            S = s[..., None] * e
            return S, self.explicit_rate_array(S)
        return s[..., None] * e, d[..., None] * e


class BulkRelation(_Relation):
    """Implicit bulk relation ``G(S, D) = 0`` (growth exponent ``r``)."""

    target = "bulk"
    exponent_key = "r"


class BoundaryRelation(_Relation):
    """Implicit wall relation ``g(s, v) = 0`` on tangential vectors (exponent ``q``)."""

    target = "boundary"
    exponent_key = "q"


# -- public pointwise API ------------------------------------------------------

def _prep(*xs):
    arrays = []
    dims = set()
    wrap = False
    for x in xs:
        arr, dim = as_mandel(x)
        if dim is not None:
            wrap = True
            dims.add(dim)
        if not np.all(np.isfinite(arr)):
            raise ValueError("non-finite input")
        arrays.append(arr)
    if len(dims) > 1:
        raise ValueError("dimension mismatch")
    shapes = {a.shape for a in arrays}
    if len(shapes) > 1:
        raise ValueError(f"shape mismatch: {sorted(shapes)}")
    return arrays, wrap


def _check_target(rel, target):
    if rel.target != target:
        raise TypeError(f"expected a {target} relation, got {type(rel).__name__}")


def eval_bulk(rel: BulkRelation, S, D):
    """Residual ``G(S, D)``; SymTensor2 in gives SymTensor2 out."""
    _check_target(rel, "bulk")
    (S_, D_), wrap = _prep(S, D)
    out = rel.residual(S_, D_)
    return SymTensor2.from_mandel(out) if wrap else out


def eval_boundary(rel: BoundaryRelation, s, v):
    """Residual ``g(s, v)`` for tangential traction ``s`` and slip velocity ``v``."""
    _check_target(rel, "boundary")
    (s_, v_), _ = _prep(s, v)
    if s_.ndim == 0:
        raise ValueError("boundary arguments must be vectors")
    return rel.residual(s_, v_)


def explicit_stress(rel: BulkRelation, D):
    _check_target(rel, "bulk")
    (D_,), wrap = _prep(D)
    out = rel.explicit_stress_array(D_)
    return SymTensor2.from_mandel(out) if wrap else out


def explicit_rate(rel: BulkRelation, S):
    _check_target(rel, "bulk")
    (S_,), wrap = _prep(S)
    out = rel.explicit_rate_array(S_)
    return SymTensor2.from_mandel(out) if wrap else out


def explicit_traction(rel: BoundaryRelation, v):
    _check_target(rel, "boundary")
    (v_,), _ = _prep(v)
    return rel.explicit_stress_array(v_)


def explicit_slip(rel: BoundaryRelation, s):
    _check_target(rel, "boundary")
    (s_,), _ = _prep(s)
    return rel.explicit_rate_array(s_)


@dataclass(frozen=True)
class DissipationSplit:
    total: float
    rate_part: float
    stress_part: float


def dissipation_split(rel: BulkRelation, S, D, tol: float = 1e-9) -> DissipationSplit:
    """Split ``S:D`` of a power-law graph point into its ``r`` and ``r'`` parts."""
    if rel.kind != "power_law":
        raise ValueError("dissipation_split is defined for power_law relations only")
    (S_, D_), _ = _prep(S, D)
    nu0, r = rel.params["nu0"], rel.params["r"]
    res = S_ - rel.explicit_stress_array(D_)
    if np.max(norms(res)) > tol * (1.0 + np.max(norms(S_))):
        raise ValueError("(S, D) is not on the power-law graph")
    total = float(np.sum(S_ * D_))
    rate_part = float(2.0 * nu0 / r * norms(D_) ** r)
    stress_part = float((r - 1.0) / (r * (2.0 * nu0) ** (1.0 / (r - 1.0))) * norms(S_) ** (r / (r - 1.0)))
    return DissipationSplit(total, rate_part, stress_part)


# -- serialization -------------------------------------------------------------

def _fmt(v: float) -> str:
    return repr(float(v))


def relation_to_text(rel: _Relation) -> str:
    lines = [f"kind = {rel.kind}"]
    if rel.kind == "custom":
        lines += [
            f"target = {rel.target}",
            f"alpha = {rel.alpha}",
            f"beta = {rel.beta}",
            f"graph = {rel.graph}",
            f"orientation = {rel.orientation}",
        ]
    elif rel.form != "canonical":
        lines.append(f"form = {rel.form}")
    lines += [f"{k} = {_fmt(v)}" for k, v in rel.params.items()]
    return "\n".join(lines) + "\n"


def relation_from_entries(entries: list[Entry], target: str | None = None, path: str | None = None):
    """Build a relation from parsed entries (section names are ignored)."""
    by_key = {e.key: e for e in entries}
    if "kind" not in by_key:
        raise ConfigError("missing 'kind'", entries[0].line if entries else None, path)
    kind = by_key["kind"].value
    form = by_key["form"].value if "form" in by_key else "canonical"
    strings = {}
    params = {}
    for e in entries:
        if e.key in ("kind", "form"):
            continue
        if kind == "custom" and e.key in _CUSTOM_KEYS:
            strings[e.key] = e.value
            continue
        try:
            params[e.key] = float(e.value)
        except ValueError:
            raise ConfigError(f"{e.key} must be a number, got {e.value!r}", e.line, path) from None
    if kind == "custom":
        target = strings.get("target", target)
    elif target is None:
        target = "bulk" if kind in CATALOG["bulk"] else "boundary" if kind in CATALOG["boundary"] else None
    if target not in ("bulk", "boundary"):
        raise ConfigError(f"unknown relation kind {kind!r}", by_key["kind"].line, path)
    cls = BulkRelation if target == "bulk" else BoundaryRelation
    kwargs = {}
    if kind == "custom":
        kwargs = dict(alpha=strings.get("alpha"), beta=strings.get("beta"),
                      graph=strings.get("graph", "stress"))
        if "orientation" in strings:
            try:
                kwargs["orientation"] = int(float(strings["orientation"]))
            except ValueError:
                raise ConfigError("orientation must be +1 or -1", by_key["orientation"].line, path) from None
    try:
        return cls(kind, params, form, **kwargs)
    except ValueError as exc:
        line = _blame(str(exc), by_key)
        raise ConfigError(str(exc), line, path) from None


def _blame(msg: str, by_key: Mapping[str, Entry]) -> int | None:
    for k, e in by_key.items():
        if k != "kind" and (f" {k} " in f" {msg} " or f"{k}," in msg or msg.endswith(k)):
            return e.line
    return by_key["kind"].line if "kind" in by_key else None


def relation_from_text(text: str, target: str | None = None, path: str | None = None):
    return relation_from_entries(parse_text(text, path), target, path)


def load_relation(path: str | Path, target: str | None = None):
    return relation_from_entries(parse_file(path), target, str(path))


def save_relation(rel: _Relation, path: str | Path) -> None:
    Path(path).write_text(relation_to_text(rel))


def bundled_relation_dir() -> Path:
    return Path(__file__).parent / "data" / "relations"


def bundled_relations() -> dict[str, _Relation]:
    """All relation files shipped with the package, keyed by file stem."""
    return {p.stem: load_relation(p) for p in sorted(bundled_relation_dir().glob("*.rel"))}
