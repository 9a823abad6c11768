"""Semi-analytic reference solutions built from the relations alone.

Nothing here touches the flow solver.  Channel coordinates are centred:
``y in [-H, H]`` with walls at ``y = +-H``.
"""

from __future__ import annotations

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .numerics import bisect_increasing
from .relations import BoundaryRelation, BulkRelation

SQRT2 = np.sqrt(2.0)


def rate_of_stress(rel, s, eps: float | None = None):
    """``|D|`` on the graph at ``|S| = s`` (least rate where the graph is vertical).

    With ``eps`` the graph of the regularized relation is used: its points are
    ``((S0 + eps D0), (D0 + eps S0)) / (1 - eps^2)`` for base graph points
    ``(S0, D0)``, found by bisection on the base parameterization.
    """
    s = np.asarray(s, dtype=float)
    if eps:
        c = 1.0 / (1.0 - eps * eps)
        mags = lambda t: rel.graph_magnitudes(t)
        f = lambda t: c * (mags(t)[0] + eps * mags(t)[1])
        t = bisect_increasing(f, s, iters=400)
        s0, d0 = mags(t)
        return np.where(s > 0, c * (d0 + eps * s0), 0.0)
    if rel.has_explicit_rate:
        return np.asarray(rel.rate_magnitude(s), dtype=float)
    if rel.has_explicit_stress:
        out = bisect_increasing(rel.stress_magnitude, s, iters=400)
        return np.where(s > 0, out, 0.0)
    sg, dg = rel.graph_magnitudes(np.atleast_1d(s)) if rel.graph == "rate" else (None, None)
    if dg is not None:
        return dg.reshape(s.shape)
    # stress-parameterized custom graph: invert |S|(|D|)
    f = lambda d: rel.graph_magnitudes(d)[0]
    return bisect_increasing(f, s, iters=400)


def wall_slip(boundary: BoundaryRelation, traction: float, eps: float | None = None) -> float:
    """Slip speed with ``|s| = traction`` on the boundary graph."""
    if traction < 0:
        raise ValueError("traction magnitude must be >= 0")
    try:
        return float(rate_of_stress(boundary, traction, eps))
    except ArithmeticError as exc:
        raise ValueError(f"boundary relation unsolvable at traction {traction:g}") from exc


def shear_rate(bulk: BulkRelation, f: float, y, eps: float | None = None):
    """``du/dy`` magnitude: ``S_xy = -f y`` with ``|S| = sqrt(2)|S_xy|``, ``|D| = |u'|/sqrt(2)``."""
    return SQRT2 * rate_of_stress(bulk, SQRT2 * abs(f) * np.abs(np.asarray(y, dtype=float)), eps)


def analytic_poiseuille(bulk: BulkRelation, boundary: BoundaryRelation, H: float, f: float, y=None,
                        tol: float = 1e-10, eps: float | None = None):
    """Steady unidirectional profile ``u(y)`` of a channel driven by force ``f``.

    ``u(y) = u_slip + int_{|y|}^{H} rate(f yh) dyh`` with ``u_slip`` solved
    from the boundary relation at ``|s| = f H``.  The velocity carries the
    sign of ``f``.  ``eps`` selects the regularized relations instead of
    their limit.  Returns ``(y, u, u_slip)``.
    """
    if not H > 0:
        raise ValueError("half width must be > 0")
    y = np.linspace(-H, H, 201) if y is None else np.asarray(y, dtype=float)
    if np.any(np.abs(y) > H * (1 + 1e-12)):
        raise ValueError("sample points must lie in [-H, H]")
    sgn = 1.0 if f >= 0 else -1.0
    if f == 0:
        return y, np.zeros_like(y), 0.0
    us = wall_slip(boundary, abs(f) * H, eps)
    g = lambda t: float(shear_rate(bulk, f, t, eps))
    # kinks of the rate inside (0, H) split the quadrature
    breaks = []
    for side, val in bulk.kinks:
        if side == "s":
            yk = val / (SQRT2 * abs(f))
            if eps:
                yk /= 1.0 - eps * eps
            if 0 < yk < H:
                breaks.append(yk)
    a = np.clip(np.abs(y), 0.0, H)
    nodes = np.unique(np.concatenate([[H], a, breaks]))[::-1]
    cum = {H: 0.0}
    acc = 0.0
    for hi_, lo_ in zip(nodes[:-1], nodes[1:]):
        val, _ = quad(g, lo_, hi_, epsabs=tol, epsrel=tol, limit=200)
        acc += val
        cum[lo_] = acc
    u = np.array([us + cum[v] for v in a])
    return y, sgn * u, sgn * us


def plug_halfwidth(bulk: BulkRelation, f: float) -> float:
    """Half width of the region where the stress stays below the yield value."""
    for side, val in bulk.kinks:
        if side == "s":
            return val / (SQRT2 * abs(f))
    return 0.0


def stokes_wavenumber(bulk: BulkRelation, boundary: BoundaryRelation, H: float, eps: float | None = None) -> float:
    """Smallest ``k > 0`` with ``nu k tan(k H) = gamma`` for linear relations.

    ``nu`` and ``gamma`` are the effective coefficients ``S = 2 nu D`` and
    ``s = gamma v`` (of the regularized relations when ``eps`` is given).
    """
    nu, gamma = linear_coefficients(bulk, boundary, eps)
    c = gamma / nu
    return brentq(lambda k: k * np.tan(k * H) - c, 1e-12 / H, (np.pi / 2 - 1e-12) / H, xtol=1e-15, rtol=1e-15)


def linear_coefficients(bulk: BulkRelation, boundary: BoundaryRelation, eps: float | None = None):
    if bulk.kind != "navier_stokes" or boundary.kind != "navier_slip":
        raise ValueError("decaying mode needs navier_stokes with navier_slip")
    nu2, g = 2.0 * bulk.params["nu"], boundary.params["gamma"]
    if eps:
        nu2 = (nu2 + eps) / (1.0 + nu2 * eps)
        g = (g + eps) / (1.0 + g * eps)
    return 0.5 * nu2, g


def stokes_decay(bulk: BulkRelation, boundary: BoundaryRelation, H: float, amplitude: float, y, t,
                 eps: float | None = None):
    """Decaying shear mode ``A cos(k y) exp(-nu k^2 t)`` in centred coordinates."""
    nu, _ = linear_coefficients(bulk, boundary, eps)
    k = stokes_wavenumber(bulk, boundary, H, eps)
    return amplitude * np.cos(k * np.asarray(y, dtype=float)) * np.exp(-nu * k * k * t)
