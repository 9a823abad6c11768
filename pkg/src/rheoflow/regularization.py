"""Shifted relations ``G_eps(S, D) = G(S - eps D, D - eps S)`` and their resolvents.

For ``eps in (0, 1)`` the shifted relation has a single-valued, Lipschitz and
strongly monotone solution map ``D -> S*_eps(D)`` (and ``v -> s*_eps(v)`` at
the wall).  :func:`resolve_stress` computes it pointwise with a damped Newton
iteration; :func:`scalar_oracle_resolve` solves the collinear scalar reduction
by bisection and serves as an independent reference.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .numerics import bisect_sign_change
from .relations import BoundaryRelation, BulkRelation, ExplicitFormUnavailable
from .sampling import Sampler, fit_coercivity_budget
from .tensors import SymTensor2, as_mandel, norms


class NoConvergence(ArithmeticError):
    """Resolvent iteration failed; ``indices`` and ``residuals`` locate the failures."""

    def __init__(self, message, indices=None, residuals=None):
        super().__init__(message)
        self.indices = indices
        self.residuals = residuals


@dataclass(frozen=True)
class NewtonSettings:
    max_iter: int = 200
    tol_abs: float = 1e-10
    tol_rel: float = 1e-10
    damping: float = 1e-4  # Armijo sufficient-decrease constant
    max_backtrack: int = 30

    def __post_init__(self):
        if not self.tol_abs > 0:
            raise ValueError("tol_abs must be > 0")
        if self.tol_rel < 0 or self.max_iter < 1:
            raise ValueError("invalid Newton settings")
        if not 0 < self.damping < 1:
            raise ValueError("damping must lie in (0, 1)")


DEFAULT_SCHEDULE = (1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6)


@dataclass(frozen=True)
class _EpsRelation:
    base: BulkRelation | BoundaryRelation
    eps: float
    newton: NewtonSettings = field(default_factory=NewtonSettings)

    def __post_init__(self):
        if not 0.0 < self.eps < 1.0:
            raise ValueError(f"eps must lie in (0, 1), got {self.eps}")
        if self.base.target != self.target:
            raise TypeError(f"{type(self).__name__} needs a {self.target} relation")

    def residual(self, S: np.ndarray, D: np.ndarray) -> np.ndarray:
        e = self.eps
        return self.base.residual(S - e * D, D - e * S)

    def scalar_residual(self, sigma, m):
        e = self.eps
        return self.base.scalar_residual(sigma - e * m, m - e * sigma)

    def __call__(self, S, D):
        S_, dim = as_mandel(S)
        D_, _ = as_mandel(D)
        out = self.residual(S_, D_)
        return SymTensor2.from_mandel(out) if dim is not None else out

    def tolerance(self, S: np.ndarray, D: np.ndarray) -> np.ndarray:
        n = self.newton
        return n.tol_abs + n.tol_rel * (1.0 + norms(S) + norms(D))

    def initial_guess(self, D: np.ndarray) -> np.ndarray:
        try:
            return self.base.explicit_stress_array(D)
        except ExplicitFormUnavailable:
            return np.zeros_like(D)

    def solve(self, D: np.ndarray, S0: np.ndarray | None = None) -> np.ndarray:
        """Resolvent on a stack ``(..., m)`` of kinematic arguments."""
        D = np.asarray(D, dtype=float)
        if not np.all(np.isfinite(D)):
            raise ValueError("non-finite input")
        shape = D.shape
        Df = D.reshape(-1, shape[-1])
        if S0 is None:
            return _newton(self, Df, self.initial_guess(Df)).reshape(shape)
        S = np.array(S0, dtype=float).reshape(Df.shape)
        try:
            return _newton(self, Df, S).reshape(shape)
        except NoConvergence as exc:
            bad = exc.indices
        # the root is unique, so a stalled start may be replaced: first by the
        # start's magnitude along D, then by the default start
        nd = norms(Df[bad])
        along = np.where(nd[:, None] > 0, Df[bad] / np.where(nd > 0, nd, 1.0)[:, None], 0.0)
        S[bad] = norms(S[bad])[:, None] * along
        try:
            return _newton(self, Df, S).reshape(shape)
        except NoConvergence as exc:
            S[exc.indices] = self.initial_guess(Df[exc.indices])
        return _newton(self, Df, S).reshape(shape)


class EpsBulkRelation(_EpsRelation):
    target = "bulk"


class EpsBoundaryRelation(_EpsRelation):
    target = "boundary"


def make_eps_bulk(base: BulkRelation, eps: float, newton: NewtonSettings | None = None) -> EpsBulkRelation:
    return EpsBulkRelation(base, float(eps), newton or NewtonSettings())


def make_eps_boundary(base: BoundaryRelation, eps: float, newton: NewtonSettings | None = None) -> EpsBoundaryRelation:
    return EpsBoundaryRelation(base, float(eps), newton or NewtonSettings())


def _jacobian(F, S, D, R):
    """Central finite-difference Jacobian ``dF/dS`` for a stack, shape ``(n, m, m)``."""
    n, m = S.shape
    h = 1e-7 * (1.0 + np.abs(S))
    J = np.empty((n, m, m))
    for k in range(m):
        E = np.zeros_like(S)
        E[:, k] = h[:, k]
        J[:, :, k] = (F(S + E, D) - F(S - E, D)) / (2.0 * h[:, k : k + 1])
    return J


def _newton(rel: _EpsRelation, D: np.ndarray, S: np.ndarray) -> np.ndarray:
    """Damped Newton with Armijo backtracking and a contraction fallback."""
    ns = rel.newton
    F = rel.residual
    S = S.copy()
    R = F(S, D)
    res = norms(R)
    active = res > rel.tolerance(S, D)
    for _ in range(ns.max_iter):
        if not np.any(active):
            break
        idx = np.flatnonzero(active)
        Sa, Da, Ra = S[idx], D[idx], R[idx]
        J = _jacobian(F, Sa, Da, Ra)
        try:
            step = -np.linalg.solve(J, Ra[..., None])[..., 0]
        except np.linalg.LinAlgError:
            step = np.full_like(Sa, np.nan)
        bad = ~np.all(np.isfinite(step), axis=-1)
        step[bad] = -Ra[bad]
        phi0 = np.einsum("ij,ij->i", Ra, Ra)
        t = np.ones(len(idx))
        accepted = np.zeros(len(idx), dtype=bool)
        Snew, Rnew = Sa.copy(), Ra.copy()
        for _ in range(ns.max_backtrack):
            todo = ~accepted
            if not np.any(todo):
                break
            trial = Sa[todo] + t[todo, None] * step[todo]
            Rt = F(trial, Da[todo])
            phi = np.einsum("ij,ij->i", Rt, Rt)
            ok = phi <= (1.0 - 2.0 * ns.damping * t[todo]) * phi0[todo]
            sel = np.flatnonzero(todo)[ok]
            Snew[sel], Rnew[sel] = trial[ok], Rt[ok]
            accepted[sel] = True
            t[todo] *= 0.5
        stalled = np.flatnonzero(~accepted)
        if len(stalled):
            # contraction S <- S - lam G with lam = mu / L^2 from the local Jacobian
            Js = J[stalled]
            sym = 0.5 * (Js + np.swapaxes(Js, 1, 2))
            mu = np.linalg.eigvalsh(sym)[:, 0]
            L = np.linalg.norm(Js, ord=2, axis=(1, 2))
            lam = np.where((mu > 0) & (L > 0), mu / np.maximum(L, 1e-300) ** 2, 1e-3)
            trial = Sa[stalled] - lam[:, None] * Ra[stalled]
            Snew[stalled] = trial
            Rnew[stalled] = F(trial, Da[stalled])
        S[idx], R[idx] = Snew, Rnew
        res = norms(R)
        active = res > rel.tolerance(S, D)
    if np.any(active):
        bad = np.flatnonzero(active)
        raise NoConvergence(
            f"resolvent did not converge at {len(bad)} point(s); worst residual {res[bad].max():.3e}",
            bad, res[bad])
    # a few polishing steps, kept only where they lower the residual
    for _ in range(3):
        live = np.flatnonzero(res > 1e-13 * (1.0 + norms(S) + norms(D)))
        if not len(live):
            break
        J = _jacobian(F, S[live], D[live], R[live])
        try:
            step = -np.linalg.solve(J, R[live][..., None])[..., 0]
        except np.linalg.LinAlgError:
            break
        trial = S[live] + step
        Rt = F(trial, D[live])
        better = np.all(np.isfinite(trial), axis=-1) & (norms(Rt) < res[live])
        if not np.any(better):
            break
        S[live[better]], R[live[better]] = trial[better], Rt[better]
        res = norms(R)
    return S


def resolve_stress(rel: EpsBulkRelation, D, S0=None):
    """``S*_eps(D)``; SymTensor2 in gives SymTensor2 out."""
    if rel.target != "bulk":
        raise TypeError("resolve_stress needs an EpsBulkRelation")
    D_, dim = as_mandel(D)
    S0_ = None if S0 is None else as_mandel(S0)[0]
    S = rel.solve(D_, S0_)
    return SymTensor2.from_mandel(S) if dim is not None else S


def resolve_slip(rel: EpsBoundaryRelation, v, s0=None) -> np.ndarray:
    """``s*_eps(v)`` for tangential velocity vectors ``(..., k)``."""
    if rel.target != "boundary":
        raise TypeError("resolve_slip needs an EpsBoundaryRelation")
    v = np.asarray(v, dtype=float)
    return rel.solve(v, s0)


def scalar_oracle_resolve(rel: _EpsRelation, magnitude: float) -> float:
    """Solve the collinear scalar reduction for ``|S*_eps|`` given ``|D|``."""
    m = float(magnitude)
    if m < 0 or not np.isfinite(m):
        raise ValueError("magnitude must be finite and >= 0")
    if m == 0.0:
        return 0.0
    h = lambda x: rel.scalar_residual(x, m)
    hi = max(1.0, m)
    for _ in range(200):
        if h(hi) >= 0.0:
            break
        hi *= 2.0
    else:
        raise NoConvergence("scalar oracle: could not bracket root")
    if h(0.0) >= 0.0:
        return 0.0
    return float(bisect_sign_change(h, np.array(0.0), np.array(hi), iters=2000))


@dataclass(frozen=True)
class ContinuationResult:
    S: object
    increments: tuple[float, ...]
    cauchy: float
    cauchy_trend: bool


def continuation_resolve(base: BulkRelation | BoundaryRelation, D, eps_schedule=DEFAULT_SCHEDULE,
                         newton: NewtonSettings | None = None) -> ContinuationResult:
    """Resolve along a decreasing ``eps`` schedule, warm-starting each stage.

    ``cauchy`` is the norm of the last increment; ``cauchy_trend`` says whether
    the increments decreased along the schedule.
    """
    sched = [float(e) for e in eps_schedule]
    if not sched:
        raise ValueError("empty eps schedule")
    if any(b >= a for a, b in zip(sched, sched[1:])):
        raise ValueError("eps schedule must be strictly decreasing")
    if sched[-1] < 1e-8 or sched[0] >= 1.0:
        raise ValueError("eps schedule must lie in [1e-8, 1)")
    D_, dim = as_mandel(D)
    make = EpsBulkRelation if base.target == "bulk" else EpsBoundaryRelation
    S = None
    incs = []
    for e in sched:
        rel = make(base, e, newton or NewtonSettings())
        Snew = rel.solve(D_, S)
        if S is not None:
            incs.append(float(np.max(norms(Snew - S))))
        S = Snew
    trend = all(b <= a * (1 + 1e-12) + 1e-14 for a, b in zip(incs, incs[1:]))
    out = SymTensor2.from_mandel(S) if dim is not None else S
    return ContinuationResult(out, tuple(incs), incs[-1] if incs else 0.0, trend)


@dataclass(frozen=True)
class ResolventConstants:
    eps: float
    lipschitz: float
    monotone: float
    coercivity: tuple[float, float]

    def as_dict(self) -> dict:
        return {"eps": self.eps, "C1_eps": self.lipschitz, "C2_eps": self.monotone,
                "coercivity_C1": self.coercivity[0], "coercivity_C2": self.coercivity[1]}


def estimate_resolvent_constants(rel: _EpsRelation, sampler: Sampler | None = None, m: int | None = None,
                                 offset: float = 1.0) -> ResolventConstants:
    """Sampled Lipschitz/monotonicity constants of ``S*_eps`` and its coercivity pair.

    The coercivity pair is reported as the largest ``C1`` admissible with the
    fixed offset ``C2 = offset``, which keeps estimates comparable across eps.
    """
    sampler = sampler or Sampler()
    if m is None:
        m = 3 if rel.target == "bulk" else 2
    pts = sampler.shells(m, stream=11)
    nsh, cnt, _ = pts.shape
    D1 = pts.reshape(-1, m)
    rng = sampler.rng(12)
    pert = rng.standard_normal(D1.shape)
    scale = np.repeat(sampler.radii, cnt)[:, None]
    D2 = D1 + 0.1 * scale * pert / np.sqrt(m)
    S1 = rel.solve(D1)
    S2 = rel.solve(D2)
    dS, dD = S1 - S2, D1 - D2
    nd = norms(dD)
    keep = nd > 0
    lip = float(np.max(norms(dS)[keep] / nd[keep]))
    mono = float(np.min(np.einsum("ij,ij->i", dS, dD)[keep] / nd[keep] ** 2))
    r = rel.base.growth_exponent
    rp = r / (r - 1.0)
    sd = np.einsum("ij,ij->i", S1, D1)
    c1 = fit_coercivity_budget(sd, norms(S1), norms(D1), min(2.0, rp), min(2.0, r), 0.5, offset)
    return ResolventConstants(rel.eps, lip, mono, (c1, float(offset)))
